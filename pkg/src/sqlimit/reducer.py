"""Dispersive reduction of general parametrically coupled mode systems.

Covers n mechanical modes coupled to n' external (optical or electrical)
modes through position-dependent mode mixing: the external frequency matrix
at clamped mechanical positions q reads

    M_ij(q) = omega_i delta_ij + sum_nu chi[i, j, nu] q_nu

with chi symmetric in (i, j).  When couplings are weak against the mode
spacings (dispersive) and mechanical frequencies slow (adiabatic), second
order perturbation theory turns M into shifted eigenfrequencies

    omega_i'(q) = omega_i + sum_nu chi[i,i,nu] q_nu
                + sum_{j != i} (sum_nu chi[i,j,nu] q_nu)^2 / (omega_i - omega_j)

whose quadratic part enables number readout of a chosen mechanical mode,
while the residual linear mixing with the driven mode carries back-action.
Keeping only the driven mode and its nearest neighbour reproduces the
two-mode cavity model, so the same standard quantum limit applies; this
module builds that tripartite equivalent and an exact eigensolver oracle
for the perturbative formulas.

Indices are 0-based throughout; the probe pair is external mode 0 driven,
mechanical mode 0 read out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .params import DerivedQuantities, RegimeCheck, RegimeReport

__all__ = [
    "DegenerateModes",
    "QndViolated",
    "ParametricSystem",
    "DispersiveReduction",
    "TripartiteEquivalent",
    "validate_dispersive",
    "reduce",
    "brute_force_eigen",
    "to_tripartite",
]

#: Relative mode spacing below which the perturbation series is rejected.
DEGENERACY_TOL = 1e-6


class DegenerateModes(ValueError):
    """External modes too close in frequency for the dispersive expansion."""


class QndViolated(ValueError):
    """Couplings break the conditions for a purely quadratic probe."""


@dataclass(frozen=True)
class ParametricSystem:
    """n mechanical modes parametrically coupled to n' external modes.

    ``chi[i, j, nu]`` couples external pair (i, j) through mechanical mode
    nu, in rad/s per unit normalized displacement; it must be symmetric in
    (i, j).  ``drive`` is (external mode index, classical amplitude).
    Optional per-external-mode decay rates ``kappa`` let the tripartite
    equivalent feed the resolution analysis.
    """

    Omega: np.ndarray        # (n,) mechanical frequencies, rad/s
    omega: np.ndarray        # (n',) external frequencies, rad/s
    chi: np.ndarray          # (n', n', n) coupling tensor, rad/s
    drive: tuple[int, float] = (0, 0.0)
    kappa: np.ndarray | None = None
    gamma_m: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        Omega = np.atleast_1d(np.asarray(self.Omega, dtype=float))
        chi = np.asarray(self.chi, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "Omega", Omega)
        object.__setattr__(self, "chi", chi)
        n_ext, n_mech = len(omega), len(Omega)
        if chi.shape != (n_ext, n_ext, n_mech):
            raise ValueError(f"chi must have shape {(n_ext, n_ext, n_mech)}, "
                             f"got {chi.shape}")
        if np.any(Omega <= 0) or np.any(omega <= 0):
            raise ValueError("all mode frequencies must be positive")
        if not np.allclose(chi, chi.transpose(1, 0, 2)):
            raise ValueError("chi must be symmetric in its external indices")
        idx, amp = self.drive
        if not 0 <= idx < n_ext:
            raise ValueError("drive index out of range")
        if self.kappa is not None:
            kappa = np.asarray(self.kappa, dtype=float)
            if kappa.shape != (n_ext,) or np.any(kappa <= 0):
                raise ValueError("kappa must hold one positive rate per mode")
            object.__setattr__(self, "kappa", kappa)

    @property
    def n_mech(self) -> int:
        return len(self.Omega)

    @property
    def n_ext(self) -> int:
        return len(self.omega)


def _pair_gaps(omega: np.ndarray) -> np.ndarray:
    return omega[:, None] - omega[None, :]


def validate_dispersive(system: ParametricSystem,
                        margin: float = 0.1) -> RegimeReport:
    """Per-pair ratios |chi|/|gap| (dispersive) and Omega/|gap| (adiabatic).

    Degenerate external pairs are flagged with an infinite ratio rather
    than raising, so the report stays usable for diagnosis.
    """
    gaps = _pair_gaps(system.omega)
    checks = []
    for i in range(system.n_ext):
        for j in range(i + 1, system.n_ext):
            gap = abs(gaps[i, j])
            chi_max = float(np.max(np.abs(system.chi[i, j, :])))
            ratio = chi_max / gap if gap > 0 else math.inf
            checks.append(RegimeCheck(f"|chi[{i},{j}]|/|gap[{i},{j}]|",
                                      ratio, margin))
            om_max = float(np.max(system.Omega))
            ratio_a = om_max / gap if gap > 0 else math.inf
            checks.append(RegimeCheck(f"Omega_max/|gap[{i},{j}]|",
                                      ratio_a, margin))
    return RegimeReport(checks=tuple(checks))


def _check_gaps(system: ParametricSystem):
    gaps = _pair_gaps(system.omega)
    scale = float(np.max(system.omega))
    for i in range(system.n_ext):
        for j in range(i + 1, system.n_ext):
            if abs(gaps[i, j]) < DEGENERACY_TOL * scale:
                raise DegenerateModes(
                    f"external modes {i} and {j} separated by "
                    f"{abs(gaps[i, j]):.3g} < {DEGENERACY_TOL:.0e} * {scale:.3g}")


@dataclass(frozen=True)
class DispersiveReduction:
    """Effective frequencies omega_i'(q) to second order in the couplings.

    omega_i'(q) = omega[i] + linear[i] . q + q . quadratic[i] . q
    ``residual_linear[i]`` is the surviving linear mixing of idle mode i
    with the driven mode, chi[0, i, 0] * amplitude / (omega_i - omega_0),
    evaluated at the drive's classical amplitude.
    ``qnd_ok`` records whether the probe pair sees a purely quadratic
    coupling: chi[0,0,:] = 0 and chi[0,i,nu] = 0 for nu != 0.
    """

    omega: np.ndarray                 # (n',) constant terms
    linear: np.ndarray                # (n', n)
    quadratic: np.ndarray             # (n', n, n)
    residual_linear: np.ndarray       # (n',), entry 0 is zero by construction
    qnd_ok: bool
    probe_quadratic: float            # quadratic coefficient of mode 0 in q_0

    def omega_prime(self, q) -> np.ndarray:
        """Evaluate all effective frequencies at clamped positions q."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return (self.omega + self.linear @ q
                + np.einsum("inm,n,m->i", self.quadratic, q, q))


def reduce(system: ParametricSystem) -> DispersiveReduction:
    """Second-order dispersive reduction of the coupled-mode system.

    The quadratic coefficient keeps the full bilinear form in the mechanical
    displacements, sum_{j!=i} chi[i,j,:] outer chi[i,j,:] / (omega_i -
    omega_j); its (0, 0) element on the driven mode is the number-readout
    coupling.  Raises :class:`DegenerateModes` for near-degenerate external
    pairs.
    """
    _check_gaps(system)
    n_ext, n_mech = system.n_ext, system.n_mech
    gaps = _pair_gaps(system.omega)
    linear = np.array([system.chi[i, i, :] for i in range(n_ext)])
    quadratic = np.zeros((n_ext, n_mech, n_mech))
    for i in range(n_ext):
        for j in range(n_ext):
            if j == i:
                continue
            v = system.chi[i, j, :]
            quadratic[i] += np.outer(v, v) / gaps[i, j]

    drive_idx, amp = system.drive
    if drive_idx != 0:
        raise ValueError("probe conventions assume the driven mode is index 0")
    residual = np.zeros(n_ext)
    for i in range(1, n_ext):
        residual[i] = system.chi[0, i, 0] * amp / (system.omega[i] - system.omega[0])

    qnd_ok = (np.allclose(system.chi[0, 0, :], 0.0)
              and np.allclose(system.chi[0, 1:, 1:], 0.0))
    return DispersiveReduction(omega=system.omega.copy(), linear=linear,
                               quadratic=quadratic, residual_linear=residual,
                               qnd_ok=qnd_ok,
                               probe_quadratic=float(quadratic[0, 0, 0]))


def brute_force_eigen(system: ParametricSystem, q_fixed) -> np.ndarray:
    """Exact external-mode frequencies at clamped mechanical positions.

    Eigenvalues of M(q) = diag(omega) + chi . q, ascending.  Serves as the
    oracle for :func:`reduce`: the perturbative omega_i'(q) match these to
    third order in chi.
    """
    q = np.atleast_1d(np.asarray(q_fixed, dtype=float))
    if q.shape != (system.n_mech,):
        raise ValueError(f"q_fixed must have shape ({system.n_mech},)")
    m = np.diag(system.omega) + system.chi @ q
    return np.linalg.eigvalsh(m)


@dataclass(frozen=True)
class TripartiteEquivalent:
    """Reduced three-mode model: probe mechanics, driven mode, nearest idle.

    Carries the mapping onto the two-mode cavity analysis: half the gap to
    the nearest idle mode plays omega_s, the probe coupling chi[0, idle, 0]
    plays G_0, and the drive amplitude plays c_bar.  ``far_quadratic`` is
    the part of the probe's number-readout coefficient contributed by the
    modes the tripartite model drops.
    """

    idle_index: int
    omega_s: float
    G_0: float
    c_bar: float
    probe_quadratic: float
    tripartite_quadratic: float
    far_quadratic: float
    derived: DerivedQuantities | None = field(default=None, repr=False)


def to_tripartite(system: ParametricSystem,
                  allow_unstable: bool = False) -> TripartiteEquivalent:
    """Select the nearest idle mode and map onto the two-mode cavity model.

    Requires the purely-quadratic probe conditions (raises
    :class:`QndViolated` otherwise).  Ties in the nearest-mode selection
    break toward the lower index, with a warning.  When the system carries
    decay rates, the returned record includes a ready
    :class:`DerivedQuantities` for the resolution analysis.
    """
    red = reduce(system)
    if not red.qnd_ok:
        bad_self = not np.allclose(system.chi[0, 0, :], 0.0)
        detail = ("probe mode has linear self-coupling chi[0,0,:] != 0"
                  if bad_self else
                  "probe couplings involve mechanical modes other than 0")
        raise QndViolated(detail)

    gaps = np.abs(system.omega - system.omega[0])
    gaps[0] = np.inf
    idle = int(np.argmin(gaps))
    near_ties = np.flatnonzero(np.isclose(gaps, gaps[idle], rtol=1e-12, atol=0.0))
    if len(near_ties) > 1:
        idle = int(near_ties[0])
        warnings.warn(f"equidistant idle modes {near_ties.tolist()}; "
                      f"choosing index {idle}", stacklevel=2)

    omega_s = abs(system.omega[idle] - system.omega[0]) / 2
    g0 = abs(float(system.chi[0, idle, 0]))
    amp = float(system.drive[1])

    tri_quad = system.chi[0, idle, 0] ** 2 / (system.omega[0] - system.omega[idle])
    far_quad = red.probe_quadratic - tri_quad

    derived = None
    if system.kappa is not None and amp > 0 and g0 > 0:
        derived = DerivedQuantities.from_rates(
            omega_m=float(system.Omega[0]), omega_s=omega_s,
            gamma_c=float(system.kappa[0]), gamma_d=float(system.kappa[idle]),
            G_0=g0, c_bar=amp, gamma_m=system.gamma_m, n_th=system.n_th,
            allow_unstable=allow_unstable)
    return TripartiteEquivalent(idle_index=idle, omega_s=omega_s, G_0=g0,
                                c_bar=amp, probe_quadratic=red.probe_quadratic,
                                tripartite_quadratic=float(tri_quad),
                                far_quadratic=float(far_quad), derived=derived)
