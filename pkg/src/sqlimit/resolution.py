"""Closed-form resolution analysis for dispersive phonon-number readout.

The achievable error in the inferred quantum number after integrating the
readout quadrature for a time tau decomposes into three terms::

    dN^2(tau) =  gamma_c omega_s^2 / (G_eff^4 c_bar^2 tau)          (shot)
              + (5/6) [gamma_d G_eff^2 c_bar^2 tau / (2 sqrt2 omega_s^2)]^2
                                                                    (back-action)
              + (5/6) [gamma_m n_th (omega_m/omega_eff) tau / sqrt2]^2
                                                                    (thermal)

the first falling as 1/tau (imprecision), the other two growing as tau^2
(heating of the oscillator during the measurement).  This module evaluates
the breakdown, optimizes tau, evaluates the strong-coupling inequality
gamma_c gamma_d / G_eff^2 <= 1 together with its finesse form
lambda / (F x_q) <= 8 sqrt2, and aggregates everything into a feasibility
verdict.  The Monte Carlo in :mod:`sqlimit.montecarlo` checks the same
formula from simulated trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DerivedQuantities, RegimeReport, validate_regime, without_spring

__all__ = [
    "ZeroSignal",
    "NoMinimum",
    "FINESSE_FORM_LIMIT",
    "lorentzian_spectrum",
    "decoherence_rate",
    "measurement_time",
    "SqlRatio",
    "sql_ratio",
    "ResolutionBreakdown",
    "resolution_coefficients",
    "resolution_squared",
    "optimal_tau",
    "analytic_optimal_tau",
    "OmegaEffOptimum",
    "optimal_omega_eff",
    "FeasibilityReport",
    "feasibility_report",
]

#: Threshold of the finesse form of the strong-coupling inequality, 8*sqrt(2).
FINESSE_FORM_LIMIT = 8 * math.sqrt(2)


class ZeroSignal(ValueError):
    """No signal path: the drive or the optomechanical coupling vanishes."""


class NoMinimum(ValueError):
    """dN^2(tau) decreases monotonically; only the shot term is present."""


def lorentzian_spectrum(omega, derived: DerivedQuantities):
    """Idle-mode vacuum spectrum 2*gamma_d / [(omega - 2*omega_s)^2 + gamma_d^2].

    Peaks at the normal-mode splitting 2*omega_s with half width gamma_d and
    peak value 2/gamma_d.  Accepts scalar or array ``omega``.
    """
    if derived.gamma_d <= 0:
        raise ValueError("gamma_d must be positive")
    gd = derived.gamma_d
    return 2 * gd / ((np.asarray(omega) - 2 * derived.omega_s) ** 2 + gd**2)


def decoherence_rate(derived: DerivedQuantities, exact: bool = False) -> float:
    """Golden-rule dephasing rate of number states from the linear coupling.

    The default evaluates the idle-mode spectrum at its flat low-frequency
    wing, G_0^2 c_bar^2 gamma_d / (2 omega_s^2), which pairs with
    :func:`measurement_time` into the exact product
    gamma_c gamma_d / G_0^2.  ``exact=True`` keeps the full Lorentzian at
    -omega_m instead (relative difference of order omega_m/omega_s).
    """
    d = derived
    if exact:
        return d.G_0**2 * d.c_bar**2 * float(lorentzian_spectrum(-d.omega_m, d))
    return d.G_0**2 * d.c_bar**2 * d.gamma_d / (2 * d.omega_s**2)


def measurement_time(derived: DerivedQuantities) -> float:
    """Shot-noise-limited time to pin the quantum number to unit error.

    2 omega_s^2 gamma_c / (G_0^4 c_bar^2); raises :class:`ZeroSignal` when
    there is no drive or no coupling.
    """
    d = derived
    if d.c_bar == 0 or d.G_0 == 0:
        raise ZeroSignal("measurement time diverges: c_bar or G_0 is zero")
    return 2 * d.omega_s**2 * d.gamma_c / (d.G_0**4 * d.c_bar**2)


@dataclass(frozen=True)
class SqlRatio:
    """Strong-coupling inequality in both of its forms."""

    ratio: float          # gamma_c gamma_d / G_eff^2
    finesse_form: float   # lambda / (finesse * x_q); NaN for raw systems
    ratio_ok: bool
    finesse_ok: bool
    slack: float = 1.0

    def to_record(self) -> dict:
        return {"sql_ratio": self.ratio, "finesse_form": self.finesse_form,
                "sql_ratio_ok": self.ratio_ok, "finesse_form_ok": self.finesse_ok}


def sql_ratio(derived: DerivedQuantities, slack: float = 1.0) -> SqlRatio:
    """Evaluate gamma_c gamma_d / G_eff^2 and lambda/(F x_q) against their limits.

    The two verdicts agree identically for equal mirrors at unit spring gain,
    where ratio == (finesse_form)^2 / 128.  ``slack`` relaxes both thresholds
    by a common factor (order-of-magnitude inequalities).
    """
    d = derived
    g_eff = d.G_eff if d.spring_stable else d.G_0
    if g_eff == 0:
        ratio = math.inf
    else:
        ratio = d.gamma_c * d.gamma_d / g_eff**2
    if math.isnan(d.finesse) or math.isnan(d.x_q):
        ff = math.nan
        ff_ok = False
    else:
        ff = d.wavelength / (d.finesse * d.x_q)
        ff_ok = ff <= FINESSE_FORM_LIMIT * math.sqrt(slack)
    return SqlRatio(ratio=ratio, finesse_form=ff, ratio_ok=ratio <= slack,
                    finesse_ok=ff_ok, slack=slack)


@dataclass(frozen=True)
class ResolutionBreakdown:
    """dN^2 at integration time tau, split into its three noise terms."""

    tau: np.ndarray | float
    shot_term: np.ndarray | float
    backaction_term: np.ndarray | float
    thermal_term: np.ndarray | float

    @property
    def total(self):
        return self.shot_term + self.backaction_term + self.thermal_term

    @property
    def delta_n(self):
        return np.sqrt(self.total)

    def to_record(self) -> dict:
        return {"tau": self.tau, "shot_term": self.shot_term,
                "backaction_term": self.backaction_term,
                "thermal_term": self.thermal_term, "total": self.total,
                "delta_n": self.delta_n}


def resolution_coefficients(derived: DerivedQuantities,
                            n_th_override: float | None = None
                            ) -> tuple[float, float, float]:
    """(A, B_ba, B_th) with dN^2 = A/tau + (B_ba + B_th) tau^2.

    The thermal coefficient normalizes the bath occupation by the
    spring-softened frequency, n_th * omega_m / omega_eff; pass
    ``n_th_override`` to study the bare-frequency normalization or other
    occupations.
    """
    d = derived
    if not d.spring_stable:
        raise ValueError("spring-unstable record: take without_spring() first")
    if d.G_eff == 0 or d.c_bar == 0:
        raise ZeroSignal("no signal: G_eff or c_bar is zero")
    A = d.gamma_c * d.omega_s**2 / (d.G_eff**4 * d.c_bar**2)
    B_ba = (5 / 6) * (d.gamma_d * d.G_eff**2 * d.c_bar**2
                      / (2 * math.sqrt(2) * d.omega_s**2)) ** 2
    n_th = d.n_th if n_th_override is None else n_th_override
    # k_B T / (hbar omega_eff) expressed through the occupation number
    occ_eff = n_th * d.omega_m / d.omega_eff
    B_th = (5 / 6) * (d.gamma_m * occ_eff / math.sqrt(2)) ** 2
    return A, B_ba, B_th


def resolution_squared(tau, derived: DerivedQuantities,
                       n_th_override: float | None = None) -> ResolutionBreakdown:
    """Evaluate the three-term resolution at integration time(s) ``tau``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    A, B_ba, B_th = resolution_coefficients(derived, n_th_override)
    if tau.ndim == 0:
        tau = float(tau)
    return ResolutionBreakdown(tau=tau, shot_term=A / tau,
                               backaction_term=B_ba * tau**2,
                               thermal_term=B_th * tau**2)


def analytic_optimal_tau(A: float, B: float) -> float:
    """Minimizer of A/tau + B tau^2, namely (A / (2B))^(1/3)."""
    if B <= 0:
        raise NoMinimum("no tau^2 term; dN^2 decreases monotonically")
    if A <= 0:
        raise ZeroSignal("no shot term; dN^2 increases monotonically")
    return (A / (2 * B)) ** (1 / 3)


def _golden_section(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Golden-section minimum of a unimodal f on [a, b] (log-space caller)."""
    invphi = (math.sqrt(5) - 1) / 2
    invphi2 = (3 - math.sqrt(5)) / 2
    h = b - a
    if h <= tol:
        return (a + b) / 2
    n = int(math.ceil(math.log(tol / h) / math.log(invphi)))
    c = a + invphi2 * h
    d = a + invphi * h
    yc, yd = f(c), f(d)
    for _ in range(n):
        if yc < yd:
            b, d, yd = d, c, yc
            h = invphi * h
            c = a + invphi2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = invphi * h
            d = a + invphi * h
            yd = f(d)
    return (a + b) / 2


def optimal_tau(derived: DerivedQuantities,
                n_th_override: float | None = None,
                window_decades: tuple[float, float] = (-2.0, 6.0),
                grid_points: int = 256) -> tuple[float, float]:
    """Minimize dN^2 over tau; returns (tau_star, min dN).

    Searches a log grid spanning ``window_decades`` around the cavity
    storage time 1/gamma_c, then refines with golden-section; the analytic
    minimizer of the A/tau + B tau^2 form seeds the bracket.  Raises
    :class:`NoMinimum` when only the shot term is present.
    """
    A, B_ba, B_th = resolution_coefficients(derived, n_th_override)
    B = B_ba + B_th
    if B <= 0:
        raise NoMinimum("only the shot term is present; no interior minimum")
    lo = 10.0 ** window_decades[0] / derived.gamma_c
    hi = 10.0 ** window_decades[1] / derived.gamma_c
    grid = np.geomspace(lo, hi, grid_points)
    total = A / grid + B * grid**2
    k = int(np.argmin(total))
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, grid_points - 1)])

    def cost_log(x):
        t = math.exp(x)
        return A / t + B * t**2

    x_star = _golden_section(cost_log, math.log(a), math.log(b))
    tau_star = min(max(math.exp(x_star), lo), hi)
    dn2 = A / tau_star + B * tau_star**2
    return float(tau_star), float(math.sqrt(dn2))


@dataclass(frozen=True)
class OmegaEffOptimum:
    """Spring softening that balances coupling gain against thermal noise."""

    omega_eff_opt: float   # rad/s
    constraint_lhs: float  # n_th / Q_m
    constraint_rhs: float  # [G_0^2 / (omega_s gamma_c)]^(2/3)
    constraint_ok: bool
    in_model: bool         # False when the "optimum" is degenerate or >= omega_m

    def to_record(self) -> dict:
        return {"omega_eff_opt": self.omega_eff_opt,
                "thermal_constraint_lhs": self.constraint_lhs,
                "thermal_constraint_rhs": self.constraint_rhs,
                "thermal_constraint_ok": self.constraint_ok,
                "omega_eff_opt_in_model": self.in_model}


def optimal_omega_eff(derived: DerivedQuantities) -> OmegaEffOptimum:
    """omega_m sqrt(n_th / Q_m) and the occupation constraint that allows it.

    Out-of-model when n_th/Q_m >= 1 (the optimum would exceed omega_m, where
    the softening picture no longer applies) or at zero temperature.
    """
    d = derived
    ratio = 0.0 if d.n_th == 0 else d.n_th / d.Q_m
    opt = d.omega_m * math.sqrt(ratio)
    rhs = (d.G_0**2 / (d.omega_s * d.gamma_c)) ** (2 / 3) if d.G_0 else 0.0
    in_model = 0.0 < ratio < 1.0
    return OmegaEffOptimum(omega_eff_opt=opt, constraint_lhs=ratio,
                           constraint_rhs=rhs, constraint_ok=ratio <= rhs,
                           in_model=in_model)


@dataclass(frozen=True)
class FeasibilityReport:
    """Aggregated verdict on resolving a single mechanical quantum.

    condition_i    minimum dN <= 1 somewhere in the tau window
    condition_ii   tau_star >= 1/gamma_c and 1/gamma_c >= 1/omega_eff
    condition_iii  the optical spring leaves the oscillator stable
    """

    sql: SqlRatio
    min_resolution: float
    tau_star: float
    condition_i: bool
    condition_ii: bool
    condition_iii: bool
    thermal_constraint_lhs: float
    thermal_constraint_rhs: float
    thermal_constraint_ok: bool
    regime: RegimeReport
    spring_stable: bool
    used_unit_spring_gain: bool   # curve evaluated at Lam = 1 (unstable spring)
    omega_eff_opt: float

    @property
    def feasible(self) -> bool:
        return (self.condition_i and self.condition_ii and self.condition_iii
                and self.regime.passed)

    def to_record(self) -> dict:
        rec = {"min_resolution": self.min_resolution, "tau_star": self.tau_star,
               "condition_i": self.condition_i, "condition_ii": self.condition_ii,
               "condition_iii": self.condition_iii,
               "thermal_constraint_lhs": self.thermal_constraint_lhs,
               "thermal_constraint_rhs": self.thermal_constraint_rhs,
               "thermal_constraint_ok": self.thermal_constraint_ok,
               "spring_stable": self.spring_stable,
               "used_unit_spring_gain": self.used_unit_spring_gain,
               "omega_eff_opt": self.omega_eff_opt,
               "feasible": self.feasible}
        rec.update(self.sql.to_record())
        rec.update(self.regime.to_record())
        return rec


def feasibility_report(derived: DerivedQuantities, slack: float = 1.0,
                       n_th_override: float | None = None) -> FeasibilityReport:
    """Evaluate every requirement for single-quantum resolution at once.

    A spring-unstable record is reported rather than rejected: the resolution
    curve is then evaluated at unit spring gain (Lam = 1) and
    ``condition_iii`` is False.
    """
    base = derived if derived.spring_stable else without_spring(derived)
    fallback = not derived.spring_stable

    sql = sql_ratio(derived, slack=slack)
    try:
        tau_star, dn_min = optimal_tau(base, n_th_override=n_th_override)
        cond_i = dn_min <= math.sqrt(slack)
        cond_ii = (tau_star >= 1.0 / base.gamma_c
                   and 1.0 / base.gamma_c >= 1.0 / base.omega_eff)
    except (NoMinimum, ZeroSignal):
        tau_star, dn_min = math.nan, math.nan
        cond_i = cond_ii = False
    opt = optimal_omega_eff(derived)
    return FeasibilityReport(
        sql=sql, min_resolution=dn_min, tau_star=tau_star,
        condition_i=cond_i, condition_ii=cond_ii,
        condition_iii=derived.spring_stable,
        thermal_constraint_lhs=opt.constraint_lhs,
        thermal_constraint_rhs=opt.constraint_rhs,
        thermal_constraint_ok=opt.constraint_ok,
        regime=validate_regime(derived), spring_stable=derived.spring_stable,
        used_unit_spring_gain=fallback, omega_eff_opt=opt.omega_eff_opt)
