"""System parameters and every rate derived from them.

The physical model is a membrane (mechanical oscillator) placed inside a
two-mirror cavity, splitting it into a pair of tunnel-coupled sub-cavities.
In the optical normal-mode basis the driven (common) mode reads out the
membrane while the undriven (idle) mode, detuned by twice the tunnelling
rate, mediates radiation-pressure back-action and an optical spring.

Everything downstream (closed-form resolution analysis, spectra, Langevin
simulation) consumes a :class:`DerivedQuantities` record produced either by
:func:`derive` from laboratory parameters or by
:meth:`DerivedQuantities.from_rates` for dimensionless studies.

Angular frequencies are stored in rad/s throughout; SI units elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = [
    "PhysicalConstants",
    "CODATA",
    "SystemConfig",
    "DerivedQuantities",
    "RegimeCheck",
    "RegimeReport",
    "UnstableSpring",
    "derive",
    "validate_regime",
    "without_spring",
]


class UnstableSpring(ValueError):
    """Drive power strong enough that the optical anti-spring inverts the trap.

    Carries the stability thresholds so callers can report how far over the
    limit the configuration sits.
    """

    def __init__(self, k_spring: float, omega_m: float,
                 photon_threshold: float, power_threshold: float | None):
        self.k_spring = k_spring
        self.omega_m = omega_m
        self.photon_threshold = photon_threshold
        self.power_threshold = power_threshold
        msg = (f"optical anti-spring {k_spring:.4g} rad/s exceeds omega_m "
               f"{omega_m:.4g} rad/s; stable below {photon_threshold:.4g} "
               f"intracavity photons")
        if power_threshold is not None:
            msg += f" (input power below {power_threshold:.4g} W)"
        super().__init__(msg)


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed fundamental constants (CODATA 2018 exact values)."""

    hbar: float = 1.054571817e-34   # J s
    c_light: float = 299792458.0    # m / s
    k_B: float = 1.380649e-23       # J / K

    def __post_init__(self):
        if not (self.hbar > 0 and self.c_light > 0 and self.k_B > 0):
            raise ValueError("physical constants must be strictly positive")


CODATA = PhysicalConstants()

_DRIVEN_MODES = ("common", "differential")


@dataclass(frozen=True)
class SystemConfig:
    """Laboratory parameters of the membrane-in-cavity experiment.

    Exactly one of ``r_m`` (amplitude reflectivity) or ``t_m`` (amplitude
    transmissivity) must be given; the other follows from r^2 + t^2 = 1.
    ``finesse`` refers to equal end mirrors, finesse = pi / t0^2.
    """

    m: float                 # kg
    omega_m: float           # rad/s
    Q_m: float               # dimensionless
    wavelength: float        # m  (config-file key: "lambda")
    L: float                 # m, full cavity length
    finesse: float           # dimensionless
    T: float                 # K
    I_0: float               # W
    r_m: float | None = None
    t_m: float | None = None
    driven_mode: str = "common"

    def __post_init__(self):
        for name in ("m", "omega_m", "Q_m", "wavelength", "L", "finesse"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.T < 0 or self.I_0 < 0:
            raise ValueError("T and I_0 must be non-negative")
        if self.finesse <= 1:
            raise ValueError("finesse must exceed 1")
        if (self.r_m is None) == (self.t_m is None):
            raise ValueError("give exactly one of r_m, t_m")
        if self.r_m is None:
            if not 0 < self.t_m < 1:
                raise ValueError("t_m must lie in (0, 1)")
            object.__setattr__(self, "r_m", math.sqrt(1 - self.t_m**2))
        else:
            if not 0 < self.r_m < 1:
                raise ValueError("r_m must lie in (0, 1)")
            object.__setattr__(self, "t_m", math.sqrt(1 - self.r_m**2))
        if self.driven_mode not in _DRIVEN_MODES:
            raise ValueError(f"driven_mode must be one of {_DRIVEN_MODES}")

    def replace(self, **changes) -> "SystemConfig":
        """Copy with fields changed; r_m/t_m exclusivity is re-resolved."""
        if "t_m" in changes and "r_m" not in changes:
            changes["r_m"] = None
        else:
            changes.setdefault("t_m", None)  # keep r_m canonical
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedQuantities:
    """All rates and couplings the analysis consumes.

    ``omega_eff`` is the spring-softened mechanical frequency,
    omega_eff^2 = omega_m (omega_m - K_spring); ``Lam`` its gain factor
    sqrt(omega_m / omega_eff) and ``G_eff = Lam * G_0``.  When the drive is
    strong enough that omega_eff^2 <= 0 the record can only be built with
    ``allow_unstable=True``; it then carries ``spring_stable=False`` and NaN
    for the spring-dependent fields.

    Optical fields (``x_q``, ``omega_0``, ``wavelength``, ``finesse``) are
    NaN for records built from raw rates.
    """

    omega_m: float           # rad/s
    omega_s: float           # rad/s, half the normal-mode splitting
    gamma_c: float           # rad/s, driven-mode decay
    gamma_d: float           # rad/s, idle-mode decay
    gamma_m: float           # rad/s, mechanical decay
    G_0: float               # rad/s, optomechanical coupling
    c_bar: float             # sqrt(photons), intracavity amplitude
    n_th: float              # thermal occupation
    x_q: float = math.nan    # m
    omega_0: float = math.nan  # rad/s
    wavelength: float = math.nan  # m
    finesse: float = math.nan
    K_spring: float = 0.0    # rad/s, anti-spring magnitude G_0^2 c_bar^2 / omega_s
    omega_eff: float = math.nan  # rad/s
    Lam: float = math.nan    # sqrt(omega_m / omega_eff) >= 1
    G_eff: float = math.nan  # rad/s
    spring_stable: bool = True

    @property
    def photon_threshold(self) -> float:
        """Intracavity photon number at which omega_eff reaches zero."""
        if self.G_0 == 0:
            return math.inf
        return self.omega_m * self.omega_s / self.G_0**2

    @property
    def Q_m(self) -> float:
        return math.inf if self.gamma_m == 0 else self.omega_m / self.gamma_m

    @classmethod
    def from_rates(cls, omega_m: float, omega_s: float, gamma_c: float,
                   gamma_d: float, G_0: float, c_bar: float,
                   gamma_m: float = 0.0, n_th: float = 0.0,
                   allow_unstable: bool = False,
                   power_threshold: float | None = None) -> "DerivedQuantities":
        """Build a record directly from rates (dimensionless/toy studies)."""
        if min(omega_m, omega_s, gamma_c, gamma_d) <= 0:
            raise ValueError("omega_m, omega_s, gamma_c, gamma_d must be positive")
        if G_0 < 0 or c_bar < 0 or gamma_m < 0 or n_th < 0:
            raise ValueError("G_0, c_bar, gamma_m, n_th must be non-negative")
        k_spring = G_0**2 * c_bar**2 / omega_s
        weff_sq = omega_m * (omega_m - k_spring)
        if weff_sq > 0:
            omega_eff = math.sqrt(weff_sq)
            lam = math.sqrt(omega_m / omega_eff)
            return cls(omega_m=omega_m, omega_s=omega_s, gamma_c=gamma_c,
                       gamma_d=gamma_d, gamma_m=gamma_m, G_0=G_0, c_bar=c_bar,
                       n_th=n_th, K_spring=k_spring, omega_eff=omega_eff,
                       Lam=lam, G_eff=lam * G_0, spring_stable=True)
        if not allow_unstable:
            photon_threshold = omega_m * omega_s / G_0**2 if G_0 else math.inf
            raise UnstableSpring(k_spring, omega_m, photon_threshold,
                                 power_threshold)
        return cls(omega_m=omega_m, omega_s=omega_s, gamma_c=gamma_c,
                   gamma_d=gamma_d, gamma_m=gamma_m, G_0=G_0, c_bar=c_bar,
                   n_th=n_th, K_spring=k_spring, omega_eff=math.nan,
                   Lam=math.nan, G_eff=math.nan, spring_stable=False)

    def to_record(self) -> dict:
        """Flat name -> value mapping for serialization."""
        rec = {k: getattr(self, k) for k in (
            "omega_m", "omega_s", "gamma_c", "gamma_d", "gamma_m", "G_0",
            "c_bar", "n_th", "x_q", "omega_0", "K_spring", "omega_eff",
            "Lam", "G_eff")}
        rec["spring_stable"] = self.spring_stable
        return rec


def derive(config: SystemConfig, constants: PhysicalConstants = CODATA,
           allow_unstable: bool = False) -> DerivedQuantities:
    """Derive every rate and coupling from laboratory parameters.

    Parameters
    ----------
    config : SystemConfig
    constants : PhysicalConstants, optional
    allow_unstable : bool, optional
        Return a flagged record instead of raising :class:`UnstableSpring`
        when the optical anti-spring exceeds the mechanical restoring force.

    Returns
    -------
    DerivedQuantities
    """
    hbar, c, k_B = constants.hbar, constants.c_light, constants.k_B
    x_q = math.sqrt(hbar / (2 * config.m * config.omega_m))
    omega_0 = 2 * math.pi * c / config.wavelength
    omega_s = config.t_m * c / config.L
    G_0 = 2 * math.sqrt(2) * omega_0 * x_q / config.L
    t0_sq = math.pi / config.finesse
    gamma_c = gamma_d = c * t0_sq / (2 * config.L)
    gamma_m = config.omega_m / config.Q_m
    n_th = k_B * config.T / (hbar * config.omega_m)
    # steady amplitude of the resonantly driven mode, |c_bar|^2 in photons
    c_bar = math.sqrt(2 * config.I_0 / (gamma_c * hbar * omega_0))

    photon_threshold = (config.omega_m * omega_s / G_0**2) if G_0 else math.inf
    power_threshold = photon_threshold * gamma_c * hbar * omega_0 / 2

    k_spring = G_0**2 * c_bar**2 / omega_s
    weff_sq = config.omega_m * (config.omega_m - k_spring)
    if weff_sq > 0:
        omega_eff = math.sqrt(weff_sq)
        lam = math.sqrt(config.omega_m / omega_eff)
        g_eff = lam * G_0
        stable = True
    elif allow_unstable:
        omega_eff = lam = g_eff = math.nan
        stable = False
    else:
        raise UnstableSpring(k_spring, config.omega_m, photon_threshold,
                             power_threshold)

    return DerivedQuantities(
        omega_m=config.omega_m, omega_s=omega_s, gamma_c=gamma_c,
        gamma_d=gamma_d, gamma_m=gamma_m, G_0=G_0, c_bar=c_bar, n_th=n_th,
        x_q=x_q, omega_0=omega_0, wavelength=config.wavelength,
        finesse=config.finesse, K_spring=k_spring, omega_eff=omega_eff,
        Lam=lam, G_eff=g_eff, spring_stable=stable)


def without_spring(derived: DerivedQuantities) -> DerivedQuantities:
    """View of ``derived`` with the optical spring switched off (Lam = 1).

    Used for baseline comparisons and as the reporting fallback when the
    spring is unstable.
    """
    return replace(derived, K_spring=0.0, omega_eff=derived.omega_m,
                   Lam=1.0, G_eff=derived.G_0, spring_stable=True)


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio < self.threshold


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of the perturbative-regime validity checks."""

    checks: tuple[RegimeCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> RegimeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_record(self) -> dict:
        rec = {}
        for c in self.checks:
            rec[f"ratio[{c.name}]"] = c.ratio
            rec[f"pass[{c.name}]"] = c.passed
        rec["regime_ok"] = self.passed
        return rec


def validate_regime(derived: DerivedQuantities,
                    dispersive_margin: float = 0.1,
                    resolved_margin: float = 1.0) -> RegimeReport:
    """Check the separations of scale behind the perturbative treatment.

    ``dispersive_margin`` bounds the "much smaller than" ratios
    (omega_m vs omega_s, couplings and decays vs the normal-mode splitting);
    ``resolved_margin`` bounds the plain inequality gamma_{c,d} < omega_m
    needed for the readout to average full mechanical cycles.
    """
    d = derived
    checks = (
        RegimeCheck("omega_m/omega_s", d.omega_m / d.omega_s, dispersive_margin),
        RegimeCheck("G_0/(2*omega_s)", d.G_0 / (2 * d.omega_s), dispersive_margin),
        RegimeCheck("gamma_c/omega_m", d.gamma_c / d.omega_m, resolved_margin),
        RegimeCheck("gamma_d/omega_m", d.gamma_d / d.omega_m, resolved_margin),
        RegimeCheck("gamma_c/(2*omega_s)", d.gamma_c / (2 * d.omega_s), dispersive_margin),
        RegimeCheck("gamma_d/(2*omega_s)", d.gamma_d / (2 * d.omega_s), dispersive_margin),
    )
    return RegimeReport(checks=checks)
