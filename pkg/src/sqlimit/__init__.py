"""Standard-quantum-limit toolkit for dispersive readout of mechanical quanta.

A membrane inside a two-mirror cavity shifts the optical normal-mode
frequencies quadratically in its position, so integrating the output phase
quadrature estimates the membrane's quantum number.  Finite mirror
transmission leaves a linear coupling to the undriven normal mode whose
vacuum fluctuations back-act on the membrane; the interplay of shot noise,
back-action heating and thermal noise sets a standard quantum limit on the
achievable number resolution.

The package provides:

* closed-form analysis (three-term resolution, optimal integration time,
  strong-coupling inequality, feasibility verdicts): :mod:`sqlimit.resolution`
* frequency-domain force response and spectra: :mod:`sqlimit.spectra`
* a stochastic Langevin simulator that verifies the closed form
  independently: :mod:`sqlimit.langevin`, :mod:`sqlimit.montecarlo`
* dispersive reduction of general parametrically coupled mode systems to
  the same tripartite model: :mod:`sqlimit.reducer`
* parameter sweeps and a command-line interface: :mod:`sqlimit.sweep`,
  :mod:`sqlimit.cli`
"""

__version__ = "0.1.0"

from .configio import (ConfigError, bundled_config_path, default_config_path,
                       load_config, load_derived, parse_config_text)
from .langevin import (EstimatorSample, NoiseStreams, SimConfig, StepTooLarge,
                       Trajectory, estimate_N, generate_noise, integrate,
                       second_order_signal)
from .montecarlo import McPoint, McResult, heating_rate, monte_carlo_resolution
from .params import (CODATA, DerivedQuantities, PhysicalConstants,
                     RegimeReport, SystemConfig, UnstableSpring, derive,
                     validate_regime, without_spring)
from .reducer import (DegenerateModes, DispersiveReduction, ParametricSystem,
                      QndViolated, TripartiteEquivalent, brute_force_eigen,
                      reduce, to_tripartite, validate_dispersive)
from .resolution import (FeasibilityReport, NoMinimum, ResolutionBreakdown,
                         ZeroSignal, decoherence_rate, feasibility_report,
                         lorentzian_spectrum, measurement_time, optimal_tau,
                         optimal_omega_eff, resolution_squared, sql_ratio)
from .spectra import RpForceResponse, backaction_spectrum, rp_transfer
from .sweep import InvalidAxis, SweepAxis, SweepSpec, run_sweep

__all__ = [
    "__version__",
    "CODATA", "PhysicalConstants", "SystemConfig", "DerivedQuantities",
    "RegimeReport", "UnstableSpring", "derive", "validate_regime",
    "without_spring",
    "ConfigError", "parse_config_text", "load_config", "load_derived",
    "default_config_path", "bundled_config_path",
    "ZeroSignal", "NoMinimum", "lorentzian_spectrum", "decoherence_rate",
    "measurement_time", "sql_ratio", "ResolutionBreakdown",
    "resolution_squared", "optimal_tau", "optimal_omega_eff",
    "FeasibilityReport", "feasibility_report",
    "RpForceResponse", "rp_transfer", "backaction_spectrum",
    "SimConfig", "NoiseStreams", "StepTooLarge", "generate_noise",
    "Trajectory", "integrate", "second_order_signal", "EstimatorSample",
    "estimate_N",
    "McPoint", "McResult", "monte_carlo_resolution", "heating_rate",
    "ParametricSystem", "DispersiveReduction", "TripartiteEquivalent",
    "DegenerateModes", "QndViolated", "validate_dispersive", "reduce",
    "brute_force_eigen", "to_tripartite",
    "SweepAxis", "SweepSpec", "InvalidAxis", "run_sweep",
]
