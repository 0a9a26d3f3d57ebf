"""Parameter sweeps over experiment knobs, mapping feasibility landscapes.

Each grid point rebuilds the system configuration with one or two fields
replaced, derives rates (unstable springs are reported, not fatal) and
evaluates the feasibility verdict.  Points are independent: a failure is
recorded in that row's ``error`` column and the sweep continues.  Output
row order follows the grid regardless of how evaluation is scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .params import SystemConfig, derive
from .resolution import feasibility_report

__all__ = ["InvalidAxis", "SweepAxis", "SweepSpec", "run_sweep"]

_SWEEPABLE = {f.name for f in dataclass_fields(SystemConfig)} - {"driven_mode"}


class InvalidAxis(ValueError):
    """Axis refers to an unknown or non-numeric configuration field."""


@dataclass(frozen=True)
class SweepAxis:
    name: str
    scale: str           # "linear" | "log"
    min: float
    max: float
    n_points: int

    def __post_init__(self):
        if self.name not in _SWEEPABLE:
            raise InvalidAxis(f"unknown parameter '{self.name}'; choose from "
                              f"{sorted(_SWEEPABLE)}")
        if self.scale not in ("linear", "log"):
            raise InvalidAxis("scale must be 'linear' or 'log'")
        if self.n_points < 2:
            raise InvalidAxis("n_points must be at least 2")
        if not self.min < self.max:
            raise InvalidAxis("need min < max")
        if self.scale == "log" and self.min <= 0:
            raise InvalidAxis("log scale needs positive bounds")

    @property
    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.n_points)
        return np.linspace(self.min, self.max, self.n_points)


@dataclass(frozen=True)
class SweepSpec:
    """One or two axes over a base configuration."""

    base: SystemConfig
    axes: tuple[SweepAxis, ...]
    slack: float = 1.0

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise InvalidAxis("sweeps take one or two axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise InvalidAxis("axes must sweep distinct parameters")

    @property
    def grid(self) -> list[dict]:
        axes_vals = [a.values for a in self.axes]
        points = []
        if len(self.axes) == 1:
            for v in axes_vals[0]:
                points.append({self.axes[0].name: float(v)})
        else:
            for v0 in axes_vals[0]:
                for v1 in axes_vals[1]:
                    points.append({self.axes[0].name: float(v0),
                                   self.axes[1].name: float(v1)})
        return points


def _evaluate_point(spec: SweepSpec, overrides: dict) -> dict:
    row = dict(overrides)
    try:
        config = spec.base.replace(**overrides)
        derived = derive(config, allow_unstable=True)
        report = feasibility_report(derived, slack=spec.slack)
        row.update(report.to_record())
        row["error"] = ""
    except Exception as exc:  # isolated failure: name it, keep sweeping
        row["error"] = type(exc).__name__
        row["error_detail"] = str(exc)
    return row


def run_sweep(spec: SweepSpec, n_workers: int = 1) -> list[dict]:
    """Evaluate the grid; one output row per point, in grid order.

    ``n_workers`` > 1 distributes points over a thread pool; rows are
    reassembled by grid index, so the output is identical for any worker
    count.
    """
    points = spec.grid
    if n_workers <= 1:
        return [_evaluate_point(spec, p) for p in points]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(lambda p: _evaluate_point(spec, p), points))


def instability_power_threshold(spec_base: SystemConfig) -> float:
    """Input power at which the optical anti-spring destabilizes the trap."""
    derived = derive(spec_base.replace(I_0=0.0))
    photons = derived.omega_m * derived.omega_s / derived.G_0**2
    if math.isinf(photons):
        return math.inf
    from .params import CODATA
    return photons * derived.gamma_c * CODATA.hbar * derived.omega_0 / 2
