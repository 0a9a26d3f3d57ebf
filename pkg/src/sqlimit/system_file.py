"""Text format for general parametric mode systems.

One directive per line, ``#`` comments allowed::

    mech  = 1.0                 # mechanical frequencies, rad/s
    ext   = 10.0 30.0 55.0      # external mode frequencies, rad/s
    kappa = 0.1 0.1 0.1         # optional per-mode decay rates, rad/s
    drive = 1 20.0              # driven external mode (1-based) and amplitude
    gamma_m = 0.0               # optional mechanical decay, rad/s
    n_th    = 0.0               # optional bath occupation
    chi   = 1 2 1 0.05          # i j nu value (1-based), repeatable

``chi`` entries fill the coupling tensor sparsely; symmetry in (i, j) is
applied automatically.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .configio import ConfigError
from .reducer import ParametricSystem

__all__ = ["parse_system_text", "load_system"]


def _floats(raw: str, line_no: int, key: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split()]
    except ValueError:
        raise ConfigError(f"cannot parse numbers in '{key}'", line_no) from None


def parse_system_text(text: str) -> ParametricSystem:
    mech = ext = kappa = None
    drive_idx, drive_amp = 0, 0.0
    gamma_m = n_th = 0.0
    chi_entries: list[tuple[int, int, int, float, int]] = []

    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = ...', got '{body}'", line_no)
        key, _, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if key == "mech":
            mech = _floats(raw, line_no, key)
        elif key == "ext":
            ext = _floats(raw, line_no, key)
        elif key == "kappa":
            kappa = _floats(raw, line_no, key)
        elif key == "drive":
            vals = _floats(raw, line_no, key)
            if len(vals) != 2 or vals[0] != int(vals[0]):
                raise ConfigError("drive takes 'mode_index amplitude'", line_no)
            drive_idx, drive_amp = int(vals[0]) - 1, vals[1]
        elif key == "gamma_m":
            (gamma_m,) = _floats(raw, line_no, key)
        elif key == "n_th":
            (n_th,) = _floats(raw, line_no, key)
        elif key == "chi":
            vals = _floats(raw, line_no, key)
            if len(vals) != 4:
                raise ConfigError("chi takes 'i j nu value'", line_no)
            i, j, nu = (int(v) for v in vals[:3])
            if (i, j, nu) != (vals[0], vals[1], vals[2]) or min(i, j, nu) < 1:
                raise ConfigError("chi indices must be positive integers",
                                  line_no)
            chi_entries.append((i - 1, j - 1, nu - 1, vals[3], line_no))
        else:
            raise ConfigError(f"unknown key '{key}'", line_no)

    if mech is None or ext is None:
        raise ConfigError("system file needs both 'mech' and 'ext' lines")
    n_ext, n_mech = len(ext), len(mech)
    chi = np.zeros((n_ext, n_ext, n_mech))
    for i, j, nu, value, line_no in chi_entries:
        if i >= n_ext or j >= n_ext or nu >= n_mech:
            raise ConfigError(f"chi index out of range for {n_ext} external / "
                              f"{n_mech} mechanical modes", line_no)
        chi[i, j, nu] = value
        chi[j, i, nu] = value
    try:
        return ParametricSystem(Omega=np.array(mech), omega=np.array(ext),
                                chi=chi, drive=(drive_idx, drive_amp),
                                kappa=None if kappa is None else np.array(kappa),
                                gamma_m=gamma_m, n_th=n_th)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_system(path: str | Path) -> ParametricSystem:
    return parse_system_text(Path(path).read_text())
