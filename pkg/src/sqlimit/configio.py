"""Plain-text configuration files: one ``key = value [unit]`` per line.

Two schemas share the format, selected by an optional ``kind`` line:

``kind = physical`` (default)
    Laboratory parameters of :class:`~sqlimit.params.SystemConfig`.
    Frequencies given in Hz are converted to rad/s on parse.

``kind = raw``
    Rates fed straight into :meth:`DerivedQuantities.from_rates`; used for
    dimensionless studies where no laboratory realization is implied.

Unknown keys are an error and the reported :class:`ConfigError` carries the
offending line number.  ``#`` starts a comment, blank lines are ignored.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

try:  # Python >= 3.9
    from importlib import resources
except ImportError:  # pragma: no cover
    import importlib_resources as resources  # type: ignore

from .params import DerivedQuantities, SystemConfig, derive

__all__ = [
    "ConfigError",
    "parse_config_text",
    "load_config",
    "load_derived",
    "apply_overrides",
    "config_digest",
    "format_config",
    "default_config_path",
    "bundled_config_path",
]

TWO_PI = 6.283185307179586476925287

# unit name -> (dimension, factor to SI).  Angular frequencies are the SI
# form here; plain Hz picks up a 2*pi.
_UNITS = {
    "kg": ("mass", 1.0), "g": ("mass", 1e-3), "mg": ("mass", 1e-6),
    "ug": ("mass", 1e-9), "ng": ("mass", 1e-12), "pg": ("mass", 1e-15),
    "fg": ("mass", 1e-18),
    "m": ("length", 1.0), "cm": ("length", 1e-2), "mm": ("length", 1e-3),
    "um": ("length", 1e-6), "nm": ("length", 1e-9), "pm": ("length", 1e-12),
    "W": ("power", 1.0), "mW": ("power", 1e-3), "uW": ("power", 1e-6),
    "nW": ("power", 1e-9), "pW": ("power", 1e-12), "fW": ("power", 1e-15),
    "K": ("temperature", 1.0), "mK": ("temperature", 1e-3),
    "uK": ("temperature", 1e-6),
    "rad/s": ("angular_frequency", 1.0),
    "Hz": ("angular_frequency", TWO_PI), "kHz": ("angular_frequency", TWO_PI * 1e3),
    "MHz": ("angular_frequency", TWO_PI * 1e6), "GHz": ("angular_frequency", TWO_PI * 1e9),
    "THz": ("angular_frequency", TWO_PI * 1e12),
}

# key -> (dimension, SystemConfig attribute)
_PHYSICAL_KEYS = {
    "m": ("mass", "m"),
    "omega_m": ("angular_frequency", "omega_m"),
    "Q_m": ("dimensionless", "Q_m"),
    "lambda": ("length", "wavelength"),
    "L": ("length", "L"),
    "r_m": ("dimensionless", "r_m"),
    "t_m": ("dimensionless", "t_m"),
    "finesse": ("dimensionless", "finesse"),
    "T": ("temperature", "T"),
    "I_0": ("power", "I_0"),
    "driven_mode": ("enum", "driven_mode"),
}

_RAW_KEYS = {
    "omega_m": "angular_frequency",
    "omega_s": "angular_frequency",
    "gamma_c": "angular_frequency",
    "gamma_d": "angular_frequency",
    "gamma_m": "angular_frequency",
    "G_0": "angular_frequency",
    "c_bar": "dimensionless",
    "n_th": "dimensionless",
    "Q_m": "dimensionless",
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _parse_quantity(key: str, raw: str, dimension: str, line_no: int | None):
    """Convert ``"5 nW"`` style text to an SI float of the given dimension."""
    if dimension == "enum":
        return raw.strip()
    tokens = raw.replace("[", " ").replace("]", " ").split()
    if not tokens:
        raise ConfigError(f"missing value for '{key}'", line_no)
    try:
        value = float(tokens[0])
    except ValueError:
        raise ConfigError(f"cannot parse number '{tokens[0]}' for '{key}'",
                          line_no) from None
    if len(tokens) == 1:
        return value
    if len(tokens) > 2:
        raise ConfigError(f"too many tokens in '{raw}' for '{key}'", line_no)
    unit = tokens[1]
    if dimension == "dimensionless":
        raise ConfigError(f"'{key}' is dimensionless, got unit '{unit}'", line_no)
    if unit not in _UNITS:
        raise ConfigError(f"unknown unit '{unit}' for '{key}'", line_no)
    unit_dim, factor = _UNITS[unit]
    if unit_dim != dimension:
        raise ConfigError(
            f"unit '{unit}' is a {unit_dim}, but '{key}' needs a {dimension}",
            line_no)
    return value * factor


def parse_config_text(text: str) -> dict:
    """Parse config text into ``{"kind": ..., key: SI value, ...}``.

    Values are plain floats in SI / rad/s; strings for enum keys.
    """
    kind = "physical"
    entries: dict[str, tuple[str, int]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got '{body}'", line_no)
        key, _, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key:
            raise ConfigError("empty key", line_no)
        if key == "kind":
            if raw not in ("physical", "raw"):
                raise ConfigError(f"kind must be 'physical' or 'raw', got '{raw}'",
                                  line_no)
            kind = raw
            continue
        if key in entries:
            raise ConfigError(f"duplicate key '{key}'", line_no)
        entries[key] = (raw, line_no)

    schema = _PHYSICAL_KEYS if kind == "physical" else _RAW_KEYS
    out: dict = {"kind": kind}
    for key, (raw, line_no) in entries.items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' for kind={kind}", line_no)
        dimension = schema[key][0] if kind == "physical" else schema[key]
        out[key] = _parse_quantity(key, raw, dimension, line_no)
    return out


def _build_physical(values: dict) -> SystemConfig:
    kwargs = {}
    for key, (_, attr) in _PHYSICAL_KEYS.items():
        if key in values:
            kwargs[attr] = values[key]
    missing = [k for k in ("m", "omega_m", "Q_m", "lambda", "L", "finesse")
               if _PHYSICAL_KEYS[k][1] not in kwargs]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    kwargs.setdefault("T", 0.0)
    kwargs.setdefault("I_0", 0.0)
    try:
        return SystemConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_raw(values: dict, allow_unstable: bool) -> DerivedQuantities:
    required = ("omega_m", "omega_s", "gamma_c", "gamma_d", "G_0", "c_bar")
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    gamma_m = values.get("gamma_m")
    if gamma_m is None:
        q = values.get("Q_m")
        gamma_m = values["omega_m"] / q if q else 0.0
    elif "Q_m" in values:
        raise ConfigError("give gamma_m or Q_m, not both")
    try:
        return DerivedQuantities.from_rates(
            omega_m=values["omega_m"], omega_s=values["omega_s"],
            gamma_c=values["gamma_c"], gamma_d=values["gamma_d"],
            G_0=values["G_0"], c_bar=values["c_bar"], gamma_m=gamma_m,
            n_th=values.get("n_th", 0.0), allow_unstable=allow_unstable)
    except ValueError as exc:
        if isinstance(exc, ConfigError) or exc.__class__.__name__ == "UnstableSpring":
            raise
        raise ConfigError(str(exc)) from exc


def apply_overrides(values: dict, overrides: list[str]) -> dict:
    """Apply repeatable ``key=value`` override strings after file parse."""
    out = dict(values)
    schema = _PHYSICAL_KEYS if out.get("kind", "physical") == "physical" else _RAW_KEYS
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        key, _, raw = item.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in schema:
            raise ConfigError(f"unknown override key '{key}'")
        dimension = schema[key][0] if out["kind"] == "physical" else schema[key]
        out[key] = _parse_quantity(key, raw, dimension, None)
    return out


def load_config(path: str | Path, overrides: list[str] | None = None):
    """Load a config file; returns (kind, values dict)."""
    text = Path(path).read_text()
    values = parse_config_text(text)
    if overrides:
        values = apply_overrides(values, overrides)
    return values["kind"], values


def load_derived(path: str | Path, overrides: list[str] | None = None,
                 allow_unstable: bool = False
                 ) -> tuple[DerivedQuantities, SystemConfig | None, dict]:
    """Load a config file all the way to a DerivedQuantities record.

    Returns ``(derived, system_or_None, values)``; ``system`` is None for
    raw-kind files.
    """
    kind, values = load_config(path, overrides)
    if kind == "physical":
        system = _build_physical(values)
        return derive(system, allow_unstable=allow_unstable), system, values
    return _build_raw(values, allow_unstable), None, values


def format_config(values: dict) -> str:
    """Canonical text for a parsed config (SI values, sorted keys)."""
    lines = [f"kind = {values.get('kind', 'physical')}"]
    for key in sorted(k for k in values if k != "kind"):
        v = values[key]
        lines.append(f"{key} = {v}" if isinstance(v, str) else f"{key} = {v:.12g}")
    return "\n".join(lines) + "\n"


def config_digest(values: dict) -> str:
    """Short stable hash of the effective configuration."""
    return hashlib.sha256(format_config(values).encode()).hexdigest()[:12]


def bundled_config_path(name: str) -> Path:
    """Path of a configuration file shipped with the package."""
    ref = resources.files("sqlimit").joinpath("data", name)
    p = Path(str(ref))
    if not p.exists():
        raise FileNotFoundError(f"no bundled config named '{name}'")
    return p


def default_config_path() -> Path:
    """The shipped membrane-in-cavity default parameter set."""
    return bundled_config_path("default.cfg")
