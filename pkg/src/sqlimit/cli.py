"""Command-line front end.

Subcommands: ``derive``, ``analyze``, ``spectra``, ``simulate``, ``reduce``,
``sweep``.  Every output is self-describing: header comments carry the
package version, a short hash of the effective configuration and, where
relevant, the seed.  Exit codes: 0 success, 2 configuration or usage error,
3 model-domain error (reported as one JSON line on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .configio import (ConfigError, config_digest, default_config_path,
                       load_derived)
from .langevin import SimConfig, StepTooLarge, generate_noise, integrate
from .montecarlo import monte_carlo_resolution
from .params import UnstableSpring, validate_regime, without_spring
from .reducer import DegenerateModes, QndViolated, reduce, to_tripartite
from .resolution import (NoMinimum, ZeroSignal, feasibility_report,
                         resolution_squared, sql_ratio)
from .spectra import backaction_spectrum, rp_transfer
from .sweep import InvalidAxis, SweepAxis, SweepSpec, run_sweep
from .system_file import load_system

_DOMAIN_ERRORS = (UnstableSpring, DegenerateModes, QndViolated, ZeroSignal,
                  NoMinimum, StepTooLarge)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return str(value)


def _json_safe(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{value:.12g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


class _Writer:
    """CSV (with # comment header) or JSON-lines record writer."""

    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream

    def comments(self, items: dict):
        if self.fmt == "csv":
            for key, value in items.items():
                self.stream.write(f"# {key} = {_fmt(value)}\n")
        else:
            meta = {k: _json_safe(v) for k, v in items.items()}
            self.stream.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")

    def table(self, records: list[dict]):
        if not records:
            return
        if self.fmt == "csv":
            keys = list(records[0])
            self.stream.write(",".join(keys) + "\n")
            for rec in records:
                self.stream.write(",".join(_fmt(rec[k]) for k in keys) + "\n")
        else:
            for rec in records:
                safe = {k: _json_safe(v) for k, v in rec.items()}
                self.stream.write(json.dumps(safe, sort_keys=True) + "\n")


def _open_writer(args):
    stream = open(args.out, "w") if args.out else sys.stdout
    return _Writer(args.format, stream), stream is not sys.stdout


def _load(args, allow_unstable: bool):
    path = args.config or default_config_path()
    derived, system, values = load_derived(path, overrides=args.set or [],
                                           allow_unstable=allow_unstable)
    meta = {"sqlimit_version": __version__, "config": str(path),
            "config_digest": config_digest(values)}
    return derived, system, meta


def _cmd_derive(args) -> int:
    derived, _, meta = _load(args, allow_unstable=True)
    writer, close = _open_writer(args)
    writer.comments(meta)
    rec = derived.to_record()
    rec.update(validate_regime(derived).to_record())
    writer.table([rec])
    if close:
        writer.stream.close()
    return 0


def _cmd_analyze(args) -> int:
    derived, _, meta = _load(args, allow_unstable=True)
    report = feasibility_report(derived, slack=args.slack)
    base = derived if derived.spring_stable else without_spring(derived)
    lo = args.tau_min if args.tau_min else 1e-2 / base.gamma_c
    hi = args.tau_max if args.tau_max else 1e6 / base.gamma_c
    taus = np.geomspace(lo, hi, args.tau_points)
    breakdown = resolution_squared(taus, base)

    writer, close = _open_writer(args)
    meta = dict(meta)
    for key, value in sorted(report.to_record().items()):
        meta[f"feasibility.{key}"] = value
    writer.comments(meta)
    rows = []
    for i, tau in enumerate(taus):
        rows.append({"tau": tau,
                     "shot_term": breakdown.shot_term[i],
                     "backaction_term": breakdown.backaction_term[i],
                     "thermal_term": breakdown.thermal_term[i],
                     "total": breakdown.total[i],
                     "delta_n": breakdown.delta_n[i]})
    writer.table(rows)
    if close:
        writer.stream.close()
    return 0


def _cmd_spectra(args) -> int:
    derived, _, meta = _load(args, allow_unstable=True)
    if args.scale == "log":
        lo = args.omega_min if args.omega_min else derived.omega_s / 100
        grid = np.geomspace(lo, args.omega_max or 5 * derived.omega_s,
                            args.points)
    else:
        grid = np.linspace(args.omega_min or 0.0,
                           args.omega_max or 5 * derived.omega_s, args.points)
    resp = rp_transfer(grid, derived)
    s_ba = backaction_spectrum(grid, derived, psd=args.psd)
    rows = []
    for k, w in enumerate(grid):
        row = {"omega": w}
        for name, coeff in (("v1", resp.coeff_v1), ("v2", resp.coeff_v2),
                            ("q", resp.coeff_q)):
            row[f"re_{name}"] = coeff[k].real
            row[f"im_{name}"] = coeff[k].imag
            row[f"abs2_{name}"] = abs(coeff[k]) ** 2
        row["backaction"] = s_ba[k]
        rows.append(row)
    writer, close = _open_writer(args)
    writer.comments({**meta, "vacuum_psd": args.psd})
    writer.table(rows)
    if close:
        writer.stream.close()
    return 0


def _parse_tau_grid(args, derived) -> tuple[float, ...]:
    if args.tau_grid:
        return tuple(float(tok) for tok in args.tau_grid.split(","))
    lo = args.tau_min if args.tau_min else 20.0 / derived.gamma_c
    hi = args.tau_max if args.tau_max else 2e5 / derived.gamma_c
    return tuple(np.geomspace(lo, hi, args.tau_points))


def _cmd_simulate(args) -> int:
    derived, _, meta = _load(args, allow_unstable=False)
    sim = SimConfig(n_trials=args.trials, seed=args.seed,
                    tau_grid=_parse_tau_grid(args, derived), mode=args.mode,
                    dt=args.dt, N_true=args.n_true,
                    vacuum_psd=args.vacuum_psd)
    result = monte_carlo_resolution(sim, derived)
    writer, close = _open_writer(args)
    writer.comments({**meta, "seed": sim.seed, "mode": sim.mode,
                     "n_trials": sim.n_trials, "dt": result.dt,
                     "N_true": sim.N_true, "vacuum_psd": sim.vacuum_psd,
                     "calibration_constant": result.calibration_constant})
    writer.table([p.to_record() for p in result])
    if close:
        writer.stream.close()

    if args.dump_trajectories:
        _dump_trajectories(args, sim, derived)
    return 0


def _dump_trajectories(args, sim: SimConfig, derived) -> None:
    weff = derived.omega_eff
    dt = 1.0 / (20 * max(weff, derived.gamma_c))
    duration = min(sim.duration, max(40 * np.pi / weff, 20 / derived.gamma_c))
    n_steps = int(np.ceil(duration / dt))
    stem = Path(args.out).with_suffix("") if args.out else Path("trajectory")
    thermal_psd = 2 * derived.gamma_m * derived.n_th
    for trial in range(args.dump_trajectories):
        rng = np.random.default_rng((sim.seed, trial, 0xA11CE))
        from .langevin import sample_initial_conditions
        q0, p0 = sample_initial_conditions(rng, sim.N_true)
        noise = generate_noise(sim.seed, trial, n_steps, dt,
                               vacuum_psd=sim.vacuum_psd,
                               thermal_psd=thermal_psd)
        traj = integrate(SimConfig(n_trials=2, seed=sim.seed,
                                   tau_grid=(duration,), mode="adiabatic"),
                         derived, noise, q0, p0)
        path = Path(f"{stem}_trial{trial}.csv")
        with open(path, "w") as fh:
            fh.write("# t,q,p,re_d1,im_d1\n")
            for k in range(len(traj.t)):
                fh.write(f"{traj.t[k]:.12g},{traj.q[k]:.12g},"
                         f"{traj.p[k]:.12g},{traj.d1[k].real:.12g},"
                         f"{traj.d1[k].imag:.12g}\n")


def _cmd_reduce(args) -> int:
    if not args.system:
        raise ConfigError("reduce needs --system FILE")
    system = load_system(args.system)
    red = reduce(system)
    tri = to_tripartite(system, allow_unstable=True)
    writer, close = _open_writer(args)
    writer.comments({"sqlimit_version": __version__,
                     "system": str(args.system), "qnd_ok": red.qnd_ok,
                     "idle_index": tri.idle_index + 1})
    row = {"omega_s": tri.omega_s, "G_0": tri.G_0, "c_bar": tri.c_bar,
           "probe_quadratic": tri.probe_quadratic,
           "tripartite_quadratic": tri.tripartite_quadratic,
           "far_quadratic": tri.far_quadratic}
    if tri.derived is not None:
        row.update(tri.derived.to_record())
        row.update(sql_ratio(tri.derived).to_record())
    writer.table([row])
    if close:
        writer.stream.close()
    return 0


def _cmd_sweep(args) -> int:
    _, system, meta = _load(args, allow_unstable=True)
    if system is None:
        raise ConfigError("sweep needs a physical (kind=physical) config")
    axes = []
    for spec_str in args.axis:
        parts = spec_str.split(":")
        if len(parts) != 5:
            raise InvalidAxis(f"axis '{spec_str}' must be "
                              "name:scale:min:max:n_points")
        axes.append(SweepAxis(name=parts[0], scale=parts[1],
                              min=float(parts[2]), max=float(parts[3]),
                              n_points=int(parts[4])))
    spec = SweepSpec(base=system, axes=tuple(axes), slack=args.slack)
    rows = run_sweep(spec, n_workers=args.workers)
    for row in rows:  # rectangular table: align keys across error rows
        row.setdefault("error_detail", "")
    keys = list(rows[0])
    for row in rows:
        for key in keys:
            row.setdefault(key, "")
    writer, close = _open_writer(args)
    writer.comments({**meta, "axes": ";".join(args.axis),
                     "workers": args.workers})
    writer.table([{k: row.get(k, "") for k in keys} for row in rows])
    if close:
        writer.stream.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqlimit",
        description="Quantum-limit analysis and Langevin Monte Carlo for "
                    "dispersive readout of mechanical energy quanta.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="config file (default: bundled parameter set)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value (repeatable)")
        p.add_argument("--out", type=Path, default=None,
                       help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("derive", help="derived rates and regime checks")
    common(p)
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("analyze",
                       help="feasibility report and resolution curve")
    common(p)
    p.add_argument("--slack", type=float, default=1.0)
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--tau-points", type=int, default=200)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("spectra", help="force transfer and back-action spectra")
    common(p)
    p.add_argument("--omega-min", type=float, default=None)
    p.add_argument("--omega-max", type=float, default=None)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--psd", type=float, default=1.0,
                   help="vacuum quadrature spectral density")
    p.set_defaults(func=_cmd_spectra)

    p = sub.add_parser("simulate", help="Monte Carlo resolution vs closed form")
    common(p)
    p.add_argument("--trials", type=int, default=400)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--mode", choices=("full", "adiabatic"), default="adiabatic")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tau-grid", type=str, default=None,
                   help="comma-separated integration times")
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--tau-points", type=int, default=8)
    p.add_argument("--n-true", type=float, default=0.0,
                   help="initial quantum number (0 matches the closed form)")
    p.add_argument("--vacuum-psd", type=float, default=1.0)
    p.add_argument("--dump-trajectories", type=int, default=0, metavar="K",
                   help="write the first K sample paths as CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reduce", help="dispersive reduction of a mode system")
    p.add_argument("--system", type=Path, required=True,
                   help="mode-system description file")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("sweep", help="parameter sweep of the feasibility map")
    common(p)
    p.add_argument("--axis", action="append", required=True,
                   metavar="NAME:SCALE:MIN:MAX:N",
                   help="sweep axis (repeatable, at most twice)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--slack", type=float, default=1.0)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidAxis, FileNotFoundError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return 2
    except _DOMAIN_ERRORS as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
