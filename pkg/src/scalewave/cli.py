"""``scalewave`` command line: run, verify, sweep and fit subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import _kernels
from .analysis import SweepSetup, default_window, energy_norm_series, fit_decay, run_sweep
from .config import ConfigError, RunConfig, load_config
from .energy import CSV_COLUMNS, EnergyRecord, decay_law
from .integrator import RunClass, RunOutcome, evolve, initial_data
from .operators import NonlinearityKind
from .verify import verify_homogeneous

EXIT_OK, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_VERIFY = 0, 1, 2, 3

VIRTUAL_COLUMNS = {"energy_norm": lambda row: math.hypot(row["l2_grad_u"], row["l2_v"])}


def fmt(x) -> str:
    if x is None:
        return ""
    return "%.17g" % x


def write_timeseries(path: Path, records: Sequence[EnergyRecord]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_timeseries(path: Path) -> list[dict[str, Optional[float]]]:
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in rows]


def write_json(path: Path, obj) -> None:
    # json emits the shortest repr that round-trips each float
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _json_float(x):
    return x if x is None or math.isfinite(x) else None


def _fit_summary(out: RunOutcome, cfg: RunConfig) -> Optional[dict]:
    if out.classification is not RunClass.GLOBAL:
        return None
    try:
        fit = fit_decay(energy_norm_series(out.records), default_window(cfg.t_max))
    except ValueError:
        return None
    return {"column": "energy_norm", "exponent": fit.exponent, "intercept": fit.intercept,
            "window": list(fit.window), "rms_residual": fit.rms_residual,
            "predicted": decay_law(cfg.phys_params()).predicted_norm_exponent}


def _out_dir(args, cfg: RunConfig) -> Path:
    d = Path(args.out_dir or cfg.output_dir or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    grid = cfg.grid()
    u0, u1 = initial_data(cfg.family, cfg.amplitude, cfg.width, grid, cfg.which)
    out = evolve(u0, u1, cfg.phys_params(), cfg.solver_config())
    write_timeseries(out_dir / "timeseries.csv", out.records)
    summary = {
        "classification": out.classification.value,
        "t_star": out.t_star,
        "t_star_refined": out.t_star_refined,
        "dt": out.dt,
        "n_steps": out.n_steps,
        "n_records": len(out.records),
        "grid": {"dim_mode": grid.dim_mode.value, "n_points": grid.n_points,
                 "spacing": grid.spacing, "extent": grid.extent},
        "fit": _fit_summary(out, cfg),
        "config": cfg.to_dict(),
    }
    write_json(out_dir / "outcome.json", summary)
    print(f"{out.classification.value}" + (f" t*={out.t_star:.6g}" if out.t_star is not None else ""))
    return EXIT_INCONCLUSIVE if out.classification is RunClass.INCONCLUSIVE else EXIT_OK


def cmd_verify(cfg: RunConfig, out_dir: Path) -> int:
    rep = verify_homogeneous(cfg)
    write_json(out_dir / "verify.json", _sanitize(rep.as_dict()))
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}")
    if not rep.passed:
        print("failing identities: " + ", ".join(rep.failures), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    mus = cfg.mu_values or [cfg.mu]
    ps = cfg.p_values or ([cfg.p] if cfg.p is not None else None)
    if ps is None:
        raise ConfigError("p_values", "a sweep needs p_values (or p)")
    if cfg.spacing is None:
        raise ConfigError("spacing", "sweeps use spacing, not n_points")
    kind = NonlinearityKind(cfg.nonlinearity or NonlinearityKind.UNSIGNED_POWER.value)
    setup = SweepSetup(cfg.family, cfg.width, cfg.which, cfg.spacing, cfg.dim_mode, kind)
    res = run_sweep(mus, ps, cfg.amplitude, cfg.solver_config(), setup, threads=threads)
    with (out_dir / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "p", "eps", "class", "t_star", "fit_exponent"])
        for c in res.rows():
            w.writerow([fmt(c.mu), fmt(c.p), fmt(c.eps), c.label, fmt(c.t_star),
                        fmt(c.fit.exponent if c.fit else None)])
    boundary = {}
    for mu in sorted(res.brackets):
        b = res.brackets[mu]
        boundary[repr(mu)] = {"low": b.low, "high": b.high, "open": b.open, "note": b.note}
    errors = {f"{c.mu!r},{c.p!r}": c.error for c in res.rows() if c.error}
    write_json(out_dir / "boundary.json", {"eps": cfg.amplitude, "brackets": boundary, "errors": errors})
    for c in res.rows():
        print(f"mu={c.mu:g} p={c.p:g} {c.label}")
    return EXIT_OK


def cmd_fit(path: Path, column: str, window: Optional[tuple[float, float]], out_dir: Path) -> int:
    try:
        rows = read_timeseries(path)
    except OSError as exc:
        raise ConfigError("timeseries", f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise ConfigError("timeseries", f"{path} has no data rows")
    if "t" not in rows[0]:
        raise ConfigError("column", "time series has no 't' column")
    if column in VIRTUAL_COLUMNS:
        func = VIRTUAL_COLUMNS[column]
        series = [(r["t"], func(r)) for r in rows]
    elif column in rows[0]:
        series = [(r["t"], r[column]) for r in rows]
    else:
        raise ConfigError("column", f"{column!r} not found in {path}")
    if any(v is None for _, v in series):
        raise ConfigError("column", f"{column!r} has empty entries")
    try:
        fit = fit_decay(series, window)
    except ValueError as exc:
        raise ConfigError("window", str(exc)) from exc
    write_json(out_dir / "fit.json", {"column": column, "source": str(path), "exponent": fit.exponent,
                                      "intercept": fit.intercept, "window": list(fit.window),
                                      "rms_residual": fit.rms_residual, "n_samples": fit.n_samples})
    print(f"exponent {fit.exponent:.6g} over [{fit.window[0]:g}, {fit.window[1]:g}]")
    return EXIT_OK


def _sanitize(obj):
    if isinstance(obj, float):
        return _json_float(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="sweep worker threads")

    ap = argparse.ArgumentParser(prog="scalewave", parents=[common],
                                 description="Damped wave simulations with scale-invariant dissipation.")
    ap.add_argument("--backend", choices=["numba", "numpy"], default=None,
                    help="kernel backend (default from SCALEWAVE_BACKEND)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="evolve one configuration")
    sub.add_parser("verify", parents=[common], help="check the homogeneous energy identities")
    sub.add_parser("sweep", parents=[common], help="classify a (mu, p) grid")
    fp = sub.add_parser("fit", parents=[common], help="fit a power law to a time-series column")
    fp.add_argument("timeseries", type=Path)
    fp.add_argument("--column", default="energy_norm")
    fp.add_argument("--window", type=float, nargs=2, metavar=("T_MIN", "T_MAX"))
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("out_dir", None), ("threads", 1)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.backend:
        _kernels.use_backend(args.backend)
    try:
        if args.threads < 1:
            raise ConfigError("--threads", f"must be >= 1, got {args.threads}")
        if args.command == "fit":
            out_dir = Path(args.out_dir) if args.out_dir else args.timeseries.parent
            out_dir.mkdir(parents=True, exist_ok=True)
            window = tuple(args.window) if args.window else None
            return cmd_fit(args.timeseries, args.column, window, out_dir)
        cfg = load_config(args.config)
        out_dir = _out_dir(args, cfg)
        if args.command == "run":
            return cmd_run(cfg, out_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out_dir)
        return cmd_sweep(cfg, out_dir, args.threads)
    except (ConfigError, TypeError) as exc:
        print(f"scalewave: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"scalewave: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
