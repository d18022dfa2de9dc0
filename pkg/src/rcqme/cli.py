"""Command-line entry point: ``rcqme run | sweep | converge | measure``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, NumericalError, ParameterError, RCQMEError, ResourceError
from .exact import DecoherenceTrace
from .measures import gamma_from_coherence, nonmarkov_report
from .redfield import SpinTrajectory
from .sweep import RunConfig, convergence_study, log_axis, run_single, sweep_measures

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# flag name -> RunConfig field
_PHYSICS = {"model": str, "method": str, "delta": float, "lam": float, "gamma": float,
            "omega_rc": float, "cutoff": float, "beta": float, "T": float, "m_levels": int,
            "t_max": float, "n_points": int, "integrator": str, "step": float}


def _add_config_args(p):
    p.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    for name, typ in _PHYSICS.items():
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, type=typ, default=None)
    p.add_argument("--auto-horizon", action="store_true",
                   help="pick t_max where the exact decoherence function has settled")
    p.add_argument("--no-measures", dest="measures", action="store_false", default=None)


def _config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"config: cannot read {args.config}: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError(["config: file must hold a JSON object"])
    for name in _PHYSICS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if args.T is not None and args.beta is None:
        data.pop("beta", None)  # a --T flag beats a file beta; --beta beats both
    if getattr(args, "auto_horizon", False):
        data["t_max"] = None
    if getattr(args, "measures", None) is not None:
        data["measures"] = args.measures
    return RunConfig.from_dict(data)


def _cmd_run(args):
    cfg = _config(args)
    out = args.out or cfg.output_dir or "run"
    res = run_single(cfg, out)
    summary = {"output_dir": str(out), "files": res.files}
    if hasattr(res.report, "n_blp"):
        summary.update(n_blp=res.report.n_blp, n_rhp=res.report.n_rhp)
    print(io.dumps(summary), end="")


def _cmd_sweep(args):
    base = _config(args)
    axis = np.linspace if args.linear else log_axis
    lam = axis(args.lam_min, args.lam_max, args.n_lam)
    gam = axis(args.gamma_min, args.gamma_max, args.n_gamma)
    res = sweep_measures(base, lam, gam, dt=args.dt, workers=args.workers)
    res.write(args.out)
    print(f"{len(res.cells)} cells, {len(res.failures)} failed -> {args.out}")
    return EXIT_NUMERIC if res.failures and len(res.failures) == len(res.cells) else EXIT_OK


def _cmd_converge(args):
    base = _config(args)
    res = convergence_study(base, args.m, threshold=args.threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for m, traj in zip(res.m_axis, res.trajectories):
        traj.to_csv(out / f"trajectory_M{m}.csv")
    io.write_json(out / "convergence.json", {**res.to_dict(), "config": base.to_dict()})
    print(io.dumps(res.to_dict()), end="")


def _cmd_measure(args):
    meta, cols = io.read_csv(args.trajectory)
    if "re01" in cols:
        traj = SpinTrajectory.from_csv(args.trajectory)
        source = (meta.get("config") or {}).get("method", "rc_qme")
        trace = gamma_from_coherence(traj, source=source)
    elif "gamma" in cols:
        trace = DecoherenceTrace.from_csv(args.trajectory)
    else:
        raise ConfigError([f"{args.trajectory}: neither a trajectory nor a gamma file"])
    rep = nonmarkov_report(trace, tol=args.tol, provenance={"input": str(args.trajectory)})
    if args.out:
        rep.to_json(args.out)
    print(io.dumps({"n_blp": rep.n_blp, "n_rhp": rep.n_rhp,
                    "n_intervals": len(rep.intervals)}), end="")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcqme", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single simulation with output bundle")
    _add_config_args(p)
    p.add_argument("--out", help="output directory (default: config output_dir or ./run)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="N_BLP / N_RHP over a (lam, gamma) grid")
    _add_config_args(p)
    p.add_argument("--lam-min", type=float, default=0.1)
    p.add_argument("--lam-max", type=float, default=5.0)
    p.add_argument("--n-lam", type=int, default=21)
    p.add_argument("--gamma-min", type=float, default=0.01)
    p.add_argument("--gamma-max", type=float, default=0.1)
    p.add_argument("--n-gamma", type=int, default=21)
    p.add_argument("--linear", action="store_true", help="linear instead of log axes")
    p.add_argument("--dt", type=float, default=0.01, help="sampling step of each cell")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("converge", help="convergence in the number of RC levels")
    _add_config_args(p)
    p.add_argument("--m", type=int, nargs="+", default=[2, 3, 4, 5, 6, 8])
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--out", default="converge")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("measure", help="recompute measures from trajectory.csv or gamma.csv")
    p.add_argument("trajectory", type=Path)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_measure)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  - {prob}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, FileNotFoundError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ResourceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RCQMEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
