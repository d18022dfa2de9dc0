"""Run configuration, single runs, (lam, gamma) measure sweeps and M-convergence studies."""
from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .errors import ConfigError, RCQMEError
from .exact import exact_trace, longtime_rate, tau_d_json
from .extended import ModelKind, build_extended, default_initial_spin, embed_initial, thermal_rc_state
from .measures import dephasing_horizon, gamma_from_coherence, nonmarkov_report, trace_distance
from .redfield import SpinTrajectory, bmr_qubit_trajectory, build_generator, propagate_spin
from .spectra import BathSpec, BrownianParams, OhmicParams

RUN_METHODS = ("exact", "rc_qme", "bmr")
INTEGRATORS = ("rk4", "expm")


@dataclass(frozen=True)
class RunConfig:
    """One simulation. Defaults: delta = 1, W = 3, T = 0.5 (beta = 2),
    cutoff = 1000 pi, M = 8.

    ``t_max = None`` selects the horizon automatically (dephasing only): the
    time at which the exact Gamma has settled onto its asymptotic slope.
    """

    model: str = "pure_dephasing"
    method: str = "rc_qme"
    delta: float = 1.0
    lam: float = 0.1
    gamma: float = 0.1
    omega_rc: float = 3.0
    cutoff: float = 1000.0 * math.pi
    beta: float = 2.0
    m_levels: int = 8
    t_max: Optional[float] = 30.0
    n_points: int = 3001
    integrator: str = "rk4"
    step: Optional[float] = None
    measures: bool = True
    output_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build from a flat mapping; ``T``/``temperature`` is converted, beta wins if both are given."""
        data = dict(data)
        problems = []
        temp = None
        for key in ("T", "temperature"):
            if key in data:
                temp = data.pop(key)
        if temp is not None and "beta" not in data:
            try:
                temp = float(temp)
                if not (temp > 0 and math.isfinite(temp)):
                    raise ValueError
                data["beta"] = 1.0 / temp
            except (TypeError, ValueError):
                problems.append(f"T: must be a positive number, got {temp!r}")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        problems += [f"{k}: unknown field" for k in unknown]
        cfg = cls(**{k: v for k, v in data.items() if k in names})
        problems += cfg.problems()
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def from_json(cls, path, overrides: dict | None = None) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ConfigError(["config file must hold a JSON object"])
        data.update(overrides or {})
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = ModelKind.parse(self.model).value
        return d

    def problems(self) -> list:
        out = []
        try:
            model = ModelKind.parse(self.model)
        except RCQMEError:
            out.append(f"model: unknown value {self.model!r}")
            model = None
        if self.method not in RUN_METHODS:
            out.append(f"method: must be one of {RUN_METHODS}, got {self.method!r}")
        if self.method == "exact" and model is ModelKind.SPIN_BOSON:
            out.append("method: exact solution exists only for the pure_dephasing model")
        if self.integrator not in INTEGRATORS:
            out.append(f"integrator: must be one of {INTEGRATORS}, got {self.integrator!r}")

        def num(name, positive=True, allow_zero=False):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                out.append(f"{name}: must be a finite number, got {v!r}")
            elif positive and not (v > 0 or (allow_zero and v == 0)):
                out.append(f"{name}: must be {'>= 0' if allow_zero else '> 0'}, got {v!r}")

        for name in ("delta", "gamma", "omega_rc", "cutoff", "beta"):
            num(name)
        num("lam", allow_zero=True)
        if not isinstance(self.m_levels, int) or isinstance(self.m_levels, bool) or self.m_levels < 2:
            out.append(f"m_levels: must be an integer >= 2, got {self.m_levels!r}")
        if self.t_max is None:
            if model is ModelKind.SPIN_BOSON:
                out.append("t_max: automatic horizon is only defined for pure_dephasing")
            elif isinstance(self.lam, (int, float)) and self.lam == 0:
                out.append("t_max: automatic horizon needs lam > 0")
        else:
            num("t_max")
        if not isinstance(self.n_points, int) or isinstance(self.n_points, bool) or self.n_points < 3:
            out.append(f"n_points: must be an integer >= 3, got {self.n_points!r}")
        if self.step is not None:
            num("step")
        return out

    def validate(self) -> "RunConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def model_kind(self) -> ModelKind:
        return ModelKind.parse(self.model)

    def brownian(self) -> BrownianParams:
        return BrownianParams(self.omega_rc, self.gamma, self.lam)

    def residual_bath(self) -> BathSpec:
        return BathSpec(self.beta, OhmicParams(self.gamma, self.cutoff))

    def resolved(self) -> "RunConfig":
        """Copy with the automatic horizon filled in."""
        cfg = self.validate()
        if cfg.t_max is None:
            cfg = dataclasses.replace(cfg, t_max=dephasing_horizon(cfg.brownian(), cfg.beta))
        return cfg

    def times(self) -> np.ndarray:
        if self.t_max is None:
            raise ConfigError(["t_max: unresolved, call resolved() first"])
        return np.linspace(0.0, float(self.t_max), int(self.n_points))


def simulate(cfg: RunConfig, rho_spin=None) -> SpinTrajectory:
    """Spin trajectory for a resolved config (no files written)."""
    cfg = cfg.resolved()
    model = cfg.model_kind
    times = cfg.times()
    rho_spin = default_initial_spin(model) if rho_spin is None else np.asarray(rho_spin, complex)
    meta = {"config": cfg.to_dict()}
    if cfg.method == "exact":
        g = exact_trace(times, cfg.brownian(), cfg.beta).gamma_values
        states = np.repeat(rho_spin[None], times.size, axis=0)
        states[:, 0, 1] = rho_spin[0, 1] * np.exp(g - 1j * cfg.delta * times)
        states[:, 1, 0] = np.conj(states[:, 0, 1])
        return SpinTrajectory(times, states, {**meta, "integrator": "closed_form"})
    if cfg.method == "bmr":
        traj = bmr_qubit_trajectory(model, cfg.delta, cfg.brownian(), cfg.beta, rho_spin, times,
                                    method=cfg.integrator, h=cfg.step)
        traj.meta = {**traj.meta, **meta}
        return traj
    system = build_extended(model, cfg.delta, cfg.lam, cfg.omega_rc, cfg.m_levels)
    gen = build_generator(system, cfg.residual_bath())
    rho0 = embed_initial(rho_spin, thermal_rc_state(cfg.beta, cfg.omega_rc, cfg.m_levels), system)
    traj = propagate_spin(gen, rho0, times, method=cfg.integrator, h=cfg.step)
    traj.meta = {**traj.meta, **meta}
    return traj


@dataclass
class RunResult:
    config: RunConfig
    trajectory: SpinTrajectory
    report: Optional[object] = None
    files: dict = field(default_factory=dict)
    trace_distance: Optional[np.ndarray] = None


def run_single(cfg: RunConfig, out_dir=None) -> RunResult:
    """Simulate one config and write its output bundle.

    Files: trajectory.csv, resolved_config.json and, when measures are on,
    gamma.csv and report.json (dephasing), or trace_distance.csv and
    report.json with the raw pairwise distance (spin-boson).
    """
    cfg = cfg.resolved()
    traj = simulate(cfg)
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    result = RunResult(cfg, traj)
    conf = cfg.to_dict()
    extra = {"tau_d": tau_d_json(longtime_rate(cfg.brownian(), cfg.beta).tau_d)}
    if cfg.measures and cfg.model_kind is ModelKind.PURE_DEPHASING:
        trace = gamma_from_coherence(traj, source=cfg.method)
        trace.meta = {"config": conf}
        result.report = nonmarkov_report(trace, provenance={"config": conf, **extra})
    elif cfg.measures:
        # BLP needs a maximization over state pairs here; emit the raw distance of |+>, |->
        other = simulate(cfg, rho_spin=0.5 * np.array([[1, 1], [1, 1]], dtype=complex))
        d = np.array([trace_distance(a, b) for a, b in zip(traj.states, other.states)])
        result.report = {"model": cfg.model_kind.value, "n_blp": None, "n_rhp": None,
                         "pair": ["|->", "|+>"], "max_trace_distance_increase":
                         float(max(0.0, np.max(np.diff(d)))), "config": conf, **extra}
        result.trace_distance = d
    if out_dir is None:
        return result
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"trajectory": out / "trajectory.csv", "config": out / "resolved_config.json"}
    traj.to_csv(files["trajectory"])
    io.write_json(files["config"], conf)
    if result.report is not None:
        files["report"] = out / "report.json"
        if cfg.model_kind is ModelKind.PURE_DEPHASING:
            files["gamma"] = out / "gamma.csv"
            result.report.trace.to_csv(files["gamma"])
            result.report.to_json(files["report"])
        else:
            files["trace_distance"] = out / "trace_distance.csv"
            io.write_csv(files["trace_distance"], {"time": traj.times,
                                                   "trace_distance": result.trace_distance},
                         {"config": conf, "pair": ["|->", "|+>"]})
            io.write_json(files["report"], result.report)
    result.files = {k: str(v) for k, v in files.items()}
    return result


# ---------------------------------------------------------------------------
# sweeps

def log_axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


@dataclass
class SweepResult:
    lambda_axis: np.ndarray
    gamma_axis: np.ndarray
    n_blp: np.ndarray  # (n_lambda, n_gamma), nan where the cell failed
    n_rhp: np.ndarray
    cells: list  # per-cell provenance dicts, row-major in (lambda, gamma)

    @property
    def failures(self) -> list:
        return [c for c in self.cells if c.get("error")]

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lam, gam = np.meshgrid(self.lambda_axis, self.gamma_axis, indexing="ij")
        ok = np.array([0.0 if c.get("error") else 1.0 for c in self.cells])
        io.write_csv(out / "cells.csv", {"lam": lam.ravel(), "gamma": gam.ravel(),
                                         "n_blp": self.n_blp.ravel(), "n_rhp": self.n_rhp.ravel(),
                                         "horizon": [c.get("horizon", np.nan) for c in self.cells],
                                         "ok": ok},
                     {"layout": "row-major, lam outer, gamma inner",
                      "base_config": self.cells[0]["config"] if self.cells else {}})
        io.write_json(out / "sweep.json", {"lambda_axis": self.lambda_axis,
                                           "gamma_axis": self.gamma_axis,
                                           "n_blp": self.n_blp, "n_rhp": self.n_rhp,
                                           "cells": self.cells})


def _measure_cell(args):
    i, j, cfg_dict = args
    cfg = RunConfig.from_dict(cfg_dict)
    cell = {"i": i, "j": j, "lam": cfg.lam, "gamma": cfg.gamma}
    try:
        cfg = cfg.resolved()
        traj = simulate(cfg)
        rep = nonmarkov_report(gamma_from_coherence(traj, source=cfg.method))
        cell.update(n_blp=rep.n_blp, n_rhp=rep.n_rhp, horizon=cfg.t_max,
                    n_intervals=len(rep.intervals), config=cfg.to_dict())
    except (RCQMEError, ValueError, ArithmeticError, MemoryError) as exc:
        cell.update(error=f"{type(exc).__name__}: {exc}", config=cfg.to_dict())
    return cell


def sweep_measures(base: RunConfig, lambda_axis, gamma_axis, method: str | None = None, *,
                   dt: float = 0.01, workers: int = 1) -> SweepResult:
    """N_BLP and N_RHP on a (lam, gamma) grid; each cell uses its own automatic horizon.

    Cells are independent; failures are recorded in the cell and the sweep
    continues.
    """
    lambda_axis = np.asarray(lambda_axis, dtype=float)
    gamma_axis = np.asarray(gamma_axis, dtype=float)
    problems = []
    if lambda_axis.size == 0 or np.any(~(lambda_axis > 0)):
        problems.append("lambda_axis: must be nonempty and positive")
    if gamma_axis.size == 0 or np.any(~(gamma_axis > 0)):
        problems.append("gamma_axis: must be nonempty and positive")
    if ModelKind.parse(base.model) is not ModelKind.PURE_DEPHASING:
        problems.append("model: measure sweeps are defined for pure_dephasing")
    if problems:
        raise ConfigError(problems)
    method = method or base.method
    jobs = []
    for i, lam in enumerate(lambda_axis):
        for j, gam in enumerate(gamma_axis):
            # n_points is a placeholder; each cell sets it from its horizon and dt
            d = {**base.to_dict(), "lam": float(lam), "gamma": float(gam), "method": method,
                 "t_max": None, "n_points": 3, "output_dir": None}
            jobs.append((i, j, d))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_measure_cell_dt, [(job, dt) for job in jobs]))
    else:
        cells = [_measure_cell_dt((job, dt)) for job in jobs]
    cells.sort(key=lambda c: (c["i"], c["j"]))
    shape = (lambda_axis.size, gamma_axis.size)
    blp, rhp = np.full(shape, np.nan), np.full(shape, np.nan)
    for c in cells:
        if not c.get("error"):
            blp[c["i"], c["j"]], rhp[c["i"], c["j"]] = c["n_blp"], c["n_rhp"]
    return SweepResult(lambda_axis, gamma_axis, blp, rhp, cells)


def _measure_cell_dt(arg):
    (i, j, d), dt = arg
    cfg = RunConfig.from_dict(d)
    try:
        t_f = dephasing_horizon(cfg.brownian(), cfg.beta, dt=dt)
        d = {**d, "t_max": t_f, "n_points": int(round(t_f / dt)) + 1}
    except RCQMEError as exc:
        return {"i": i, "j": j, "lam": cfg.lam, "gamma": cfg.gamma,
                "error": f"{type(exc).__name__}: {exc}", "config": cfg.to_dict()}
    return _measure_cell((i, j, d))


# ---------------------------------------------------------------------------
# convergence in the RC truncation

@dataclass
class ConvergenceResult:
    m_axis: list
    trajectories: list
    deviations: list  # max | |rho01_M| - |rho01_next M| | for successive pairs
    threshold: float
    converged_m: Optional[int]
    exact_deviations: Optional[list] = None

    def to_dict(self) -> dict:
        return {"m_axis": self.m_axis, "successive_max_deviation": self.deviations,
                "threshold": self.threshold, "converged_m": self.converged_m,
                "max_deviation_from_exact": self.exact_deviations}


def convergence_study(base: RunConfig, m_axis, threshold: float = 1e-3) -> ConvergenceResult:
    """RC-QME runs at each truncation M; converged at the smallest M whose
    successor changes max |rho_01(t)| by less than ``threshold``."""
    m_axis = [int(m) for m in m_axis]
    if len(m_axis) < 2 or any(b <= a for a, b in zip(m_axis, m_axis[1:])):
        raise ConfigError(["m_axis: needs >= 2 strictly ascending entries"])
    base = dataclasses.replace(base, method="rc_qme").resolved()
    trajs = [simulate(dataclasses.replace(base, m_levels=m)) for m in m_axis]
    mags = [t.abs_coherence for t in trajs]
    devs = [float(np.max(np.abs(a - b))) for a, b in zip(mags, mags[1:])]
    converged = next((m for m, d in zip(m_axis, devs) if d < threshold), None)
    exact_devs = None
    if base.model_kind is ModelKind.PURE_DEPHASING:
        ex = simulate(dataclasses.replace(base, method="exact")).abs_coherence
        exact_devs = [float(np.max(np.abs(m - ex))) for m in mags]
    return ConvergenceResult(m_axis, trajs, devs, threshold, converged, exact_devs)
