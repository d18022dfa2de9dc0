"""Decoherence functions from trajectories and non-Markovianity measures.

For pure dephasing the trace distance of the optimal (orthogonal) pair of
initial states is |rho_01(t) / rho_01(0)| = exp(Gamma(t)), so both measures
reduce to sums over the intervals on which Gamma increases:

    N_BLP = sum_j [exp Gamma(b_j) - exp Gamma(a_j)]
    N_RHP = sum_j [Gamma(b_j) - Gamma(a_j)]
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import io
from .errors import DomainError, ParameterError
from .exact import DecoherenceTrace, exact_trace, longtime_rate
from .states import validate_density

COHERENCE_FLOOR = 1e-300


def trace_distance(rho1, rho2) -> float:
    """Half the sum of |eigenvalues| of rho1 - rho2."""
    rho1 = validate_density(rho1, name="rho1", psd_tol=1e-8)
    rho2 = validate_density(rho2, rho1.shape[0], name="rho2", psd_tol=1e-8)
    diff = rho1 - rho2
    ev = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def gamma_from_coherence(traj, source: str = "rc_qme") -> DecoherenceTrace:
    """Gamma(t) = ln|rho_01(t)| - ln|rho_01(0)| of a spin trajectory.

    Magnitudes below 1e-300 are clamped to the floor and the trace is flagged
    with ``meta['clamped'] = True``.
    """
    c = np.abs(np.asarray(traj.states)[:, 0, 1])
    if not c[0] > 0:
        raise DomainError("initial coherence vanishes, Gamma is undefined")
    clamped = bool(np.any(c < COHERENCE_FLOOR))
    if clamped:
        warnings.warn("coherence fell below 1e-300; Gamma clamped at the floor",
                      RuntimeWarning, stacklevel=2)
    g = np.log(np.maximum(c, COHERENCE_FLOOR)) - math.log(c[0])
    meta = dict(getattr(traj, "meta", {}) or {})
    meta["clamped"] = clamped
    return DecoherenceTrace(traj.times, g, source, meta)


@dataclass
class MonotoneIntervals:
    """Grid intervals (a_j, b_j) on which the signal increases."""

    intervals: list
    tol: float
    index_pairs: list = field(default_factory=list)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def to_list(self):
        return [[float(a), float(b)] for a, b in self.intervals]


def increasing_intervals(trace: DecoherenceTrace, tol: float | None = None) -> MonotoneIntervals:
    """Maximal runs of positive forward slope, merged across shallow one-sample dips.

    A segment [t_i, t_{i+1}] counts as increasing when its forward difference
    quotient exceeds ``tol`` (default 1e-9 * max|Gamma|, which screens out
    integrator noise).
    """
    t, g = trace.times, trace.gamma_values
    if t.size < 3:
        raise ParameterError("need at least 3 samples")
    if tol is None:
        tol = 1e-9 * float(np.max(np.abs(g)))
    rising = np.diff(g) / np.diff(t) > tol
    runs = []
    i, n = 0, rising.size
    while i < n:
        if not rising[i]:
            i += 1
            continue
        j = i
        while j < n and rising[j]:
            j += 1
        runs.append([i, j])  # segments i..j-1, so grid points i..j
        i = j
    merged = []
    for a, b in runs:
        if merged and a - merged[-1][1] <= 1:
            a0, b0 = merged[-1]
            # bridge a one-sample dip only if it is shallower than both rises,
            # so a merged interval never hides a real decrease
            if g[b] - g[a0] >= max(g[b0] - g[a0], g[b] - g[a]):
                merged[-1][1] = b
                continue
        merged.append([a, b])
    pairs = [(a, b) for a, b in merged]
    return MonotoneIntervals([(float(t[a]), float(t[b])) for a, b in pairs], float(tol), pairs)


def _pairs(trace, intervals):
    if intervals.index_pairs:
        return intervals.index_pairs
    idx = lambda x: int(np.searchsorted(trace.times, x))  # noqa: E731
    return [(idx(a), idx(b)) for a, b in intervals.intervals]


def blp_measure(trace: DecoherenceTrace, intervals: MonotoneIntervals) -> float:
    g = trace.gamma_values
    # e^a (e^(b-a) - 1) keeps tiny rises from cancelling to zero
    total = sum(math.exp(g[a]) * math.expm1(g[b] - g[a]) for a, b in _pairs(trace, intervals))
    return float(max(total, 0.0))


def rhp_measure(trace: DecoherenceTrace, intervals: MonotoneIntervals) -> float:
    g = trace.gamma_values
    total = sum(g[b] - g[a] for a, b in _pairs(trace, intervals))
    return float(max(total, 0.0))


@dataclass
class NonMarkovReport:
    n_blp: float
    n_rhp: float
    intervals: MonotoneIntervals
    trace: DecoherenceTrace
    horizon: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_blp": self.n_blp,
            "n_rhp": self.n_rhp,
            "intervals": self.intervals.to_list(),
            "n_intervals": len(self.intervals),
            "horizon": self.horizon,
            "provenance": {"source": self.trace.source, "slope_tol": self.intervals.tol,
                           "n_samples": int(self.trace.times.size),
                           "parameters": self.trace.meta, **self.provenance},
        }

    def to_json(self, path):
        io.write_json(path, self.to_dict())


def nonmarkov_report(trace: DecoherenceTrace, tol: float | None = None,
                     provenance: dict | None = None) -> NonMarkovReport:
    iv = increasing_intervals(trace, tol)
    return NonMarkovReport(blp_measure(trace, iv), rhp_measure(trace, iv), iv, trace,
                           float(trace.times[-1]), dict(provenance or {}))


# ---------------------------------------------------------------------------
# horizon

def settled_time(times, gamma_values, rate: float, window: float, rel: float = 0.01) -> float:
    """Earliest T such that |dGamma/dt + rate| < rel * rate over [T - window, T].

    Returns ``inf`` when the trace never settles.
    """
    t = np.asarray(times, dtype=float)
    g = np.asarray(gamma_values, dtype=float)
    if not rate > 0:
        raise ParameterError("rate must be > 0")
    bad = np.abs(np.gradient(g, t) + rate) >= rel * rate
    # last violation before each index, scanning forward
    last_bad = np.maximum.accumulate(np.where(bad, t, -np.inf))
    ok = (t - window >= t[0]) & (last_bad < t - window)
    hit = np.flatnonzero(ok)
    return float(t[hit[0]]) if hit.size else math.inf


def dephasing_horizon(p, beta: float, *, rel: float = 0.01, window: float | None = None,
                      dt: float = 0.01, t_limit: float = 1e5) -> float:
    """Final time t_f for a dephasing run: where the exact Gamma has settled.

    The window defaults to four RC periods, 8 pi / W. The exact trace is
    evaluated on growing grids until the settling time falls inside.
    """
    rate = longtime_rate(p, beta).rate
    if rate == 0.0:
        raise ParameterError("no decoherence at lam = 0, horizon undefined")
    if window is None:
        window = 8.0 * math.pi / p.omega_rc
    t_max = max(50.0, 4.0 * window)
    while t_max <= t_limit:
        times = np.arange(0.0, t_max + 0.5 * dt, dt)
        tr = exact_trace(times, p, beta)
        ts = settled_time(times, tr.gamma_values, rate, window, rel)
        if math.isfinite(ts):
            return ts
        t_max *= 2.0
    raise ParameterError(f"Gamma does not settle before t = {t_limit:g}")
