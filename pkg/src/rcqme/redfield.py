"""Redfield generator for the supersystem and time propagation.

In the energy basis of the (super)system the generator reads

    L(rho) = -i [H, rho] + W rho S + S rho W^dag - S W rho - rho W^dag S

with S the coupling operator and the filtered operator
``W_jk = S_jk * rate(E_j - E_k)``. The rate is the piecewise thermal rate of
:mod:`rcqme.spectra` (emission at E_j < E_k carries the factor n + 1), which
makes the Gibbs state stationary in the weak-coupling limit. The imaginary
(Lamb-shift) part of the bath correlation is left out, and no secular
approximation is made.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import io
from .errors import DimensionError, IntegrationError, ParameterError, ResourceError
from .exact import bmr_coherence
from .extended import ExtendedSystem, ModelKind, partial_trace_rc
from .spectra import BathSpec, BrownianParams, OhmicParams, brownian_rate, rc_rate
from .states import SIGMA_X, SIGMA_Z, validate_density

MODES = ("operator_product", "dense")
METHODS = ("rk4", "expm")
DENSE_MAX_DIM = 64


@dataclass(frozen=True, eq=False)
class RedfieldGenerator:
    eigvals: np.ndarray
    u: np.ndarray
    s_energy: np.ndarray
    w_op: np.ndarray
    mode: str
    step_rule: float  # default upper bound on the integration step
    spin_blocks: Optional[tuple] = None
    m_levels: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bohr", self.eigvals[:, None] - self.eigvals[None, :])
        object.__setattr__(self, "_sw", self.s_energy @ self.w_op)
        if self.mode == "dense":
            object.__setattr__(self, "_dense", self.superoperator())

    @property
    def dim(self) -> int:
        return self.eigvals.size

    def to_energy(self, rho):
        return self.u.conj().T @ rho @ self.u

    def from_energy(self, rho):
        return self.u @ rho @ self.u.conj().T

    def dissipator(self, rho):
        """Dissipative part of the generator, energy basis."""
        w, s, sw = self.w_op, self.s_energy, self._sw
        return w @ rho @ s + s @ rho @ w.conj().T - sw @ rho - rho @ sw.conj().T

    def apply(self, rho):
        """L(rho) for an energy-basis matrix (matrix products, any size)."""
        if self.mode == "dense":
            return (self._dense @ np.ravel(rho)).reshape(self.dim, self.dim)
        return -1j * self.bohr * rho + self.dissipator(rho)

    def apply_site(self, rho):
        """L(rho) for a matrix given in the site (spin x Fock) basis."""
        return self.from_energy(self.apply(self.to_energy(rho)))

    def superoperator(self) -> np.ndarray:
        """Dense (d^2 x d^2) matrix acting on row-major vec(rho) in the energy basis."""
        d = self.dim
        if d > DENSE_MAX_DIM:
            raise ResourceError(f"dense superoperator needs dim <= {DENSE_MAX_DIM}, got {d}")
        return _block_superop(self.bohr, self.w_op, self.s_energy, self._sw,
                              self.w_op, self.s_energy, self._sw)

    def sector_superoperator(self, a: int, b: int) -> np.ndarray:
        """Generator restricted to the spin block (a, b) of the dephasing model.

        Works because sigma_z commutes with H and S, so each spin block of the
        density matrix evolves on its own. Size is M^2 x M^2.
        """
        if self.spin_blocks is None:
            raise ParameterError("sector decomposition needs a dephasing generator "
                                 "with a sigma_z-respecting eigenbasis")
        ia, ib = self.spin_blocks[a], self.spin_blocks[b]
        sub = lambda m, i, j: m[np.ix_(i, j)]  # noqa: E731
        return _block_superop(sub(self.bohr, ia, ib),
                              sub(self.w_op, ia, ia), sub(self.s_energy, ia, ia), sub(self._sw, ia, ia),
                              sub(self.w_op, ib, ib), sub(self.s_energy, ib, ib), sub(self._sw, ib, ib))


def _block_superop(bohr, wa, sa, swa, wb, sb, swb):
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    na, nb = bohr.shape
    ia, ib = np.eye(na), np.eye(nb)
    return (-1j * np.diag(bohr.ravel())
            + np.kron(wa, sb.T) + np.kron(sa, wb.conj())
            - np.kron(swa, ib) - np.kron(ia, swb.conj()))


def _dissipator_norm_bound(w, s):
    nw, ns = np.linalg.norm(w, 2), np.linalg.norm(s, 2)
    return 4.0 * nw * ns


def _make(eigvals, u, s_site, rate, mode, step_rule, spin_blocks=None, m_levels=None, meta=None):
    mode = {"dense_superoperator": "dense"}.get(mode, mode)
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}")
    if mode == "dense" and eigvals.size > DENSE_MAX_DIM:
        raise ResourceError(f"dense mode needs dim <= {DENSE_MAX_DIM}, got {eigvals.size}")
    s_energy = u.conj().T @ s_site @ u
    bohr = eigvals[:, None] - eigvals[None, :]
    w = s_energy * rate(bohr)
    bound = _dissipator_norm_bound(w, s_energy)
    if bound > 0:
        step_rule = min(step_rule, 2.0 / bound)
    return RedfieldGenerator(eigvals, u, s_energy, w, mode, step_rule, spin_blocks, m_levels,
                             dict(meta or {}))


def build_generator(system: ExtendedSystem, bath: BathSpec,
                    mode: str = "operator_product") -> RedfieldGenerator:
    """Redfield generator of the extended system coupled to the Ohmic residual bath."""
    if not isinstance(bath.density, OhmicParams):
        raise TypeError("the residual bath of the RC model must be Ohmic")
    rule = min(0.05 / system.delta if system.delta > 0 else math.inf,
               0.05 / system.omega_rc, 0.05 * bath.beta)
    meta = {"model": system.model.value, "delta": system.delta, "lam": system.lam,
            "omega_rc": system.omega_rc, "m_levels": system.m_levels,
            "gamma": bath.density.gamma, "cutoff": bath.density.cutoff, "beta": bath.beta}
    return _make(system.eigvals, system.u, system.s_es, lambda w: rc_rate(w, bath), mode, rule,
                 system.spin_blocks, system.m_levels, meta)


def qubit_generator(model, delta: float, p: BrownianParams, beta: float,
                    mode: str = "operator_product") -> RedfieldGenerator:
    """Born-Markov Redfield generator of the bare spin in the Brownian bath."""
    model = ModelKind.parse(model)
    bath = BathSpec(beta, p)
    h = 0.5 * delta * SIGMA_Z
    s = SIGMA_Z if model is ModelKind.PURE_DEPHASING else SIGMA_X
    evals, u = np.linalg.eigh(h)
    rule = min(0.05 / delta if delta > 0 else math.inf, 0.05 * beta)
    meta = {"model": model.value, "delta": delta, "lam": p.lam, "omega_rc": p.omega_rc,
            "gamma": p.gamma, "beta": beta, "m_levels": None}
    return _make(evals, u.astype(complex), s, lambda w: brownian_rate(w, bath), mode, rule,
                 meta=meta)


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class SupersystemTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d), site basis
    info: dict = field(default_factory=dict)


@dataclass
class SpinTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, 2, 2)
    meta: dict = field(default_factory=dict)

    @property
    def coherence(self) -> np.ndarray:
        return self.states[:, 0, 1]

    @property
    def abs_coherence(self) -> np.ndarray:
        return np.abs(self.states[:, 0, 1])

    @property
    def sigma_z(self) -> np.ndarray:
        return np.real(self.states[:, 0, 0] - self.states[:, 1, 1])

    def to_csv(self, path):
        s = self.states
        cols = {"time": self.times}
        for a in range(2):
            for b in range(2):
                cols[f"re{a}{b}"] = s[:, a, b].real
                cols[f"im{a}{b}"] = s[:, a, b].imag
        cols["abs_coherence"] = self.abs_coherence
        cols["sigma_z"] = self.sigma_z
        io.write_csv(path, cols, self.meta)

    @classmethod
    def from_csv(cls, path):
        meta, cols = io.read_csv(path)
        n = cols["time"].size
        states = np.empty((n, 2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                states[:, a, b] = cols[f"re{a}{b}"] + 1j * cols[f"im{a}{b}"]
        return cls(cols["time"], states, meta)


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ParameterError("times must be a non-empty 1-d grid")
    if times[0] != 0.0:
        raise ParameterError("times must start at 0")
    if np.any(np.diff(times) <= 0):
        raise ParameterError("times must be strictly increasing")
    return times


class _Stepper:
    """Advances an energy-basis density matrix over an interval dt."""

    def __init__(self, gen: RedfieldGenerator, method: str, h_max: float):
        if method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}")
        self.gen, self.method, self.h_max = gen, method, h_max
        self._cache = {}
        self.substeps = 0
        if method == "expm" and gen.spin_blocks is None and gen.dim > DENSE_MAX_DIM:
            raise ResourceError("expm stepping needs dim <= 64 or a dephasing sector split")

    def __call__(self, rho, dt):
        key = round(dt, 12)
        if self.method == "expm":
            return self._expm_step(rho, key)
        return self._rk4(rho, key)

    def _expm_step(self, rho, dt):
        gen = self.gen
        if dt not in self._cache:
            if gen.spin_blocks is not None:
                self._cache[dt] = {ab: scipy.linalg.expm(gen.sector_superoperator(*ab) * dt)
                                   for ab in ((0, 0), (0, 1), (1, 1))}
            else:
                self._cache[dt] = scipy.linalg.expm(gen.superoperator() * dt)
        prop = self._cache[dt]
        self.substeps += 1
        if gen.spin_blocks is None:
            return (prop @ rho.ravel()).reshape(rho.shape)
        out = np.zeros_like(rho)
        for (a, b), p in prop.items():
            ia, ib = gen.spin_blocks[a], gen.spin_blocks[b]
            blk = rho[np.ix_(ia, ib)]
            out[np.ix_(ia, ib)] = (p @ blk.ravel()).reshape(blk.shape)
        i0, i1 = gen.spin_blocks
        out[np.ix_(i1, i0)] = out[np.ix_(i0, i1)].conj().T
        return out

    def _rk4(self, rho, dt):
        # fourth-order Runge-Kutta in the interaction frame of H (Lawson scheme):
        # the unitary part is exact, only the dissipator is integrated
        n = max(1, int(math.ceil(dt / self.h_max - 1e-9)))
        h = dt / n
        if h not in self._cache:
            bohr = self.gen.bohr
            self._cache[h] = (np.exp(-1j * bohr * h), np.exp(-0.5j * bohr * h))
        eh, eh2 = self._cache[h]
        d = self.gen.dissipator
        h2 = 0.5 * h
        for _ in range(n):
            k1 = d(rho)
            k2 = d(eh2 * (rho + h2 * k1))
            k3 = d(eh2 * rho + h2 * k2)
            k4 = d(eh * rho + h * (eh2 * k3))
            rho = eh * rho + (h / 6.0) * (eh * k1 + 2.0 * eh2 * (k2 + k3) + k4)
        self.substeps += n
        return rho


def _evolve(gen, rho0, times, method, h, renormalize, trace_tol, diagnostics, on_sample):
    times = _check_times(times)
    rho0 = validate_density(rho0, gen.dim, herm_tol=1e-10, psd_tol=1e-8, name="rho0")
    h_max = gen.step_rule if h is None else float(h)
    if not h_max > 0:
        raise ParameterError("step size must be > 0")
    stepper = _Stepper(gen, method, h_max)
    rho = gen.to_energy(rho0)
    tr0 = np.trace(rho0)
    drift = herm = 0.0
    min_eigs = np.empty(times.size) if diagnostics else None
    on_sample(0, rho0, None)
    if diagnostics:
        min_eigs[0] = np.linalg.eigvalsh(rho0).min()
    for i in range(1, times.size):
        rho = stepper(rho, times[i] - times[i - 1])
        tr = np.trace(rho)
        d = abs(tr - tr0)
        drift = max(drift, d)
        if d > trace_tol:
            raise IntegrationError(
                f"trace drift {d:.3g} at t={times[i]:.6g} exceeds {trace_tol:g}; "
                "use a smaller step size")
        if renormalize:
            rho = rho / tr
        herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
        if diagnostics:
            min_eigs[i] = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        on_sample(i, None, rho)
    step = h_max if method == "rk4" else None
    info = {"method": method, "h_max": step, "substeps": stepper.substeps,
            "max_trace_drift": float(drift), "max_hermiticity_error": herm,
            "renormalize": renormalize, "mode": gen.mode}
    if diagnostics:
        info["min_eigenvalue"] = min_eigs
        info["positivity_violation"] = bool(min_eigs.min() < -1e-8)
    return times, info


def propagate(gen: RedfieldGenerator, rho0, times, method: str = "rk4", h: float | None = None,
              *, renormalize: bool = False, trace_tol: float = 1e-6,
              diagnostics: bool = True) -> SupersystemTrajectory:
    """Evolve a site-basis density matrix and record it at every time in ``times``.

    ``method='rk4'`` is a fixed-step fourth-order integrator with step at most
    ``h`` (default ``gen.step_rule``); ``method='expm'`` steps with the exact
    propagator exp(L dt), using the spin-sector split for the dephasing model.
    """
    states = np.empty((len(times),) + np.shape(rho0), dtype=complex)

    def keep(i, site, energy):
        states[i] = site if site is not None else gen.from_energy(energy)

    t, info = _evolve(gen, rho0, times, method, h, renormalize, trace_tol, diagnostics, keep)
    return SupersystemTrajectory(t, states, info)


def reduced_trajectory(traj: SupersystemTrajectory, m_levels: int | None = None,
                       meta: dict | None = None) -> SpinTrajectory:
    m = m_levels if m_levels is not None else traj.states.shape[-1] // 2
    return SpinTrajectory(traj.times, partial_trace_rc(traj.states, m), dict(meta or {}))


def propagate_spin(gen: RedfieldGenerator, rho0, times, method: str = "rk4",
                   h: float | None = None, *, renormalize: bool = False,
                   trace_tol: float = 1e-6, diagnostics: bool = False) -> SpinTrajectory:
    """Like :func:`propagate` followed by the RC trace, without storing full states."""
    if gen.m_levels is None:
        raise ParameterError("propagate_spin needs an extended-system generator")
    m = gen.m_levels
    spins = np.empty((len(times), 2, 2), dtype=complex)

    def keep(i, site, energy):
        spins[i] = partial_trace_rc(site if site is not None else gen.from_energy(energy), m)

    t, info = _evolve(gen, rho0, times, method, h, renormalize, trace_tol, diagnostics, keep)
    info.pop("min_eigenvalue", None)
    meta = {**gen.meta, "integrator": info["method"], "h": info["h_max"],
            "max_trace_drift": info["max_trace_drift"]}
    return SpinTrajectory(t, spins, meta)


def _stationary(lmat, weight):
    n = int(round(math.sqrt(lmat.shape[0])))
    lmat = lmat.copy()
    rhs = np.zeros(n * n, dtype=complex)
    # replace one equation by the trace condition
    lmat[0, :] = 0.0
    lmat[0, np.arange(n) * (n + 1)] = 1.0
    rhs[0] = weight
    return np.linalg.solve(lmat, rhs).reshape(n, n)


def steady_state(gen: RedfieldGenerator, rho_ref=None) -> np.ndarray:
    """Site-basis stationary state, from L(rho) = 0 with unit trace.

    In the dephasing model each spin population is conserved, so the kernel is
    two-dimensional; the sector weights are then taken from ``rho_ref``.
    """
    d = gen.dim
    if gen.spin_blocks is None:
        rho = _stationary(gen.superoperator(), 1.0)
    else:
        if rho_ref is None:
            raise ParameterError("dephasing model: stationary state depends on the "
                                 "spin populations, pass rho_ref")
        ref = gen.to_energy(validate_density(rho_ref, d, psd_tol=1e-8, name="rho_ref"))
        rho = np.zeros((d, d), dtype=complex)
        for s in (0, 1):
            idx = gen.spin_blocks[s]
            w = np.trace(ref[np.ix_(idx, idx)]).real
            rho[np.ix_(idx, idx)] = _stationary(gen.sector_superoperator(s, s), w)
    rho = 0.5 * (rho + rho.conj().T)
    return gen.from_energy(rho)


def bmr_qubit_trajectory(model, delta: float, p: BrownianParams, beta: float, rho0, times,
                         *, integrate: bool | None = None, method: str = "rk4",
                         h: float | None = None) -> SpinTrajectory:
    """Markovian (Born-Markov Redfield) dynamics of the bare spin.

    The dephasing model uses the closed-form exponential unless ``integrate``
    is set; the spin-boson model always integrates the 2x2 Redfield equation
    with Brownian rates at w = 0, +-delta.
    """
    model = ModelKind.parse(model)
    rho0 = validate_density(rho0, 2, name="rho0")
    times = _check_times(times)
    if integrate is None:
        integrate = model is ModelKind.SPIN_BOSON
    meta = {"model": model.value, "method": "bmr", "delta": delta, "lam": p.lam,
            "gamma": p.gamma, "omega_rc": p.omega_rc, "beta": beta}
    if not integrate:
        if model is not ModelKind.PURE_DEPHASING:
            raise ParameterError("closed form exists only for the dephasing model")
        states = np.repeat(rho0[None], times.size, axis=0)
        states[:, 0, 1] = rho0[0, 1] * bmr_coherence(times, delta, p, beta)
        states[:, 1, 0] = np.conj(states[:, 0, 1])
        meta["integrator"] = "closed_form"
        return SpinTrajectory(times, states, meta)
    gen = qubit_generator(model, delta, p, beta)
    traj = propagate(gen, rho0, times, method=method, h=h, diagnostics=False)
    meta.update(integrator=method, h=traj.info["h_max"])
    return SpinTrajectory(times, traj.states, meta)
