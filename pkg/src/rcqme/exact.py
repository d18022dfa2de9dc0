"""Exact pure-dephasing dynamics for a spin in a Brownian bath.

Two independent routes to the decoherence function

    Gamma(t) = -4 int_0^inf J(w) coth(beta w / 2) (1 - cos w t) / w^2 dw

are provided: :func:`decoherence_exact` integrates it numerically with
adaptive Gauss-Legendre panels, and :func:`decoherence_closed_form` sums the
residues of the integrand (two Brownian poles plus the Matsubara series),
which is cheap enough to fill long, dense time grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import io
from .errors import ConvergenceError, DomainError, ParameterError
from .spectra import BrownianParams
from .states import validate_density

SOURCES = ("exact", "rc_qme", "bmr")


@dataclass
class DecoherenceTrace:
    """Samples of Gamma(t) = ln |rho_01(t) / rho_01(0)|."""

    times: np.ndarray
    gamma_values: np.ndarray
    source: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.gamma_values = np.asarray(self.gamma_values, dtype=float)
        if self.times.shape != self.gamma_values.shape or self.times.ndim != 1:
            raise ParameterError("times and gamma_values must be 1-d and equal length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ParameterError("times must be strictly increasing")
        if self.source not in SOURCES:
            raise ParameterError(f"unknown source {self.source!r}")

    @property
    def abs_coherence(self) -> np.ndarray:
        return np.exp(self.gamma_values)

    def to_csv(self, path):
        meta = {"source": self.source, **self.meta}
        io.write_csv(path, {"time": self.times, "gamma": self.gamma_values,
                            "abs_coherence": self.abs_coherence}, meta)

    @classmethod
    def from_csv(cls, path):
        meta, cols = io.read_csv(path)
        source = meta.pop("source", "exact")
        return cls(cols["time"], cols["gamma"], source, meta)


class LongTimeRate(NamedTuple):
    rate: float
    tau_d: float  # math.inf when there is no coupling


def longtime_rate(p: BrownianParams, beta: float) -> LongTimeRate:
    """Asymptotic decoherence rate 16 gamma lam^2 / (W^2 beta) and its inverse."""
    if not beta > 0:
        raise ParameterError("beta must be > 0")
    rate = 16.0 * p.gamma * p.lam**2 / (p.omega_rc**2 * beta)
    if rate == 0.0:
        return LongTimeRate(0.0, math.inf)
    return LongTimeRate(rate, 1.0 / rate)


def tau_d_json(tau_d: float):
    """Serializable form of tau_D; the uncoupled case becomes 'no_decoherence'."""
    return "no_decoherence" if math.isinf(tau_d) else tau_d


# ---------------------------------------------------------------------------
# adaptive quadrature

_GL_LO = np.polynomial.legendre.leggauss(4)
_GL_HI = np.polynomial.legendre.leggauss(8)
_CHUNK = 1 << 17


def _integrand(w, t, p, beta):
    """J(w) coth(beta w/2) (1 - cos w t) / w^2 with the w -> 0 limit patched in."""
    om, g, lam = p.omega_rc, p.gamma, p.lam
    a = 4.0 * om**2 * lam**2 * g / np.pi
    out = np.empty_like(w)
    small = w < 1e-8
    ws = w[~small]
    den = (ws**2 - om**2) ** 2 + (2.0 * g * om * ws) ** 2
    out[~small] = (a / den) / (ws * np.tanh(0.5 * beta * ws)) * 2.0 * np.sin(0.5 * ws * t) ** 2
    # J ~ a w / W^4 and coth ~ 2/(beta w): limit a t^2 / (beta W^4)
    out[small] = a * t**2 / (beta * om**4)
    return out


def _panels(f, lo, hi):
    """Gauss-Legendre 4- and 8-point estimates on each panel [lo_i, hi_i]."""
    mid = 0.5 * (hi + lo)[:, None]
    half = 0.5 * (hi - lo)[:, None]
    i_lo = (f(mid + half * _GL_LO[0]) * _GL_LO[1]).sum(axis=1) * half[:, 0]
    i_hi = (f(mid + half * _GL_HI[0]) * _GL_HI[1]).sum(axis=1) * half[:, 0]
    return i_hi, np.abs(i_hi - i_lo)


def _integrate_range(f, a, b, width, tol_abs_per_unit, budget):
    """Integrate f over [a, b] with panels no wider than ``width``.

    Panels whose error estimate exceeds their share of the absolute tolerance
    are bisected until they pass. Returns (value, error_estimate, n_panels).
    """
    n = max(1, int(math.ceil((b - a) / width)))
    if n > budget:
        raise ConvergenceError(f"quadrature needs {n} panels, budget is {budget}",
                               estimate=math.inf, value=math.nan)
    total, err, used = 0.0, 0.0, 0
    edges_step = (b - a) / n
    for start in range(0, n, _CHUNK):
        k = np.arange(start, min(n, start + _CHUNK), dtype=float)
        lo = a + k * edges_step
        hi = np.minimum(a + (k + 1.0) * edges_step, b)
        while lo.size:
            val, e = _panels(f, lo, hi)
            used += lo.size
            if used > budget:
                raise ConvergenceError("quadrature panel budget exhausted",
                                       estimate=err + float(e.sum()), value=total)
            bad = e > tol_abs_per_unit * (hi - lo)
            total += float(val[~bad].sum())
            err += float(e[~bad].sum())
            if (hi[bad] - lo[bad]).min(initial=np.inf) < 1e-15 * max(1.0, b):
                raise ConvergenceError("panel bisection underflow",
                                       estimate=err + float(e[bad].sum()), value=total)
            m = 0.5 * (lo[bad] + hi[bad])
            lo, hi = np.concatenate([lo[bad], m]), np.concatenate([m, hi[bad]])
    return total, err, used


def decoherence_exact(t: float, p: BrownianParams, beta: float, tol: float = 1e-8, *,
                      max_panels: int = 50_000_000, stitch: bool = False,
                      stitch_after: float = 20.0) -> float:
    """Exact Gamma(t) by adaptive panel quadrature, to relative tolerance ``tol``.

    Panels are capped at ``min(pi/(8t), gamma W / 8)`` so both the cos(w t)
    oscillation and the Brownian peak are resolved. The upper limit starts at
    ``W max(10, 40 gamma)`` and doubles until the analytic w^-5 tail bound is
    below 1e-8 of the accumulated integral.

    With ``stitch=True`` and ``t > stitch_after * tau_D`` the value is
    continued linearly from ``Gamma(stitch_after * tau_D)`` with the
    asymptotic slope.
    """
    if not t >= 0:
        raise DomainError("t must be >= 0")
    if not (0 < tol <= 1e-2):
        raise DomainError("tol must lie in (0, 1e-2]")
    if not beta > 0:
        raise DomainError("beta must be > 0")
    if t == 0 or p.lam == 0:
        return 0.0
    rate, tau_d = longtime_rate(p, beta)
    if stitch and t > stitch_after * tau_d:
        t0 = stitch_after * tau_d
        return decoherence_exact(t0, p, beta, tol, max_panels=max_panels) - rate * (t - t0)

    om = p.omega_rc
    f = lambda w: _integrand(w, t, p, beta)  # noqa: E731
    width = min(math.pi / (8.0 * t), p.gamma * om / 8.0)
    a_coef = 4.0 * om**2 * p.lam**2 * p.gamma / np.pi
    # rough magnitude so the per-panel absolute tolerance is meaningful
    guess = max(abs(_asymptote_guess(t, p, beta)), 1e-300)
    w_hi = om * max(10.0, 40.0 * p.gamma)
    lo_edge, total, err, used = 0.0, 0.0, 0.0, 0
    while True:
        scale = tol * 0.5 * max(guess, abs(total)) / w_hi
        val, e, n = _integrate_range(f, lo_edge, w_hi, width, scale, max_panels - used)
        total, err, used = total + val, err + e, used + n
        # for w >= 2W, J <= 16 a / (9 w^3); with 1 - cos <= min(2, (w t)^2 / 2) the
        # tail is below coth(beta w/2) min(8a / (9 w^4), 4 a t^2 / (9 w^2))
        tail = (a_coef / math.tanh(0.5 * beta * w_hi)
                * min(8.0 / (9.0 * w_hi**4), 4.0 * t**2 / (9.0 * w_hi**2)))
        if w_hi >= 2.0 * om and tail <= 1e-8 * abs(total):
            break
        # past the peak the integrand varies on the scale w itself
        width = min(math.pi / (8.0 * t), w_hi / 8.0)
        lo_edge, w_hi = w_hi, 2.0 * w_hi
    if err > tol * abs(total):
        raise ConvergenceError(f"quadrature error {err:.3g} above tolerance",
                               estimate=err, value=-4.0 * total)
    return -4.0 * total


def _asymptote_guess(t, p, beta):
    # order-of-magnitude estimate of the integral (without the -4 prefactor)
    rate = 16.0 * p.gamma * p.lam**2 / (p.omega_rc**2 * beta)
    plateau = 2.0 * p.lam**2 / p.omega_rc**2
    return 0.25 * rate * t + plateau * min(1.0, (p.omega_rc * t) ** 2)


# ---------------------------------------------------------------------------
# residue sum

def _brownian_poles(p):
    om, g = p.omega_rc, p.gamma
    if abs(g - 1.0) < 1e-6:
        raise ParameterError("closed form is singular at critical damping gamma = 1")
    wbar = np.sqrt(complex(om**2 * (1.0 - g**2)))
    # roots of w^2 - 2i g W w - W^2 in the upper half plane and P'(w) there
    return [(wbar + 1j * g * om, 2.0 * wbar), (-wbar + 1j * g * om, -2.0 * wbar)]


def decoherence_closed_form(times, p: BrownianParams, beta: float,
                            n_matsubara: int = 100_000) -> np.ndarray:
    """Gamma(t) on an array of times from the contour-integral residue sum.

    Gamma(t) = -16 g lam^2 t / (W^2 beta)
               - (8 pi a / beta) sum_k (1 - e^{-nu_k t}) / (nu_k D_k)
               - 2 Re[2 pi i sum_j Res_j]
    with nu_k = 2 pi k / beta the Matsubara frequencies, a = 4 W^2 lam^2 g / pi,
    D_k = (nu_k^2 + W^2)^2 - 4 g^2 W^2 nu_k^2, and Res_j the residues of
    J coth(beta w/2) (1 - e^{iwt}) / w^2 at the two upper-half-plane poles of J.
    """
    t = np.asarray(times, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(t < 0):
        raise DomainError("times must be >= 0")
    if not beta > 0:
        raise DomainError("beta must be > 0")
    om, g, lam = p.omega_rc, p.gamma, p.lam
    a = 4.0 * om**2 * lam**2 * g / np.pi
    out = np.zeros_like(t)
    if lam == 0:
        return float(out[0]) if scalar else out

    linear = -16.0 * g * lam**2 / (om**2 * beta) * t

    poles = 0.0j
    for wj, dp in _brownian_poles(p):
        for k_near in (np.floor(wj.imag * beta / (2 * np.pi)), np.ceil(wj.imag * beta / (2 * np.pi))):
            if k_near >= 1 and abs(wj - 2j * np.pi * k_near / beta) < 1e-8:
                raise ParameterError("Brownian pole coincides with a Matsubara frequency")
        coth = 1.0 / np.tanh(0.5 * beta * wj)
        poles = poles + a * coth * (-np.expm1(1j * wj * t)) / (4j * g * om * dp * wj**2)
    pole_part = -2.0 * (2j * np.pi * poles).real

    nu = 2.0 * np.pi * np.arange(1, n_matsubara + 1) / beta
    terms = 1.0 / (nu * ((nu**2 + om**2) ** 2 - 4.0 * g**2 * om**2 * nu**2))
    # suffix[k] = sum of terms[k:], used where exp(-nu t) has underflowed
    suffix = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
    mats = np.empty_like(t)
    order = np.argsort(t, kind="stable")
    ts = t[order]
    for start in range(0, ts.size, 1024):
        chunk = ts[start:start + 1024]
        tmin = chunk[chunk > 0].min(initial=np.inf)
        # exp(-nu_k t) < e^-45 beyond k = 45 / (nu_1 t)
        decay = nu[0] * tmin
        kmax = min(int(45.0 / decay) + 2, n_matsubara) if decay * n_matsubara > 45.0 else n_matsubara
        x = -np.expm1(-np.outer(chunk, nu[:kmax]))
        mats[order[start:start + chunk.size]] = x @ terms[:kmax] + suffix[kmax] * (chunk > 0)
    mats_part = -(8.0 * np.pi * a / beta) * mats

    out = linear + mats_part + pole_part
    out[t == 0] = 0.0
    return float(out[0]) if scalar else out


def exact_trace(times, p: BrownianParams, beta: float, method: str = "closed_form",
                tol: float = 1e-8) -> DecoherenceTrace:
    """Exact decoherence trace on ``times`` ('closed_form' or 'quadrature')."""
    times = np.asarray(times, dtype=float)
    if method == "closed_form":
        try:
            g = decoherence_closed_form(times, p, beta)
        except ParameterError:
            method = "quadrature"
    if method == "quadrature":
        g = np.array([decoherence_exact(float(t), p, beta, tol) for t in times])
    elif method != "closed_form":
        raise ParameterError(f"unknown method {method!r}")
    meta = {"omega_rc": p.omega_rc, "gamma": p.gamma, "lam": p.lam, "beta": beta,
            "evaluation": method}
    return DecoherenceTrace(times, g, "exact", meta)


# ---------------------------------------------------------------------------
# state evolution

def exact_evolve(rho0, t: float, delta: float, gamma_t: float) -> np.ndarray:
    """Spin state at time t: populations frozen, rho_01 -> rho_01 exp(Gamma - i delta t)."""
    rho0 = validate_density(rho0, 2, name="rho0")
    if gamma_t > 0:
        raise DomainError("decoherence function must be <= 0")
    out = rho0.copy()
    out[0, 1] = rho0[0, 1] * np.exp(gamma_t - 1j * delta * t)
    out[1, 0] = np.conj(out[0, 1])
    return out


def bmr_coherence(t, delta: float, p: BrownianParams, beta: float):
    """Born-Markov coherence ratio rho_01(t)/rho_01(0) = exp(-i delta t - t/tau_D)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be >= 0")
    rate = longtime_rate(p, beta).rate
    out = np.exp(-1j * delta * t - rate * t)
    return complex(out) if out.ndim == 0 else out
