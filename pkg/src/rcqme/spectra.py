"""Spectral densities, Bose-Einstein occupation and the thermal rate functions.

Units: every energy is measured in units of the spin splitting, with
hbar = k_B = 1. All functions accept scalars or numpy arrays and return the
same kind.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParameterError

ArrayLike = Union[float, np.ndarray]

# |omega| below this is treated as the zero-frequency limit of the rates
ZERO_FREQUENCY = 1e-9


@dataclass(frozen=True)
class BrownianParams:
    """Brownian (underdamped) spectral density peaked at ``omega_rc``.

    ``gamma`` is the dimensionless width, ``lam`` the spin-RC coupling.
    """

    omega_rc: float
    gamma: float
    lam: float

    def __post_init__(self):
        if not self.omega_rc > 0:
            raise ParameterError(f"omega_rc must be > 0, got {self.omega_rc}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if not self.lam >= 0:
            raise ParameterError(f"lam must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class OhmicParams:
    """Ohmic residual bath, J(w) = (gamma/pi) w exp(-w/cutoff)."""

    gamma: float
    cutoff: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if not self.cutoff > 0:
            raise ParameterError(f"cutoff must be > 0, got {self.cutoff}")


@dataclass(frozen=True)
class BathSpec:
    beta: float
    density: Union[BrownianParams, OhmicParams]

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ParameterError(f"beta must be finite and > 0, got {self.beta}")
        if not isinstance(self.density, (BrownianParams, OhmicParams)):
            raise ParameterError(f"unsupported spectral density {self.density!r}")


def _as_float_array(omega):
    w = np.asarray(omega, dtype=float)
    return w, w.ndim == 0


def _nonnegative(w, name="omega"):
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise DomainError(f"{name} must be >= 0")


def brownian_j(omega: ArrayLike, p: BrownianParams) -> ArrayLike:
    """Brownian spectral density 4 w W^2 lam^2 gamma / pi / [(w^2-W^2)^2 + (2 gamma W w)^2]."""
    w, scalar = _as_float_array(omega)
    _nonnegative(w)
    om = p.omega_rc
    num = 4.0 * w * om**2 * p.lam**2 * p.gamma / np.pi
    den = (w**2 - om**2) ** 2 + (2.0 * p.gamma * om * w) ** 2
    out = num / den
    return float(out) if scalar else out


def ohmic_j(omega: ArrayLike, p: OhmicParams) -> ArrayLike:
    w, scalar = _as_float_array(omega)
    _nonnegative(w)
    out = (p.gamma / np.pi) * w * np.exp(-w / p.cutoff)
    return float(out) if scalar else out


def bose_einstein(omega: ArrayLike, beta: float) -> ArrayLike:
    """Occupation 1/(exp(beta w) - 1); only defined for w > 0."""
    w, scalar = _as_float_array(omega)
    if np.any(~(w > 0)):
        raise DomainError("bose_einstein requires omega > 0")
    if not beta > 0:
        raise DomainError("bose_einstein requires beta > 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(beta * w)
    return float(out) if scalar else out


def _thermal_rate(omega, spectral, zero_limit, beta):
    # Real part of the half-sided Fourier transform of the bath correlation,
    # in the sign convention: w > 0 -> pi J n, w < 0 -> pi J (n + 1).
    w, scalar = _as_float_array(omega)
    out = np.empty_like(w)
    small = np.abs(w) < ZERO_FREQUENCY
    out[small] = zero_limit
    aw = np.abs(w[~small])
    if aw.size:
        n = bose_einstein(aw, beta)
        jw = np.pi * spectral(aw)
        out[~small] = np.where(w[~small] > 0, jw * n, jw * (n + 1.0))
    return float(out) if scalar else out


def rc_rate(omega: ArrayLike, bath: BathSpec) -> ArrayLike:
    """Ohmic residual-bath rate entering the reaction-coordinate dissipator.

    Piecewise: ``pi J(w) n(w)`` for w > 0, ``pi J(|w|) [n(|w|) + 1]`` for
    w < 0 and the analytic limit ``gamma / beta`` at w = 0. Satisfies
    ``rc_rate(-w) = exp(beta w) rc_rate(w)``.
    """
    if not isinstance(bath.density, OhmicParams):
        raise TypeError("rc_rate needs an Ohmic residual bath")
    p = bath.density
    return _thermal_rate(omega, lambda w: ohmic_j(w, p), p.gamma / bath.beta, bath.beta)


def brownian_rate(omega: ArrayLike, bath: BathSpec) -> ArrayLike:
    """Same piecewise rate for the unmapped Brownian bath (Markovian comparator).

    The w -> 0 limit is 4 gamma lam^2 / (W^2 beta).
    """
    if not isinstance(bath.density, BrownianParams):
        raise TypeError("brownian_rate needs a Brownian bath")
    p = bath.density
    zero = 4.0 * p.gamma * p.lam**2 / (p.omega_rc**2 * bath.beta)
    return _thermal_rate(omega, lambda w: brownian_j(w, p), zero, bath.beta)
