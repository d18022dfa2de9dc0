"""Density-matrix checks and Pauli matrices.

Spin basis ordering is (|0>, |1>) with the standard sigma_z = diag(1, -1),
so under H = (delta/2) sigma_z the coherence rho_01 rotates as exp(-i delta t).
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def validate_density(rho, dim=None, *, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-10,
                     name="rho"):
    """Return ``rho`` as a complex array after checking it is a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionError(f"{name} must be {dim}x{dim}, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise DomainError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise DomainError(f"{name} has trace {np.trace(rho).real:.3g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise DomainError(f"{name} has a negative eigenvalue")
    return rho


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def expect(op, rho) -> float:
    return float(np.real(np.trace(np.asarray(op) @ np.asarray(rho))))
