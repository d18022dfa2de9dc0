"""Spin + truncated reaction-coordinate supersystem.

Basis ordering is spin-major: index = s * M + n with spin s in {0, 1} and RC
Fock level n in [0, M). Operators are built as ``kron(spin_op, rc_op)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import io
from .errors import DimensionError, NumericalError, ParameterError
from .states import SIGMA_X, SIGMA_Z, validate_density


class ModelKind(enum.Enum):
    PURE_DEPHASING = "pure_dephasing"
    SPIN_BOSON = "spin_boson"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"puredephasing": "pure_dephasing", "dephasing": "pure_dephasing",
                   "spinboson": "spin_boson"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ParameterError(f"unknown model {value!r}") from None


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    model: ModelKind
    delta: float
    lam: float
    omega_rc: float
    m_levels: int
    h_es: np.ndarray
    s_es: np.ndarray
    eigvals: np.ndarray
    u: np.ndarray
    s_energy: np.ndarray
    bohr: np.ndarray
    # energy-basis indices belonging to spin 0 and spin 1 when U respects the
    # sigma_z symmetry of the dephasing model; None otherwise
    spin_blocks: Optional[tuple] = None

    @property
    def dim(self) -> int:
        return 2 * self.m_levels

    def to_energy(self, rho):
        return self.u.conj().T @ rho @ self.u

    def from_energy(self, rho):
        return self.u @ rho @ self.u.conj().T

    def debug_dump(self) -> dict:
        """Matrices as row-major [re, im] pairs, for diffing implementations."""
        def pairs(a):
            a = np.asarray(a, dtype=complex)
            return [[[float(z.real), float(z.imag)] for z in row] for row in a]
        return {
            "model": self.model.value, "delta": self.delta, "lam": self.lam,
            "omega_rc": self.omega_rc, "m_levels": self.m_levels,
            "ordering": "spin-major: index = s*M + n",
            "h_es": pairs(self.h_es), "s_es": pairs(self.s_es),
            "eigvals": [float(x) for x in self.eigvals],
            "u": pairs(self.u), "s_energy": pairs(self.s_energy),
        }

    def write_debug_json(self, path):
        io.write_json(path, self.debug_dump())


def rc_operators(m_levels: int):
    """Truncated number operator diag(n) and position a + a^dagger."""
    n = np.arange(m_levels, dtype=float)
    a = np.diag(np.sqrt(n[1:]), 1)
    return np.diag(n), a + a.T


def build_extended(model, delta: float, lam: float, omega_rc: float,
                   m_levels: int) -> ExtendedSystem:
    """Hamiltonian (delta/2) s_z + W (n + 1/2) + lam s (a + a^dag) and coupling 1 x (a + a^dag).

    ``s`` is sigma_z for the dephasing model and sigma_x for the spin-boson
    model. The quadratic counter-term of the mapping is not included.
    """
    model = ModelKind.parse(model)
    if int(m_levels) != m_levels or m_levels < 2:
        raise ParameterError(f"m_levels must be an integer >= 2, got {m_levels}")
    if not omega_rc > 0:
        raise ParameterError(f"omega_rc must be > 0, got {omega_rc}")
    m = int(m_levels)
    num, x = rc_operators(m)
    rc_h = omega_rc * (num + 0.5 * np.eye(m))
    spin_c = SIGMA_Z if model is ModelKind.PURE_DEPHASING else SIGMA_X
    h = (np.kron(0.5 * delta * SIGMA_Z, np.eye(m)) + np.kron(np.eye(2), rc_h)
         + lam * np.kron(spin_c, x)).astype(complex)
    s = np.kron(np.eye(2), x).astype(complex)

    blocks = None
    try:
        if model is ModelKind.PURE_DEPHASING:
            # sigma_z is conserved: diagonalize each spin block separately
            e0, u0 = np.linalg.eigh(0.5 * delta * np.eye(m) + rc_h + lam * x)
            e1, u1 = np.linalg.eigh(-0.5 * delta * np.eye(m) + rc_h - lam * x)
            evals = np.concatenate([e0, e1])
            ublock = np.zeros((2 * m, 2 * m), dtype=complex)
            ublock[:m, :m], ublock[m:, m:] = u0, u1
            order = np.argsort(evals, kind="stable")
            evals, u = evals[order], ublock[:, order]
            spin_of = (order >= m).astype(int)
            blocks = (np.flatnonzero(spin_of == 0), np.flatnonzero(spin_of == 1))
        else:
            evals, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    s_energy = u.conj().T @ s @ u
    bohr = evals[:, None] - evals[None, :]
    return ExtendedSystem(model, float(delta), float(lam), float(omega_rc), m, h, s,
                          evals, u, s_energy, bohr, blocks)


def thermal_rc_state(beta: float, omega_rc: float, m_levels: int) -> np.ndarray:
    """Boltzmann populations exp(-beta W n), renormalized over the M kept levels."""
    if not beta > 0:
        raise ParameterError("beta must be > 0")
    w = np.exp(-beta * omega_rc * np.arange(m_levels))
    return np.diag(w / w.sum()).astype(complex)


def embed_initial(rho_spin, rho_rc, system: ExtendedSystem | None = None) -> np.ndarray:
    rho_spin = validate_density(rho_spin, 2, name="rho_spin")
    rho_rc = validate_density(rho_rc, name="rho_rc")
    if system is not None and rho_rc.shape[0] != system.m_levels:
        raise DimensionError(f"RC state has {rho_rc.shape[0]} levels, system has {system.m_levels}")
    return np.kron(rho_spin, rho_rc)


def partial_trace_rc(rho_es, m_levels: int) -> np.ndarray:
    """Trace out the RC: (rho_spin)_ab = sum_n <a,n| rho |b,n>."""
    rho_es = np.asarray(rho_es)
    if rho_es.shape[-2:] != (2 * m_levels, 2 * m_levels):
        raise DimensionError(f"expected trailing shape {(2 * m_levels,) * 2}, got {rho_es.shape}")
    r = rho_es.reshape(rho_es.shape[:-2] + (2, m_levels, 2, m_levels))
    return np.einsum("...anbn->...ab", r)


def default_initial_spin(model) -> np.ndarray:
    """|+><+| for dephasing, |-><-| for the spin-boson model."""
    model = ModelKind.parse(model)
    sign = 1.0 if model is ModelKind.PURE_DEPHASING else -1.0
    return 0.5 * np.array([[1.0, sign], [sign, 1.0]], dtype=complex)
