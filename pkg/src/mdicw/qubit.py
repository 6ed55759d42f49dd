"""Exact single-qubit algebra.

States are stored as Bloch vectors and only turned into 2x2 matrices on
demand.  Entropies are reported in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBasis, InvalidEffect, InvalidState

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

BLOCH_TOL = 1e-12
EIG_CLAMP = 1e-12
EFFECT_TOL = 1e-10
LN2 = math.log(2.0)


@dataclass(frozen=True)
class QubitState:
    """Qubit density matrix (I + r.sigma)/2 held by its Bloch vector r."""

    bloch: tuple[float, float, float]

    def __post_init__(self):
        r = np.asarray(self.bloch, dtype=float)
        if r.shape != (3,) or not np.all(np.isfinite(r)):
            raise InvalidState(f"Bloch vector must be 3 finite reals, got {self.bloch!r}")
        if float(r @ r) > 1.0 + BLOCH_TOL:
            raise InvalidState(f"Bloch norm {np.sqrt(r @ r):.15g} exceeds 1")
        object.__setattr__(self, "bloch", tuple(float(x) for x in r))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.bloch)

    @classmethod
    def from_matrix(cls, rho) -> "QubitState":
        rho = np.asarray(rho, dtype=complex)
        if not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > 1e-12:
            raise InvalidState("density matrix does not have unit trace")
        return cls(tuple(float(np.real(np.trace(rho @ p))) for p in PAULIS))

    @classmethod
    def from_label(cls, label: str) -> "QubitState":
        """Named Pauli eigenstates: '0', '1', '+', '-', '+i', '-i'."""
        try:
            return cls(_LABELS[label])
        except KeyError:
            raise InvalidState(f"unknown state label {label!r}") from None


_LABELS = {
    "0": (0.0, 0.0, 1.0),
    "1": (0.0, 0.0, -1.0),
    "+": (1.0, 0.0, 0.0),
    "-": (-1.0, 0.0, 0.0),
    "+i": (0.0, 1.0, 0.0),
    "-i": (0.0, -1.0, 0.0),
}


def _bloch_of_matrix(m) -> np.ndarray:
    return np.array([np.real(np.trace(m @ p)) for p in PAULIS])


@dataclass(frozen=True)
class CoherenceBasis:
    """Ordered pair of orthogonal rank-one projectors (Z basis by default)."""

    proj0: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.0]).astype(complex))
    proj1: np.ndarray = field(default_factory=lambda: np.diag([0.0, 1.0]).astype(complex))

    def __post_init__(self):
        p0 = np.asarray(self.proj0, dtype=complex)
        p1 = np.asarray(self.proj1, dtype=complex)
        tol = 1e-12
        for p in (p0, p1):
            if p.shape != (2, 2) or not np.allclose(p @ p, p, atol=tol):
                raise InvalidBasis("basis elements must be 2x2 projectors")
            if not np.allclose(p, p.conj().T, atol=tol):
                raise InvalidBasis("basis projectors must be Hermitian")
            if abs(np.trace(p).real - 1) > tol:
                raise InvalidBasis("basis projectors must have rank one")
        if not np.allclose(p0 + p1, I2, atol=tol) or not np.allclose(p0 @ p1, 0, atol=tol):
            raise InvalidBasis("projectors must be orthogonal and complete")
        object.__setattr__(self, "proj0", p0)
        object.__setattr__(self, "proj1", p1)

    @property
    def axis(self) -> np.ndarray:
        """Bloch unit vector of the first projector."""
        return _bloch_of_matrix(self.proj0)

    @classmethod
    def from_axis(cls, axis) -> "CoherenceBasis":
        b = np.asarray(axis, dtype=float)
        b = b / np.linalg.norm(b)
        p0 = 0.5 * (I2 + sum(bi * p for bi, p in zip(b, PAULIS)))
        return cls(p0, I2 - p0)

    @classmethod
    def named(cls, name: str) -> "CoherenceBasis":
        axes = {"z": (0, 0, 1), "x": (1, 0, 0), "y": (0, 1, 0)}
        try:
            return cls.from_axis(axes[name.lower()])
        except KeyError:
            raise InvalidBasis(f"unknown basis {name!r}; expected one of x, y, z") from None


Z_BASIS = CoherenceBasis()


@dataclass(frozen=True)
class Witness:
    """W = w0*I + w1*sigma_x + w2*sigma_y + w3*sigma_z."""

    w0: float
    w1: float = 0.0
    w2: float = 0.0
    w3: float = 0.0

    def matrix(self) -> np.ndarray:
        return self.w0 * I2 + self.w1 * SIGMA_X + self.w2 * SIGMA_Y + self.w3 * SIGMA_Z


def state_matrix(s: QubitState) -> np.ndarray:
    r = s.bloch
    return 0.5 * (I2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def check_effect(effect, tol: float = EFFECT_TOL) -> np.ndarray:
    """Return ``effect`` as a complex array, raising if 0 <= effect <= I fails."""
    m = np.asarray(effect, dtype=complex)
    if m.shape != (2, 2):
        raise InvalidEffect(f"effect must be 2x2, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, atol=tol):
        raise InvalidEffect("effect is not Hermitian")
    w = np.linalg.eigvalsh(m)
    if w[0] < -tol or w[1] > 1 + tol:
        raise InvalidEffect(f"effect eigenvalues {w} outside [0, 1]")
    return m


def born_prob(s: QubitState, effect) -> float:
    m = check_effect(effect)
    p = float(np.real(np.trace(state_matrix(s) @ m)))
    return min(1.0, max(0.0, p))


def dephase(s: QubitState, b: CoherenceBasis = Z_BASIS) -> QubitState:
    """Remove the off-diagonal part of ``s`` in basis ``b``."""
    beta = b.axis
    # exact zeros for the canonical axes keep dephase idempotent bitwise
    beta = np.where(np.abs(beta) < 1e-15, 0.0, beta)
    r = s.vector
    return QubitState(tuple(float(r @ beta) * beta))


def entropy_bits(probs) -> float:
    """Shannon entropy of a probability vector, treating 0*log(0) as 0."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < -EIG_CLAMP):
        raise InvalidState(f"negative eigenvalue {p.min():.3g} below clamp")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum() / LN2)


def von_neumann_entropy(s: QubitState) -> float:
    r = float(np.linalg.norm(s.vector))
    return entropy_bits([(1 + r) / 2, (1 - r) / 2])


def rel_entropy_coherence(s: QubitState, b: CoherenceBasis = Z_BASIS) -> float:
    """Relative entropy of coherence S(dephased) - S(rho), in bits."""
    c = von_neumann_entropy(dephase(s, b)) - von_neumann_entropy(s)
    return max(0.0, c)


def witness_expectation(s: QubitState, w: Witness) -> float:
    rx, ry, rz = s.bloch
    return w.w0 + w.w1 * rx + w.w2 * ry + w.w3 * rz
