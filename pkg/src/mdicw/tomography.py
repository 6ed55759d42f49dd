"""Two-outcome qubit POVM tomography from four test-state click probabilities.

The effect for outcome "1" is written M1 = a1 (I + n.sigma) and M0 = I - M1.
Clicking on |0>, |1>, |+>, |+i> gives four linear equations in the four
unknowns (a1, nx, ny, nz), so reconstruction is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePovm, InfeasibleProbabilities
from .qubit import I2, SIGMA_X, SIGMA_Y, SIGMA_Z

FEASIBILITY_TOL = 1e-9
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class BinaryPovm:
    a1: float
    n: tuple[float, float, float]

    @property
    def n_norm(self) -> float:
        return float(np.linalg.norm(self.n))

    @property
    def a0(self) -> float:
        return 1.0 - self.a1

    @property
    def n0(self) -> np.ndarray:
        """Bloch direction of M0 = a0 (I + n0.sigma); zero when a0 == 0."""
        if self.a0 == 0:
            return np.zeros(3)
        return -self.a1 * np.asarray(self.n) / self.a0

    @property
    def coords(self) -> tuple[float, np.ndarray]:
        """Pauli coordinates (c0, c) with M1 = c0 I + c.sigma."""
        return self.a1, self.a1 * np.asarray(self.n, dtype=float)

    def m1(self) -> np.ndarray:
        nx, ny, nz = self.n
        return self.a1 * (I2 + nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z)

    def m0(self) -> np.ndarray:
        return I2 - self.m1()

    @classmethod
    def from_effect(cls, m1) -> "BinaryPovm":
        m = np.asarray(m1, dtype=complex)
        a1 = float(np.real(np.trace(m))) / 2
        c = np.array([np.real(np.trace(m @ p)) / 2 for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)])
        n = c / a1 if a1 > 0 else np.zeros(3)
        return cls(a1, tuple(float(x) for x in n))


@dataclass(frozen=True)
class Violation:
    invariant: str
    value: float
    limit: float

    @property
    def margin(self) -> float:
        return abs(self.value - self.limit)

    def __str__(self):
        return f"{self.invariant}: {self.value:.6g} vs limit {self.limit:.6g}"


def validate_povm(m: BinaryPovm, tol: float = FEASIBILITY_TOL) -> list[Violation]:
    """List every violated POVM invariant; an empty list means valid."""
    out = []
    if m.a1 < -tol:
        out.append(Violation("a1 >= 0", m.a1, 0.0))
    if m.a1 > 1 + tol:
        out.append(Violation("a1 <= 1", m.a1, 1.0))
    if m.n_norm > 1 + tol:
        out.append(Violation("|n| <= 1", m.n_norm, 1.0))
    top = m.a1 * (1 + m.n_norm)
    if top > 1 + tol:
        out.append(Violation("a1(1+|n|) <= 1", top, 1.0))
    return out


def probs_from_povm(m: BinaryPovm) -> tuple[float, float, float, float]:
    """Click probabilities on |0>, |1>, |+>, |+i>."""
    nx, ny, nz = m.n
    a1 = m.a1
    return (a1 + a1 * nz, a1 - a1 * nz, a1 + a1 * nx, a1 + a1 * ny)


def povm_from_probs(p0: float, p1: float, pplus: float, pplusi: float) -> BinaryPovm:
    """Reconstruct the POVM that produces the given click probabilities.

    Raises:
        DegeneratePovm: a1 is zero but some probability is not.
        InfeasibleProbabilities: the probabilities are not jointly realizable.
    """
    probs = (p0, p1, pplus, pplusi)
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise InfeasibleProbabilities(f"probability {p!r} outside [0, 1]")
    a1 = (p0 + p1) / 2
    if a1 == 0:
        if all(p < ZERO_TOL for p in probs):
            return BinaryPovm(0.0, (0.0, 0.0, 0.0))
        raise DegeneratePovm("a1 = 0 while some click probability is nonzero")
    n = ((pplus - a1) / a1, (pplusi - a1) / a1, (p0 - p1) / (2 * a1))
    povm = BinaryPovm(a1, n)
    problems = validate_povm(povm)
    if problems:
        raise InfeasibleProbabilities("; ".join(str(v) for v in problems))
    return povm
