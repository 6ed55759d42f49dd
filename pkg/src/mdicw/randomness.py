"""Min-entropy and rate figures, and Toeplitz-hash extraction over GF(2)."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import SeedLengthError

BLOCK_BITS = 4096


@dataclass(frozen=True)
class RandomnessBudget:
    c_lower: float
    mu: float
    eta: float
    clock_rate_hz: float = 0.0

    def __post_init__(self):
        for name in ("c_lower", "mu", "eta", "clock_rate_hz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.c_lower > 1:
            raise ValueError("a qubit carries at most 1 bit of coherence")


def min_entropy_per_pulse(b: RandomnessBudget) -> float:
    """Certified min-entropy in bits per emitted pulse."""
    return b.c_lower * b.mu * b.eta


def generation_rate(b: RandomnessBudget) -> float:
    """Certified output rate in bits per second."""
    return b.clock_rate_hz * min_entropy_per_pulse(b)


def _as_bits(x) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError("bit sequences must be one-dimensional")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError("bit sequences may only contain 0 and 1")
    return a.astype(np.int64)


@dataclass(frozen=True)
class ToeplitzSeed:
    """Seed bits s of length n + m - 1; row i of the matrix is s[m-1-i : m-1-i+n]."""

    bits: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.m > self.n:
            raise SeedLengthError(f"need 1 <= m <= n, got n={self.n}, m={self.m}")
        bits = _as_bits(self.bits)
        if bits.size != self.n + self.m - 1:
            raise SeedLengthError(
                f"seed has {bits.size} bits; an {self.m}x{self.n} Toeplitz matrix needs {self.n + self.m - 1}"
            )
        object.__setattr__(self, "bits", bits)

    def matrix(self) -> np.ndarray:
        idx = self.m - 1 - np.arange(self.m)[:, None] + np.arange(self.n)[None, :]
        return self.bits[idx]

    def digest(self) -> str:
        return hashlib.sha256(np.packbits(self.bits.astype(np.uint8)).tobytes()).hexdigest()


def toeplitz_extract(raw, seed: ToeplitzSeed, m: int | None = None) -> np.ndarray:
    """Hash ``raw`` (n bits) to m bits: out = T raw over GF(2)."""
    raw = _as_bits(raw)
    if m is not None and m != seed.m:
        raise SeedLengthError(f"seed was built for m={seed.m}, requested m={m}")
    if raw.size != seed.n:
        raise SeedLengthError(f"seed was built for n={seed.n} input bits, got {raw.size}")
    # out[i] = sum_j s[m-1-i+j] raw[j] is a sliding correlation
    corr = np.correlate(seed.bits, raw, mode="valid")
    return (corr[::-1] & 1).astype(np.uint8)


def output_length(n: int, ratio: float) -> int:
    """Extracted bits allowed for n raw bits at the given min-entropy ratio."""
    if not 0 <= ratio <= 1:
        raise ValueError("extraction ratio must be in [0, 1]")
    return int(math.floor(n * ratio + 1e-12))


def extract_stream(raw, seed_bits, ratio: float, block_bits: int = BLOCK_BITS):
    """Extract block-wise, reusing one seed for every full block of ``block_bits``.

    A trailing partial block is discarded.  Returns (output bits, seed, blocks).
    """
    raw = _as_bits(raw)
    m = output_length(block_bits, ratio)
    if m < 1:
        raise ValueError("extraction ratio yields no output bits per block")
    seed = ToeplitzSeed(seed_bits, block_bits, m)
    blocks = raw.size // block_bits
    out = [toeplitz_extract(raw[i * block_bits:(i + 1) * block_bits], seed) for i in range(blocks)]
    bits = np.concatenate(out) if out else np.zeros(0, dtype=np.uint8)
    return bits, seed, blocks


def seed_length(block_bits: int, ratio: float) -> int:
    return block_bits + output_length(block_bits, ratio) - 1
