"""Click probabilities, finite-size intervals and single-photon yield bounds.

Counts are turned into intervals with a Gaussian n-sigma rule and then into
bounds on the single-photon click probability with the vacuum + weak decoy
estimate.  A non-decoy fallback uses the signal intensity alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyRecord, InfeasibleIntervals, InvalidIntensities, UnknownState

TEST_STATES = ("Z0", "Z1", "XP", "YP")
UNKNOWN_STATES = ("RHO", "RHO_PLUS_I", "RHO_MINUS_I")
STATE_LABELS = TEST_STATES + UNKNOWN_STATES
INTENSITY_CLASSES = ("signal", "decoy", "vacuum")

MAX_DECOY_RATIO = 0.9


@dataclass(frozen=True)
class CountsRecord:
    state_label: str
    intensity_class: str
    sent: int
    ones: int

    def __post_init__(self):
        if self.state_label not in STATE_LABELS:
            raise UnknownState(f"unknown state label {self.state_label!r}")
        if self.intensity_class not in INTENSITY_CLASSES:
            raise ValueError(f"unknown intensity class {self.intensity_class!r}")
        if self.sent < 0 or self.ones < 0:
            raise ValueError("counts must be nonnegative")
        if self.ones > self.sent:
            raise ValueError(f"ones ({self.ones}) exceeds sent ({self.sent})")


@dataclass(frozen=True)
class IntensityConfig:
    """Signal intensity ``mu``, decoy ``nu`` (None for non-decoy use) and dark-count probability."""

    mu: float
    nu: float | None = None
    p_d: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidIntensities(f"mu must be positive, got {self.mu}")
        if self.nu is not None:
            if not 0 < self.nu < self.mu:
                raise InvalidIntensities(f"need 0 < nu < mu, got mu={self.mu}, nu={self.nu}")
            if self.nu > MAX_DECOY_RATIO * self.mu:
                raise InvalidIntensities(f"need nu <= {MAX_DECOY_RATIO} mu, got mu={self.mu}, nu={self.nu}")
        if not 0 <= self.p_d < 1:
            raise InvalidIntensities(f"dark-count probability must be in [0, 1), got {self.p_d}")


@dataclass(frozen=True)
class ProbInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise ValueError(f"invalid probability interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @classmethod
    def point(cls, p: float) -> "ProbInterval":
        return cls(p, p)

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= p <= self.hi + tol


@dataclass(frozen=True)
class YieldInterval(ProbInterval):
    state_label: str = ""


def empirical_prob(r: CountsRecord) -> float:
    if r.sent == 0:
        raise EmptyRecord(f"no pulses sent for {r.state_label}/{r.intensity_class}")
    return r.ones / r.sent


def count_interval(clicks: float, sent: float, n_sigma: float) -> ProbInterval:
    """n-sigma Gaussian interval around an observed or expected click count."""
    if sent <= 0:
        raise EmptyRecord("no pulses sent")
    if n_sigma < 0:
        raise ValueError("n_sigma must be nonnegative")
    spread = n_sigma * math.sqrt(clicks)
    lo = max(0.0, (clicks - spread) / sent)
    hi = min(1.0, (clicks + spread) / sent)
    return ProbInterval(lo, hi)


def gaussian_interval(r: CountsRecord, n_sigma: float) -> ProbInterval:
    if r.sent == 0:
        raise EmptyRecord(f"no pulses sent for {r.state_label}/{r.intensity_class}")
    return count_interval(r.ones, r.sent, n_sigma)


def dark_count_interval(vacuum: CountsRecord, n_sigma: float) -> ProbInterval:
    return gaussian_interval(vacuum, n_sigma)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def single_photon_bounds_decoy(
    p_mu: ProbInterval, p_nu: ProbInterval, cfg: IntensityConfig, state_label: str = ""
) -> YieldInterval:
    """Vacuum + weak decoy bounds on the single-photon click probability."""
    mu, nu, p_d = cfg.mu, cfg.nu, cfg.p_d
    if nu is None or mu * nu - nu * nu <= 0:
        raise InvalidIntensities(f"decoy bound needs mu > nu > 0, got mu={mu}, nu={nu}")
    bracket = (
        p_nu.lo * math.exp(nu)
        - p_mu.hi * math.exp(mu) * nu**2 / mu**2
        - (mu**2 - nu**2) / mu**2 * p_d
    )
    lo = _clamp(mu / (mu * nu - nu * nu) * bracket)
    hi = _clamp(p_nu.hi / (nu * math.exp(-nu)))
    if lo > hi:
        raise InfeasibleIntervals(
            f"{state_label or 'state'}: lower yield bound {lo:.6g} exceeds upper {hi:.6g}"
        )
    return YieldInterval(lo, hi, state_label)


def single_photon_bounds_nondecoy(
    p_mu: ProbInterval, cfg: IntensityConfig, state_label: str = ""
) -> YieldInterval:
    """Signal-only bounds: multi-photon pulses are assumed to always click."""
    mu, p_d = cfg.mu, cfg.p_d
    if mu <= 0:
        raise InvalidIntensities("mu must be positive")
    one = mu * math.exp(-mu)
    multi = 1 - math.exp(-mu) - one
    lo = _clamp((p_mu.lo - math.exp(-mu) * p_d - multi) / one)
    hi = _clamp(p_mu.hi / one)
    if lo > hi:
        raise InfeasibleIntervals(
            f"{state_label or 'state'}: lower yield bound {lo:.6g} exceeds upper {hi:.6g}"
        )
    return YieldInterval(lo, hi, state_label)
