"""Weak-coherent-pulse channel model, intensity optimization and loss sweeps.

The untrusted device is modelled as the ideal Y-basis measurement behind a
channel of total transmittance ``eta``.  A pulse prepared in a Z or X
eigenstate reaches the "1" detector with half the transmitted intensity;
|+i> reaches it fully and |-i> not at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import certifier
from .certifier import DEFAULT_SEARCH, FeasibleRegion, SearchConfig
from .decoy import (
    MAX_DECOY_RATIO,
    CountsRecord,
    IntensityConfig,
    count_interval,
    single_photon_bounds_decoy,
    single_photon_bounds_nondecoy,
)
from .errors import MdicwError, OptimizationFailed, UnknownState
from .qubit import QubitState, Witness, witness_expectation

# fraction of the transmitted intensity that lands on the "1" detector
DETECTOR_FRACTION = {
    "Z0": 0.5,
    "Z1": 0.5,
    "XP": 0.5,
    "YP": 1.0,
    "RHO": 1.0,
    "RHO_PLUS_I": 1.0,
    "RHO_MINUS_I": 0.0,
}

SIM_STATES = ("Z0", "Z1", "XP", "YP", "RHO")
FIG3_PROPORTIONS = {"Z0": 1 / 8, "Z1": 1 / 8, "XP": 1 / 8, "YP": 1 / 8, "RHO": 1 / 2}


def db_to_eta(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


def eta_to_db(eta: float) -> float:
    return -10.0 * math.log10(eta)


@dataclass(frozen=True)
class ChannelConfig:
    eta: float
    p_d: float = 1e-6
    mu: float = 0.529
    nu: float = 0.057
    N: float = 3.2e6
    eta_j: dict = field(default_factory=lambda: dict(FIG3_PROPORTIONS))
    p_s: float = 0.5
    n_sigma: float = 3.89
    error_rate: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"transmittance must be in (0, 1], got {self.eta}")
        if not 0 <= self.p_d < 1:
            raise ValueError(f"dark-count probability must be in [0, 1), got {self.p_d}")
        if not 0 < self.p_s <= 1:
            raise ValueError(f"signal proportion must be in (0, 1], got {self.p_s}")
        if not 0 <= self.error_rate <= 1:
            raise ValueError(f"error rate must be in [0, 1], got {self.error_rate}")
        if self.N <= 0 or self.n_sigma < 0:
            raise ValueError("N must be positive and n_sigma nonnegative")
        unknown = set(self.eta_j) - set(DETECTOR_FRACTION)
        if unknown:
            raise UnknownState(f"unknown states in proportions: {sorted(unknown)}")
        if any(v < 0 for v in self.eta_j.values()) or abs(sum(self.eta_j.values()) - 1) > 1e-9:
            raise ValueError("state proportions must be nonnegative and sum to 1")

    @property
    def loss_db(self) -> float:
        return eta_to_db(self.eta)

    def pulses(self, state: str, intensity_class: str) -> float:
        share = self.p_s if intensity_class == "signal" else 1.0 - self.p_s
        return self.N * self.eta_j[state] * share


def _click(fraction, intensity, eta, p_d):
    return 1.0 - (1.0 - p_d) * np.exp(-eta * intensity * fraction)


def channel_prob(state_label: str, intensity: float, cfg: ChannelConfig) -> float:
    """Probability of outcome "1" for a phase-randomized pulse of the given intensity."""
    try:
        frac = DETECTOR_FRACTION[state_label]
    except KeyError:
        raise UnknownState(f"unknown state label {state_label!r}") from None
    p = _click(frac, intensity, cfg.eta, cfg.p_d)
    if cfg.error_rate:
        p = (1 - cfg.error_rate) * p + cfg.error_rate * _click(1 - frac, intensity, cfg.eta, cfg.p_d)
    return float(p)


def single_photon_prob(state_label: str, cfg: ChannelConfig) -> float:
    """Exact single-photon click probability of the channel model."""
    frac = DETECTOR_FRACTION[state_label]
    p = 1 - (1 - cfg.p_d) * (1 - cfg.eta * frac)
    if cfg.error_rate:
        p = (1 - cfg.error_rate) * p + cfg.error_rate * (1 - (1 - cfg.p_d) * (1 - cfg.eta * (1 - frac)))
    return p


def simulate_counts(cfg: ChannelConfig, seed: int | None = None) -> list[CountsRecord]:
    """Counts table for every state with nonzero proportion.

    Without ``seed`` the expected counts are rounded; with ``seed`` the "1"
    counts are drawn from a binomial distribution.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    records = []
    for state in cfg.eta_j:
        if cfg.eta_j[state] == 0:
            continue
        for cls, intensity in (("signal", cfg.mu), ("decoy", cfg.nu)):
            sent = int(round(cfg.pulses(state, cls)))
            if sent == 0:
                continue
            p = channel_prob(state, intensity, cfg)
            ones = int(rng.binomial(sent, p)) if rng is not None else int(round(sent * p))
            records.append(CountsRecord(state, cls, sent, ones))
    return records


# -- intensity optimization ---------------------------------------------------


def _expected_interval(p, sent, n_sigma):
    m = sent * p
    spread = n_sigma * np.sqrt(m)
    return np.clip((m - spread) / sent, 0, 1), np.clip((m + spread) / sent, 0, 1)


def _decoy_widths(mu, nu, cfg: ChannelConfig, states):
    """Sum of squared single-photon interval widths; inf where infeasible."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    ok = (nu > 0) & (nu <= MAX_DECOY_RATIO * mu)
    f = np.zeros(np.broadcast(mu, nu).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for state in states:
            frac = DETECTOR_FRACTION[state]
            pm = _click(frac, mu, cfg.eta, cfg.p_d)
            pn = _click(frac, nu, cfg.eta, cfg.p_d)
            if cfg.error_rate:
                e = cfg.error_rate
                pm = (1 - e) * pm + e * _click(1 - frac, mu, cfg.eta, cfg.p_d)
                pn = (1 - e) * pn + e * _click(1 - frac, nu, cfg.eta, cfg.p_d)
            _, pm_hi = _expected_interval(pm, cfg.pulses(state, "signal"), cfg.n_sigma)
            pn_lo, pn_hi = _expected_interval(pn, cfg.pulses(state, "decoy"), cfg.n_sigma)
            bracket = pn_lo * np.exp(nu) - pm_hi * np.exp(mu) * nu**2 / mu**2 - (mu**2 - nu**2) / mu**2 * cfg.p_d
            lo = np.clip(mu / (mu * nu - nu**2) * bracket, 0, 1)
            hi = np.clip(pn_hi / (nu * np.exp(-nu)), 0, 1)
            ok &= lo <= hi
            f = f + (hi - lo) ** 2
    return np.where(ok & np.isfinite(f), f, np.inf)


def _nondecoy_widths(mu, cfg: ChannelConfig, states):
    mu = np.asarray(mu, dtype=float)
    f = np.zeros(mu.shape)
    one = mu * np.exp(-mu)
    multi = 1 - np.exp(-mu) - one
    for state in states:
        frac = DETECTOR_FRACTION[state]
        pm = _click(frac, mu, cfg.eta, cfg.p_d)
        if cfg.error_rate:
            pm = (1 - cfg.error_rate) * pm + cfg.error_rate * _click(1 - frac, mu, cfg.eta, cfg.p_d)
        pm_lo, pm_hi = _expected_interval(pm, cfg.pulses(state, "signal"), cfg.n_sigma)
        lo = np.clip((pm_lo - np.exp(-mu) * cfg.p_d - multi) / one, 0, 1)
        hi = np.clip(pm_hi / one, 0, 1)
        f = f + (hi - lo) ** 2
    return f


@dataclass(frozen=True)
class IntensityOptimum:
    mu: float
    nu: float | None
    objective: float
    grid_shape: tuple[int, ...]
    feasible_points: int


def _refine_1d(f, x, step, lo, hi, min_step=1e-7):
    fx = f(np.array([x]))[0]
    while step > min_step:
        cand = np.clip(np.array([x - step, x + step]), lo, hi)
        vals = f(cand)
        j = int(np.argmin(vals))
        if vals[j] < fx:
            x, fx = float(cand[j]), float(vals[j])
        else:
            step /= 2
    return x, fx


def optimize_intensities(
    cfg: ChannelConfig,
    mu_range=(0.01, 1.0),
    nu_range=(0.005, 0.5),
    grid=(200, 200),
    states=SIM_STATES,
    refine: bool = True,
) -> IntensityOptimum:
    """Signal and decoy intensities minimizing the summed squared yield-interval widths.

    The objective covers the test states and the unknown state, since every
    one of their intervals enters the certificate.

    Raises:
        OptimizationFailed: no grid point satisfies the interval ordering.
    """
    mus = np.linspace(*mu_range, grid[0])
    nus = np.linspace(*nu_range, grid[1])
    f = _decoy_widths(mus[:, None], nus[None, :], cfg, states)
    feasible = np.isfinite(f)
    if not feasible.any():
        raise OptimizationFailed("no feasible (mu, nu) grid point")
    i, j = np.unravel_index(np.argmin(f), f.shape)
    mu, nu, fbest = float(mus[i]), float(nus[j]), float(f[i, j])
    if refine and (grid[0] > 1 or grid[1] > 1):
        steps = np.array([
            (mu_range[1] - mu_range[0]) / max(grid[0] - 1, 1),
            (nu_range[1] - nu_range[0]) / max(grid[1] - 1, 1),
        ])
        x = np.array([mu, nu])
        lower = np.array([mu_range[0], nu_range[0]])
        upper = np.array([mu_range[1], nu_range[1]])

        def obj(pts):
            return _decoy_widths(pts[:, 0], pts[:, 1], cfg, states)

        x, fbest, _ = certifier._pattern_search(
            obj, x, fbest, lower, upper, steps, 0.0, steps * 1e-4, 10_000
        )
        mu, nu = float(x[0]), float(x[1])
    return IntensityOptimum(mu, nu, fbest, tuple(grid), int(feasible.sum()))


def optimize_signal_intensity(
    cfg: ChannelConfig, mu_range=(0.01, 1.0), grid: int = 200, states=SIM_STATES, refine: bool = True
) -> IntensityOptimum:
    """Signal intensity for the non-decoy method."""
    mus = np.linspace(*mu_range, grid)
    f = _nondecoy_widths(mus, cfg, states)
    i = int(np.argmin(f))
    mu, fbest = float(mus[i]), float(f[i])
    if refine and grid > 1:
        mu, fbest = _refine_1d(
            lambda m: _nondecoy_widths(m, cfg, states), mu,
            (mu_range[1] - mu_range[0]) / (grid - 1), *mu_range,
        )
    return IntensityOptimum(mu, None, fbest, (grid,), grid)


# -- simulated certification ----------------------------------------------------


def simulated_yields(cfg: ChannelConfig, method: str = "decoy", states=SIM_STATES):
    """Single-photon yield intervals from expected (unrounded) click counts."""
    yields = {}
    if method == "decoy":
        icfg = IntensityConfig(cfg.mu, cfg.nu, cfg.p_d)
        for state in states:
            p_mu = count_interval(
                cfg.pulses(state, "signal") * channel_prob(state, cfg.mu, cfg), cfg.pulses(state, "signal"), cfg.n_sigma
            )
            p_nu = count_interval(
                cfg.pulses(state, "decoy") * channel_prob(state, cfg.nu, cfg), cfg.pulses(state, "decoy"), cfg.n_sigma
            )
            yields[state] = single_photon_bounds_decoy(p_mu, p_nu, icfg, state)
    elif method == "nondecoy":
        icfg = IntensityConfig(cfg.mu, None, cfg.p_d)
        for state in states:
            sent = cfg.pulses(state, "signal")
            p_mu = count_interval(sent * channel_prob(state, cfg.mu, cfg), sent, cfg.n_sigma)
            yields[state] = single_photon_bounds_nondecoy(p_mu, icfg, state)
    else:
        raise ValueError(f"method must be 'decoy' or 'nondecoy', got {method!r}")
    return yields


@dataclass(frozen=True)
class SweepPoint:
    loss_db: float
    c_lower_bits: float
    method: str
    flag: str
    mu: float | None = None
    nu: float | None = None


def simulate_point(
    base: ChannelConfig, loss_db: float, method: str = "decoy", optimize: bool = True,
    search: SearchConfig = DEFAULT_SEARCH,
) -> SweepPoint:
    """Certified coherence for the simulated experiment at one loss value."""
    cfg = replace(base, eta=db_to_eta(loss_db))
    try:
        if method == "nondecoy":
            # the non-decoy source sends every pulse at the signal intensity
            cfg = replace(cfg, p_s=1.0, nu=None)
            if optimize:
                cfg = replace(cfg, mu=optimize_signal_intensity(cfg).mu)
        elif method == "decoy":
            if optimize:
                opt = optimize_intensities(cfg)
                cfg = replace(cfg, mu=opt.mu, nu=opt.nu)
        else:
            raise ValueError(f"method must be 'decoy' or 'nondecoy', got {method!r}")
        yields = simulated_yields(cfg, method)
        cert = certifier.certify(FeasibleRegion.from_yields(yields), search=search)
    except MdicwError as exc:
        return SweepPoint(loss_db, math.nan, method, type(exc).__name__, cfg.mu, cfg.nu)
    return SweepPoint(loss_db, cert.c_lower, method, "ok", cfg.mu, cfg.nu)


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic range start, start+step, ..., stop."""
    if step <= 0 or stop < start:
        raise ValueError("sweep needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def loss_sweep(
    base: ChannelConfig, losses, method: str = "decoy", optimize: bool = True,
    search: SearchConfig = DEFAULT_SEARCH,
) -> list[SweepPoint]:
    points = [simulate_point(base, float(db), method, optimize, search) for db in losses]
    return sorted(points, key=lambda p: p.loss_db)


# -- basis-rotating attack ------------------------------------------------------

INTENDED_WITNESS = Witness(0.5, 0.5, 0.0, 0.5)
ATTACKED_WITNESS = Witness(0.5, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class AttackReport:
    p: float
    intended_value: float
    attacked_value: float
    falsely_witnessed: bool


def attack_demo(p: float) -> AttackReport:
    """Witness values for p|0><0| + (1-p)|1><1| before and after Eve rotates sigma_x onto sigma_z."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    delta = QubitState((0.0, 0.0, 2 * p - 1))
    intended = witness_expectation(delta, INTENDED_WITNESS)
    attacked = witness_expectation(delta, ATTACKED_WITNESS)
    return AttackReport(p, intended, attacked, attacked < 0)

