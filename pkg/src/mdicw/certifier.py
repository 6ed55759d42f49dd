"""Certified lower bound on the relative entropy of coherence.

For a qubit effect M1 observed with click probability t = tr(rho M1), the
coherence of rho is bounded below by the Golden-Thompson relaxed dual

    g(lam) = -|| sum_i P_i exp(-I - lam M1) P_i ||_inf - lam t      (nats).

The bound is maximized over the scalar multiplier ``lam`` and then minimized
over every POVM consistent with the single-photon yield box.

Writing an effect as M = c0 I + c.sigma with |c| = s and k = |c.beta| / s,
where beta is the Bloch axis of the coherence basis, the dephased exponential
has largest eigenvalue

    exp(-1 - lam c0) (cosh(lam s) + k |sinh(lam s)|),

which the vectorized search below uses.  ``dual_objective`` evaluates the same
quantity through an explicit eigendecomposition and serves as the reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .decoy import ProbInterval
from .errors import InfeasibleRegion
from .qubit import I2, LN2, PAULIS, Z_BASIS, CoherenceBasis, check_effect
from .tomography import FEASIBILITY_TOL, BinaryPovm

E_INV = math.exp(-1.0)
_EXP_CLIP = 700.0

LABELINGS = ("M1", "M0")
# (labeling index, sign of lambda) in tie-break order
_BRANCHES = ((0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0))


@dataclass(frozen=True)
class SearchConfig:
    """Resolution knobs for the multiplier search and the POVM-region search."""

    grid_points: int = 9
    refine_tol: float = 1e-6
    min_step: float = 1e-6
    max_refine_iter: int = 10_000
    lambda_tol: float = 1e-6
    lambda_cap: float = 1e3
    restarts: int = 8

    def __post_init__(self):
        if self.grid_points < 1:
            raise ValueError("grid_points must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.lambda_tol <= 0 or self.lambda_cap <= 0:
            raise ValueError("lambda_tol and lambda_cap must be positive")


DEFAULT_SEARCH = SearchConfig()


@dataclass(frozen=True)
class DualBound:
    bits: float
    nats: float
    lambda_star: float
    labeling: str
    t_worst: float
    saturated: bool


@dataclass(frozen=True)
class FeasibleRegion:
    """Yield box for the four test states plus the interval on t = tr(rho M1)."""

    q0: ProbInterval
    q1: ProbInterval
    qplus: ProbInterval
    qplusi: ProbInterval
    rho: ProbInterval

    @property
    def boxes(self) -> tuple[ProbInterval, ...]:
        return (self.q0, self.q1, self.qplus, self.qplusi)

    @classmethod
    def from_yields(cls, yields, unknown="RHO") -> "FeasibleRegion":
        return cls(yields["Z0"], yields["Z1"], yields["XP"], yields["YP"], yields[unknown])

    @classmethod
    def point(cls, q, t) -> "FeasibleRegion":
        q0, q1, qp, qi = (ProbInterval.point(x) for x in q)
        return cls(q0, q1, qp, qi, ProbInterval.point(t))


@dataclass(frozen=True)
class CoherenceCertificate:
    c_lower: float
    lambda_star: float
    worst_povm: BinaryPovm
    t_worst: float
    labeling: str
    t_interval: ProbInterval
    region: FeasibleRegion
    diagnostics: dict = field(default_factory=dict)

    @property
    def worst_q(self) -> tuple[float, float, float, float]:
        return self.diagnostics["worst_q"]


# -- scalar reference path --------------------------------------------------


def dual_objective(m1, t: float, lam: float, basis: CoherenceBasis = Z_BASIS) -> float:
    """Relaxed dual value in nats at multiplier ``lam``."""
    m = check_effect(m1)
    w, v = np.linalg.eigh(-I2 - lam * m)
    r = (v * np.exp(w)) @ v.conj().T
    dephased = basis.proj0 @ r @ basis.proj0 + basis.proj1 @ r @ basis.proj1
    norm = float(np.linalg.eigvalsh(dephased)[-1])
    return -norm - lam * t


def _effect_coords(m1) -> tuple[float, np.ndarray]:
    if isinstance(m1, BinaryPovm):
        return m1.coords
    m = check_effect(m1)
    c0 = float(np.real(np.trace(m))) / 2
    c = np.array([np.real(np.trace(m @ p)) / 2 for p in PAULIS])
    return c0, c


def _shape_params(c, axis) -> tuple[np.ndarray, np.ndarray]:
    """|c| and |c.axis|/|c| for arrays of Bloch-coordinate vectors (..., 3)."""
    c = np.asarray(c, dtype=float)
    s = np.linalg.norm(c, axis=-1)
    proj = np.abs(c @ np.asarray(axis, dtype=float))
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(s > 0, proj / np.where(s > 0, s, 1.0), 0.0)
    return s, np.clip(k, 0.0, 1.0)


# -- vectorized multiplier search ---------------------------------------------


def _clip_exp(x):
    return np.exp(np.minimum(x, _EXP_CLIP))


def _maximize_branch(c0, s, k, t, sign, tol, cap):
    """Maximize g over lam = sign*u, u >= 0, for arrays of effects.

    On each half-line g is smooth and concave, so the maximizer is the root of
    its derivative.  Returns (u*, g(u*), saturated).
    """
    a = (1 + k) / 2
    b = (1 - k) / 2
    alpha = s - sign * c0
    beta = s + sign * c0

    def deriv(u):
        return -E_INV * (a * alpha * _clip_exp(u * alpha) - b * beta * _clip_exp(-u * beta)) - sign * t

    def value(u):
        return -E_INV * (a * _clip_exp(u * alpha) + b * _clip_exp(-u * beta)) - sign * u * t

    shape = np.broadcast(c0, s, k, t).shape
    zero = np.zeros(shape)
    active = deriv(zero) > 0
    hi = np.where(active, 1.0, 0.0)
    while True:
        grow = active & (hi < cap) & (deriv(hi) > 0)
        if not grow.any():
            break
        hi = np.where(grow, np.minimum(2 * hi, cap), hi)
    saturated = active & (deriv(hi) > 0)
    lo = np.where(active & ~saturated & (hi > 1), hi / 2, 0.0)
    lo = np.where(saturated, hi, lo)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        up = deriv(mid) > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    u = np.where(active, 0.5 * (lo + hi), 0.0)
    return u, value(u), saturated


def _dual_arrays(c0, s, k, t_lo, t_hi, search: SearchConfig):
    """Best relaxed dual (nats) over both labelings and both signs of lam."""
    c0 = np.asarray(c0, dtype=float)
    candidates = []
    for lab, sign in _BRANCHES:
        if lab == 0:
            cc, t = c0, (t_hi if sign > 0 else t_lo)
        else:
            cc, t = 1.0 - c0, (1.0 - t_lo if sign > 0 else 1.0 - t_hi)
        u, val, sat = _maximize_branch(cc, s, k, t, sign, search.lambda_tol, search.lambda_cap)
        t_m1 = t if lab == 0 else 1.0 - t
        candidates.append((val, sign * u, sat, np.broadcast_to(t_m1, val.shape)))
    vals = np.stack([c[0] for c in candidates])
    idx = np.argmax(vals, axis=0)[None]

    def pick(j):
        return np.take_along_axis(np.stack([c[j] for c in candidates]), idx, axis=0)[0]

    branch_lab = np.array([b[0] for b in _BRANCHES])[idx[0]]
    return pick(0), pick(1), branch_lab, pick(3), pick(2)


def labeling_bound(
    m1, t_interval: ProbInterval, basis: CoherenceBasis = Z_BASIS, labeling: str = "M1",
    search: SearchConfig = DEFAULT_SEARCH,
) -> DualBound:
    """Relaxed dual through a single labeling, not clamped at zero."""
    c0, c = _effect_coords(m1)
    s, k = _shape_params(c, basis.axis)
    lo, hi = t_interval.lo, t_interval.hi
    if labeling == "M1":
        branches = ((c0, hi, 1.0, hi), (c0, lo, -1.0, lo))
    elif labeling == "M0":
        branches = ((1 - c0, 1 - lo, 1.0, lo), (1 - c0, 1 - hi, -1.0, hi))
    else:
        raise ValueError(f"labeling must be 'M1' or 'M0', got {labeling!r}")
    best = None
    for cc, t, sign, t_m1 in branches:
        u, val, sat = _maximize_branch(cc, s, k, t, sign, search.lambda_tol, search.lambda_cap)
        if best is None or float(val) > best[0]:
            best = (float(val), sign * float(u), bool(sat), t_m1)
    val, lam, sat, t_m1 = best
    return DualBound(val / LN2, val, lam, labeling, float(t_m1), sat)


def dual_lower_bound(
    m1, t_interval: ProbInterval, basis: CoherenceBasis = Z_BASIS,
    search: SearchConfig = DEFAULT_SEARCH,
) -> DualBound:
    """Coherence lower bound in bits valid for every t in ``t_interval``.

    Both outcome labelings relax the same primal problem, so the larger of the
    two is reported.  The result is clamped at zero.
    """
    c0, c = _effect_coords(m1)
    s, k = _shape_params(c, basis.axis)
    best, lam, lab, t_worst, sat = _dual_arrays(c0, s, k, t_interval.lo, t_interval.hi, search)
    nats = float(best)
    return DualBound(
        max(0.0, nats / LN2), nats, float(lam), LABELINGS[int(lab)], float(t_worst), bool(sat)
    )


# -- brute-force primal -------------------------------------------------------


@lru_cache(maxsize=8)
def _bloch_grid(points: int) -> np.ndarray:
    g = np.linspace(-1.0, 1.0, points)
    r = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    r = r[np.einsum("ij,ij->i", r, r) <= 1.0 + 1e-12]
    r.setflags(write=False)
    return r


def _h2(p):
    p = np.clip(p, 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return h / LN2


def primal_oracle(
    m1, t_interval: ProbInterval, basis: CoherenceBasis = Z_BASIS, grid: int = 61
) -> float:
    """Minimum coherence over a Bloch-ball grid of states compatible with the data.

    Returns ``inf`` when no grid state has tr(rho M1) inside ``t_interval``.
    """
    if grid < 50:
        raise ValueError("primal grid needs at least 50 points per axis")
    c0, c = _effect_coords(m1)
    r = _bloch_grid(grid)
    born = c0 + r @ c
    ok = (born >= t_interval.lo - 1e-12) & (born <= t_interval.hi + 1e-12)
    if not ok.any():
        return math.inf
    r = r[ok]
    norm = np.minimum(np.linalg.norm(r, axis=1), 1.0)
    rb = r @ basis.axis
    coh = _h2((1 + rb) / 2) - _h2((1 + norm) / 2)
    return float(max(0.0, coh.min()))


# -- worst case over the POVM region -------------------------------------------


def _q_to_coords(q):
    """(q0, q1, q+, q+i) -> (c0, c) with M1 = c0 I + c.sigma."""
    q = np.asarray(q, dtype=float)
    c0 = 0.5 * (q[..., 0] + q[..., 1])
    c = np.stack([q[..., 2] - c0, q[..., 3] - c0, 0.5 * (q[..., 0] - q[..., 1])], axis=-1)
    return c0, c


def _psd_ok(c0, s, tol=FEASIBILITY_TOL):
    return (s <= c0 + tol) & (c0 + s <= 1.0 + tol)


class _RegionObjective:
    def __init__(self, t: ProbInterval, basis: CoherenceBasis, search: SearchConfig):
        self.t = t
        self.axis = basis.axis
        self.search = search
        self.evaluations = 0

    def __call__(self, q):
        """Unclamped bound (bits) per row of q; +inf where M1 is not a valid effect."""
        c0, c = _q_to_coords(q)
        s, k = _shape_params(c, self.axis)
        ok = _psd_ok(c0, s)
        out = np.full(c0.shape, np.inf)
        if ok.any():
            best, *_ = _dual_arrays(c0[ok], s[ok], k[ok], self.t.lo, self.t.hi, self.search)
            out[ok] = best / LN2
        self.evaluations += int(ok.sum())
        return out

    def detail(self, q):
        c0, c = _q_to_coords(np.asarray(q)[None])
        s, k = _shape_params(c, self.axis)
        return _dual_arrays(c0, s, k, self.t.lo, self.t.hi, self.search)


def _pattern_search(f, x0, f0, lower, upper, steps, tol, min_steps, max_iter):
    """Coordinate descent on a box with step halving. Returns (x, f(x), iterations)."""
    x, fx = np.array(x0, dtype=float), float(f0)
    steps = np.array(steps, dtype=float)
    d = len(x)
    it = 0
    while it < max_iter and np.any(steps > min_steps):
        it += 1
        cand = []
        for i in range(d):
            if steps[i] <= min_steps[i]:
                continue
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[i] = min(upper[i], max(lower[i], x[i] + sgn * steps[i]))
                if y[i] != x[i]:
                    cand.append(y)
        if not cand:
            break
        cand = np.array(cand)
        vals = f(cand)
        j = int(np.argmin(vals))
        if vals[j] < fx - tol:
            x, fx = cand[j], float(vals[j])
        elif vals[j] < fx:
            x, fx = cand[j], float(vals[j])
            steps = steps / 2
        else:
            steps = steps / 2
    return x, fx, it


def certify(
    region: FeasibleRegion, basis: CoherenceBasis = Z_BASIS, search: SearchConfig = DEFAULT_SEARCH
) -> CoherenceCertificate:
    """Worst-case coherence bound over every POVM compatible with ``region``.

    A deterministic grid over the four-dimensional yield box is followed by
    coordinate-descent refinement started from the best few grid points.

    Raises:
        InfeasibleRegion: no grid point of the box is a valid qubit effect.
    """
    boxes = region.boxes
    axes = [np.unique(np.linspace(b.lo, b.hi, search.grid_points)) for b in boxes]
    grid = np.array(list(itertools.product(*axes)))
    objective = _RegionObjective(region.rho, basis, search)
    vals = objective(grid)
    feasible = np.isfinite(vals)
    if not feasible.any():
        raise InfeasibleRegion("every grid point of the yield box violates POVM positivity")
    # grid rows are in lexicographic order and the sort is stable, so ties
    # break on the smallest q
    order = np.argsort(vals, kind="stable")[: min(search.restarts, int(feasible.sum()))]
    lower = np.array([b.lo for b in boxes])
    upper = np.array([b.hi for b in boxes])
    widths = upper - lower
    steps = widths / max(search.grid_points - 1, 1)
    q, fq, iters = None, np.inf, 0
    for i0 in order:
        qi, fi, it = _pattern_search(
            objective, grid[i0], vals[i0], lower, upper, steps,
            search.refine_tol, widths * search.min_step, search.max_refine_iter,
        )
        iters += it
        if fi < fq:
            q, fq = qi, fi
    best, lam, lab, t_worst, sat = objective.detail(q)
    c0, c = _q_to_coords(q)
    povm = BinaryPovm(float(c0), tuple(float(x) for x in (c / c0 if c0 > 0 else np.zeros(3))))
    raw_bits = float(best[0]) / LN2
    diagnostics = {
        "grid_points": int(len(grid)),
        "feasible_grid_points": int(feasible.sum()),
        "refine_starts": int(len(order)),
        "refine_iterations": int(iters),
        "evaluations": objective.evaluations,
        "bracket_saturated": bool(sat[0]),
        "raw_bound_bits": raw_bits,
        "labeling_symmetrized": True,
        "worst_q": tuple(float(x) for x in q),
    }
    return CoherenceCertificate(
        c_lower=max(0.0, raw_bits),
        lambda_star=float(lam[0]),
        worst_povm=povm,
        t_worst=float(t_worst[0]),
        labeling=LABELINGS[int(lab[0])],
        t_interval=region.rho,
        region=region,
        diagnostics=diagnostics,
    )
