"""Exact random-variate generation for the crossing primitives.

Three generators: the Beta-transform first-coordinate overshoot (plain
measure), the tabulated-inverse-CDF first-coordinate overshoot under the
conditioned measure, and the multivariate Cauchy transverse displacement.
All draws are exact in law; approximation only ever enters through
proposal tables and is removed again by an acceptance step.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .kernels import Barrier, Direction, Point, StableParams
from .numerics import DomainError, QuadSpec, TabulatedCdf, build_inverse_cdf

__all__ = [
    "ConditionedSamplerCache",
    "RngStream",
    "beta_sample",
    "mv_cauchy",
    "overshoot_first_coord",
    "overshoot_first_coord_conditioned",
    "overshoot_point",
]

_MASK64 = (1 << 64) - 1


class RngStream:
    """Counter-based random stream addressed by (master_seed, stream_id).

    Built on Philox, so a stream is a pure function of its address and
    never depends on how many other streams exist. Two lanes are carved
    out of each address at widely separated counter offsets: lane 0
    drives first-coordinate draws, lane 1 transverse draws. Keeping the
    lanes apart makes the first-coordinate sequence independent of the
    ambient dimension, so runs differing only in d share their crossing
    skeleton.
    """

    def __init__(self, master_seed: int, stream_id: int):
        self.master_seed = int(master_seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = [self.master_seed, self.stream_id]
        self._first = np.random.Generator(
            np.random.Philox(counter=[0, 0, 0, 0], key=key))
        self._transverse = np.random.Generator(
            np.random.Philox(counter=[0, 0, 1, 0], key=key))

    @property
    def first_lane(self) -> np.random.Generator:
        return self._first

    @property
    def transverse_lane(self) -> np.random.Generator:
        return self._transverse

    @property
    def counter(self):
        """Current Philox counters of (first, transverse) lanes."""
        return tuple(
            tuple(int(w) for w in
                  g.bit_generator.state["state"]["counter"])
            for g in (self._first, self._transverse))

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, "
                f"stream_id={self.stream_id})")


def beta_sample(a: float, b: float, rng, size=None):
    """Exact Beta(a, b) draw via two Gamma variates, valid for shapes < 1.

    Returns values strictly inside (0,1); boundary hits from floating
    underflow are redrawn.
    """
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"Beta shapes must be positive, got ({a}, {b})")
    scalar = size is None
    n = 1 if scalar else int(size)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = n - filled
        ga = rng.standard_gamma(a, size=m)
        gb = rng.standard_gamma(b, size=m)
        s = ga + gb
        with np.errstate(invalid="ignore", divide="ignore"):
            u = ga / s
        good = (s > 0) & (u > 0.0) & (u < 1.0)
        k = int(np.count_nonzero(good))
        out[filled:filled + k] = u[good]
        filled += k
    return float(out[0]) if scalar else out


def _overshoot_from_u(x1: float, barrier: Barrier, u):
    """Deterministic inversion from a Beta variate to the crossing point."""
    u = np.asarray(u, dtype=float)
    r = barrier.level
    # u near 1 overflows to inf; callers redraw those
    with np.errstate(over="ignore", divide="ignore"):
        theta = u / (1.0 - u)
        if barrier.direction is Direction.DOWN:
            return r - (x1 - r) * theta
        return r + (r - x1) * theta


def overshoot_first_coord(x1: float, barrier: Barrier, alpha: float,
                          rng, size=None):
    """First coordinate of the position at first crossing of the barrier.

    U ~ Beta(1-alpha/2, alpha/2) maps to the crossing point through
    theta = U/(1-U); for the Down barrier at level 1 this is
    y = (1 - U x1)/(1 - U). The returned value is strictly beyond the
    barrier: the process never creeps onto it.
    """
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0,2), got {alpha}")
    r = barrier.level
    if barrier.direction is Direction.DOWN:
        if x1 <= r:
            raise DomainError("x1 must start strictly above a Down barrier")
    else:
        if x1 >= r:
            raise DomainError("x1 must start strictly below an Up barrier")
    scalar = size is None
    n = 1 if scalar else int(size)
    out = np.empty(n)
    filled = 0
    while filled < n:
        u = np.atleast_1d(beta_sample(1.0 - alpha / 2, alpha / 2, rng,
                                      size=n - filled))
        y = _overshoot_from_u(x1, barrier, u)
        good = np.isfinite(y) & (y != r)
        k = int(np.count_nonzero(good))
        out[filled:filled + k] = y[good]
        filled += k
    return float(out[0]) if scalar else out


def mv_cauchy(gamma: float, p: int, rng, size=None):
    """Isotropic p-dimensional Cauchy draw with scale gamma.

    Generated as gamma * Z / sqrt(W) with Z standard normal in R^p and W
    an independent one-degree chi-square (multivariate t with 1 d.o.f.).
    """
    if gamma <= 0.0:
        raise DomainError(f"scale must be positive, got {gamma}")
    if int(p) != p or p < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {p}")
    scalar = size is None
    n = 1 if scalar else int(size)
    p = int(p)
    w = rng.standard_normal(n) ** 2
    while True:
        bad = w == 0.0
        if not np.any(bad):
            break
        w[bad] = rng.standard_normal(int(np.count_nonzero(bad))) ** 2
    z = rng.standard_normal((n, p))
    # a draw at huge scale may exceed float range; the true variate is
    # then beyond representation and the result saturates to +-inf
    with np.errstate(over="ignore"):
        out = gamma * z / np.sqrt(w)[:, None]
    return out[0] if scalar else out


def overshoot_point(x: Point, barrier: Barrier, params: StableParams,
                    rng: RngStream) -> Point:
    """Full d-dimensional position at first crossing of the barrier.

    First coordinate by the Beta transform, then the transverse
    displacement is Cauchy with scale equal to the first-coordinate
    travel |x1 - y1|, drawn from the stream's transverse lane.
    """
    if x.dim != params.d:
        raise DomainError(
            f"point dimension {x.dim} does not match d={params.d}")
    y1 = overshoot_first_coord(x.first, barrier, params.alpha,
                               rng.first_lane)
    if params.d == 1:
        return Point(y1)
    t = x.transverse + mv_cauchy(abs(x.first - y1), params.d - 1,
                                 rng.transverse_lane)
    return Point(y1, t)


@dataclass(frozen=True)
class _CacheEntry:
    """Tables in the offset coordinate tau = |t - 1/x| of the Beta
    transform t = (1-y)/(x-y).

    The transform turns the crossing density into
    t^(-a/2) (1-t)^(-a/2) |1 - t x|^(a-1) on (0,1), singular at the
    endpoints and at t = 1/x. Splitting there and measuring each piece
    from its own singular point puts the dominant |y|^(a-1) weight at
    tau = 0, where floats resolve it down to denormals; for small alpha
    several percent of the mass lives closer to the split than one ulp
    of t, so any coordinate that reaches it by subtraction loses that
    mass outright. y follows from tau without cancellation:
    y = x tau/(eps + tau) on the positive side, -x tau/(eps - tau) on
    the negative side, with eps = (x-1)/x.

    The positive piece is further split at tau = min(eps, 1/(2x)): the
    (eps + tau) factor turns over at the hidden scale eps, and beyond it
    the density runs as tau^(a/2-1), so declaring that power on the
    outer piece keeps the tabulation adaptive instead of brute-force.
    The negative piece hides the mirror-image scale: (1/x + tau) turns
    over at 1/x, which sits far inside (0, eps) once x > 3, and the
    dozens of decades of tau^(a/2-1) ramp between the two scales defeat
    any tabulation that declares only the tau^(a-1) endpoint. Far
    entries therefore carry two negative tables split at 1/x.
    """

    x_rep: float
    eps_rep: float           # (x_rep - 1)/x_rep, the negative side's span
    tables: tuple            # TabulatedCdf per piece
    sides: tuple             # -1: crossing lands below 0, +1: inside (0,1)
    cum_weights: np.ndarray  # cumulative piece probabilities, last is 1

    def y_pos(self, tau):
        return self.x_rep * tau / (self.eps_rep + tau)

    def y_neg(self, tau):
        return -self.x_rep * tau / (self.eps_rep - tau)


class ConditionedSamplerCache:
    """Inverse-CDF tables for the conditioned crossing law.

    Tables are keyed by the start position quantized on a GRID_STEP grid
    in log(x1 - 1). A key may reuse any already-built table whose
    representative lies within SHARE_RADIUS in that coordinate: the
    sampler's acceptance step corrects the proposal back to the exact law
    for the true x1, so sharing costs a little acceptance probability
    (at least exp(-SHARE_RADIUS)) and never exactness.

    Past log(x1 - 1) = 60 the law moves so slowly in x1 that unit-width
    cells suffice; excursions under alpha near 1 land out there often
    enough that rebuilding per crossing would dominate the walk cost.

    Reads are lock-free; insertion is serialized so concurrent workers
    build a missing table once.
    """

    GRID_STEP = 1e-3
    SHARE_RADIUS = 0.0625
    COARSE_EDGE = 60.0

    def __init__(self, face: int, params: StableParams):
        if face not in (1, -1):
            raise DomainError(f"face must be +1 or -1, got {face}")
        if not 0.0 < params.alpha < 1.0:
            raise DomainError("conditioned sampling requires alpha in (0,1)")
        self.face = face
        self.params = params
        self._fine: dict = {}
        self._reps: dict = {}
        self._coarse: dict = {}
        self._lock = threading.Lock()

    @property
    def table_count(self) -> int:
        return len(self._reps)

    def tables_for(self, x_canonical: float) -> _CacheEntry:
        """Entry serving a start point in the canonical frame (x1 > 1)."""
        if x_canonical <= 1.0:
            raise DomainError("canonical start must lie strictly beyond +1")
        q = math.log(x_canonical - 1.0)
        if q > self.COARSE_EDGE:
            # math.exp overflows past 709, so the last cell absorbs the rest
            ck = min(int(round(q)), 709)
            entry = self._coarse.get(ck)
            if entry is not None:
                return entry
            with self._lock:
                entry = self._coarse.get(ck)
                if entry is None:
                    entry = self._build(1.0 + math.exp(float(ck)))
                    self._coarse[ck] = entry
            return entry
        if q < -self.COARSE_EDGE:
            # unreachable for float x > 1 (q >= -36.05), kept as a fence
            return self._build(x_canonical)
        key = int(round(q / self.GRID_STEP))
        entry = self._fine.get(key)
        if entry is not None:
            return entry
        with self._lock:
            entry = self._fine.get(key)
            if entry is None:
                entry = self._nearest_rep(q)
                if entry is None:
                    ck = int(round(q / self.SHARE_RADIUS))
                    entry = self._build(1.0 + math.exp(ck * self.SHARE_RADIUS))
                    self._reps[ck] = entry
                self._fine[key] = entry
        return entry

    def _nearest_rep(self, q: float):
        ck = int(round(q / self.SHARE_RADIUS))
        best, best_gap = None, self.SHARE_RADIUS
        for c in (ck - 1, ck, ck + 1):
            e = self._reps.get(c)
            if e is None:
                continue
            gap = abs(math.log(e.x_rep - 1.0) - q)
            if gap <= best_gap:
                best, best_gap = e, gap
        return best

    def _build(self, x_rep: float) -> _CacheEntry:
        alpha = self.params.alpha
        c = 1.0 / x_rep
        eps = (x_rep - 1.0) / x_rep

        # density of tau = 1/x - t on (0, 1/x); tau = 0 is y = 0+
        def g_pos(tau):
            tau = np.asarray(tau, dtype=float)
            return ((x_rep * tau) ** (alpha - 1.0)
                    * (c - tau) ** (-alpha / 2.0)
                    * (eps + tau) ** (-alpha / 2.0))

        # density of tau = t - 1/x on (0, eps); tau = 0 is y = 0-
        def g_neg(tau):
            tau = np.asarray(tau, dtype=float)
            return ((x_rep * tau) ** (alpha - 1.0)
                    * (c + tau) ** (-alpha / 2.0)
                    * (eps - tau) ** (-alpha / 2.0))

        split = min(eps, 0.5 * c)
        if c < 0.5 * eps:
            parts = [
                (build_inverse_cdf(g_neg, QuadSpec(
                    0.0, c, singularity_exponents=(alpha - 1.0, None))), -1),
                (build_inverse_cdf(g_neg, QuadSpec(
                    c, eps, singularity_exponents=(alpha / 2.0 - 1.0,
                                                   -alpha / 2.0))), -1),
            ]
        else:
            parts = [
                (build_inverse_cdf(g_neg, QuadSpec(
                    0.0, eps, singularity_exponents=(alpha - 1.0,
                                                     -alpha / 2.0))), -1),
            ]
        parts.append((build_inverse_cdf(g_pos, QuadSpec(
            0.0, split, singularity_exponents=(alpha - 1.0, None))), 1))
        parts.append((build_inverse_cdf(g_pos, QuadSpec(
            split, c, singularity_exponents=(alpha / 2.0 - 1.0,
                                             -alpha / 2.0))), 1))
        masses = np.array([t.total_mass for t, _ in parts])
        cum = np.cumsum(masses) / masses.sum()
        cum[-1] = 1.0
        return _CacheEntry(x_rep, eps, tuple(t for t, _ in parts),
                           tuple(s for _, s in parts), cum)


def overshoot_first_coord_conditioned(x1: float, face: int, alpha: float,
                                      cache: ConditionedSamplerCache,
                                      rng, size=None):
    """First coordinate of the slab-face crossing under the conditioned law.

    Draws from the cached proposal tables, then accepts with probability
    (x_rep - y)/(x1 - y) normalized by its supremum, which is exactly the
    density ratio between the true start and the table representative.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("conditioned sampling requires alpha in (0,1)")
    if cache.params.alpha != alpha:
        raise DomainError(
            f"cache was built for alpha={cache.params.alpha}, got {alpha}")
    if face != cache.face:
        raise DomainError(f"cache serves face {cache.face}, got {face}")
    if face == 1:
        if x1 <= 1.0:
            raise DomainError("x1 must lie strictly beyond the +1 face")
        xc, sgn = x1, 1.0
    elif face == -1:
        if x1 >= -1.0:
            raise DomainError("x1 must lie strictly beyond the -1 face")
        xc, sgn = -x1, -1.0
    else:
        raise DomainError(f"face must be +1 or -1, got {face}")

    entry = cache.tables_for(xc)
    bound = max(1.0, (entry.x_rep - 1.0) / (xc - 1.0))
    scalar = size is None
    n = 1 if scalar else int(size)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = n - filled
        u = rng.random(m)
        idx = np.searchsorted(entry.cum_weights, u, side="right")
        y = np.empty(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j, (table, side) in enumerate(zip(entry.tables,
                                                  entry.sides)):
                mask = idx == j
                k = int(np.count_nonzero(mask))
                if k:
                    tau = table.quantile(rng.random(k))
                    y[mask] = (entry.y_neg(tau) if side < 0
                               else entry.y_pos(tau))
        ratio = (entry.x_rep - y) / (xc - y)
        keep = (rng.random(m) * bound <= ratio)
        keep &= np.isfinite(y) & (y != 0.0) & (y < 1.0)
        k = int(np.count_nonzero(keep))
        out[filled:filled + k] = sgn * y[keep]
        filled += k
    return float(out[0]) if scalar else out
