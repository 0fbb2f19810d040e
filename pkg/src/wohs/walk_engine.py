"""Walk-on-half-spaces into the slab (-1,1) x R^{d-1}.

The walk repeatedly samples the position at the first crossing of the
nearer slab face, alternating faces, until the first coordinate lands
inside the slab. With alpha in [1,2) the plain walk enters almost
surely; with alpha in (0,1) it may escape forever, so that regime is
served by a conditioned measure whose walks always enter and whose
results carry importance weights back to the plain law.
"""
from __future__ import annotations

import enum
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as _scipy_stats

from .kernels import Point, StableParams
from .numerics import DomainError
from .samplers import (
    ConditionedSamplerCache,
    RngStream,
    beta_sample,
    mv_cauchy,
    overshoot_first_coord_conditioned,
)

__all__ = [
    "CrossingEvent",
    "HittingEstimate",
    "Measure",
    "Mode",
    "WalkConfig",
    "WalkResult",
    "WalkStatus",
    "batch_walk",
    "hitting_probability_estimate",
    "walk_slab",
]

DEFAULT_CAP_PLAIN = 1_000_000
DEFAULT_CAP_CONDITIONED = 10_000


class Measure(enum.Enum):
    PLAIN = "plain"
    CONDITIONED = "conditioned"


class Mode(enum.Enum):
    FULL_TRACE = "full-trace"
    COLLAPSED = "collapsed"


class WalkStatus(enum.Enum):
    ENTERED = "entered"
    CAP_REACHED = "cap-reached"


@dataclass(frozen=True)
class CrossingEvent:
    index: int
    face: int                     # +1 or -1, the face just crossed
    first: float                  # first coordinate after the crossing
    transverse: Optional[np.ndarray] = None  # absent in collapsed mode


@dataclass(frozen=True)
class WalkResult:
    status: WalkStatus
    final_point: Optional[Point]
    n_crossings: int
    accumulated_scale: float      # sum of |first-coordinate increments|
    weight: float                 # importance weight; 1 under the plain law
    trace: Optional[tuple] = None


@dataclass(frozen=True)
class WalkConfig:
    """Parameters of one walk.

    Plain walks with alpha < 1 are allowed but may never enter the slab,
    so they demand an explicit max_crossings and report CapReached runs
    instead of erroring. Conditioned walks require alpha in (0,1).
    """

    params: StableParams
    start: Point
    measure: Measure = Measure.PLAIN
    mode: Mode = Mode.COLLAPSED
    max_crossings: Optional[int] = None
    record_trace: bool = False

    def __post_init__(self):
        if self.params.d < 2:
            raise DomainError("the slab walk needs d >= 2")
        if self.start.dim != self.params.d:
            raise DomainError(
                f"start dimension {self.start.dim} does not match "
                f"d={self.params.d}")
        if abs(self.start.first) <= 1.0:
            raise DomainError(
                "start must lie strictly outside the closed slab")
        alpha = self.params.alpha
        if self.measure is Measure.CONDITIONED and not 0.0 < alpha < 1.0:
            raise DomainError("conditioned walks require alpha in (0,1)")
        if self.max_crossings is not None and self.max_crossings < 1:
            raise DomainError("max_crossings must be >= 1")
        if (self.measure is Measure.PLAIN and alpha < 1.0
                and self.max_crossings is None):
            raise DomainError(
                "plain walks with alpha < 1 may never enter the slab; "
                "set max_crossings explicitly to accept truncated runs")

    @property
    def cap(self) -> int:
        if self.max_crossings is not None:
            return self.max_crossings
        if self.measure is Measure.CONDITIONED:
            return DEFAULT_CAP_CONDITIONED
        return DEFAULT_CAP_PLAIN


_cache_lock = threading.Lock()
_cache_registry: dict = {}


def _conditioned_cache(alpha: float, face: int) -> ConditionedSamplerCache:
    # process-wide, read-mostly; the cache itself serializes inserts
    key = (alpha, face)
    cache = _cache_registry.get(key)
    if cache is None:
        with _cache_lock:
            cache = _cache_registry.get(key)
            if cache is None:
                cache = ConditionedSamplerCache(face, StableParams(alpha, 2))
                _cache_registry[key] = cache
    return cache


def walk_slab(config: WalkConfig, rng: RngStream) -> WalkResult:
    """Run one walk to slab entry or to the crossing cap.

    In full-trace mode every crossing draws its own transverse Cauchy
    step with scale equal to that crossing's first-coordinate increment;
    in collapsed mode the transverse displacement is drawn once at entry
    with scale equal to the accumulated first-coordinate travel,
    including the very first increment. The two modes agree in law.
    """
    if config.measure is Measure.CONDITIONED:
        return _walk_conditioned(config, rng)
    return _walk_plain(config, rng)


def _walk_plain(config: WalkConfig, rng: RngStream) -> WalkResult:
    # the first-coordinate chain consumes Beta variates in doubling
    # blocks from the first lane; only the block schedule, not the walk's
    # law, depends on it, and the schedule is a pure function of the
    # chain itself, so first coordinates match across modes and d
    p = config.params
    a, b = 1.0 - p.alpha / 2.0, p.alpha / 2.0
    full = config.mode is Mode.FULL_TRACE
    cap = config.cap
    keep_path = full or config.record_trace

    x1 = config.start.first
    scale = 0.0
    firsts: list = []
    entered = False
    n_done = 0
    block = 16
    lane = rng.first_lane
    while True:
        for u in beta_sample(a, b, lane, size=block).tolist():
            t = u / (1.0 - u)
            if x1 > 1.0:
                y = 1.0 - (x1 - 1.0) * t
            else:
                y = -1.0 + (-1.0 - x1) * t
            # rounding onto either face (underflow of the increment or
            # an overflowing jump) is redrawn: the process never creeps
            if not math.isfinite(y) or y == 1.0 or y == -1.0:
                continue
            scale += abs(x1 - y)
            x1 = y
            n_done += 1
            if keep_path:
                firsts.append(y)
            if -1.0 < y < 1.0:
                entered = True
                break
            if n_done == cap:
                break
        if entered or n_done == cap:
            break
        block = min(2 * block, 4096)

    start_t = np.asarray(config.start.transverse, dtype=float)
    positions = None
    if full and (entered or config.record_trace):
        lane_t = rng.transverse_lane
        w = lane_t.standard_normal(n_done) ** 2
        while True:
            bad = w == 0.0
            if not np.any(bad):
                break
            w[bad] = lane_t.standard_normal(
                int(np.count_nonzero(bad))) ** 2
        z = lane_t.standard_normal((n_done, p.d - 1))
        # overflow saturates to +-inf by design: near-critical alpha can
        # drive the crossing scale past float range
        with np.errstate(over="ignore", invalid="ignore"):
            steps = np.abs(np.diff(np.concatenate(
                ([config.start.first], firsts))))
            inc = steps[:, None] * z / np.sqrt(w)[:, None]
            positions = start_t[None, :] + np.cumsum(inc, axis=0)
            if not np.all(np.isfinite(positions[-1])):
                # a component that has saturated to +-inf stays there
                # instead of degrading to nan on an opposite-sign jump
                cur = start_t.copy()
                for i in range(n_done):
                    cand = cur + inc[i]
                    cur = np.where(np.isnan(cand), cur, cand)
                    positions[i] = cur

    if entered:
        if full:
            transverse = positions[-1]
        else:
            transverse = start_t + mv_cauchy(scale, p.d - 1,
                                             rng.transverse_lane)
        final = Point(x1, transverse)
        status = WalkStatus.ENTERED
    else:
        final = None
        status = WalkStatus.CAP_REACHED

    trace = None
    if config.record_trace:
        events = []
        prev = config.start.first
        for i, y in enumerate(firsts):
            events.append(CrossingEvent(
                i + 1, 1 if prev > 1.0 else -1, y,
                positions[i].copy() if full else None))
            prev = y
        trace = tuple(events)
    return WalkResult(status=status, final_point=final, n_crossings=n_done,
                      accumulated_scale=scale, weight=1.0, trace=trace)


def _walk_conditioned(config: WalkConfig, rng: RngStream) -> WalkResult:
    p = config.params
    alpha = p.alpha
    full = config.mode is Mode.FULL_TRACE
    cap = config.cap

    x1 = config.start.first
    transverse = np.array(config.start.transverse, dtype=float)
    scale = 0.0
    trace = [] if config.record_trace else None
    entered = False
    n = cap
    for k in range(1, cap + 1):
        face = 1 if x1 > 1.0 else -1
        cache = _conditioned_cache(alpha, face)
        y1 = overshoot_first_coord_conditioned(
            x1, face, alpha, cache, rng.first_lane)
        step = abs(x1 - y1)
        scale += step
        if full:
            moved = transverse + mv_cauchy(step, p.d - 1,
                                           rng.transverse_lane)
            # keep a saturated +-inf component instead of degrading to
            # nan on the next opposite-sign jump
            transverse = np.where(np.isnan(moved), transverse, moved)
        if trace is not None:
            trace.append(CrossingEvent(
                k, face, y1, transverse.copy() if full else None))
        x1 = y1
        if -1.0 < y1 < 1.0:
            entered = True
            n = k
            break

    if entered:
        if not full:
            transverse = config.start.transverse + mv_cauchy(
                scale, p.d - 1, rng.transverse_lane)
        final = Point(x1, transverse)
        status = WalkStatus.ENTERED
    else:
        final = None
        status = WalkStatus.CAP_REACHED

    # on CapReached this is the likelihood ratio accumulated so far,
    # measured at the last position reached
    weight = (abs(config.start.first) ** (alpha - 1.0)
              / abs(x1) ** (alpha - 1.0))
    return WalkResult(status=status, final_point=final, n_crossings=n,
                      accumulated_scale=scale, weight=weight,
                      trace=tuple(trace) if trace is not None else None)


def batch_walk(config: WalkConfig, n: int, workers: int = 1,
               rng_master: int = 0) -> list:
    """Run n independent walks, reproducibly for any worker count.

    Walk i draws from the stream (rng_master, i), so the dataset is a
    pure function of the master seed and n; workers only partition the
    index range. If a worker dies the error propagates and no partial
    dataset is returned.
    """
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    results: list = [None] * n
    if n == 0:
        return results

    def run_block(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            results[i] = walk_slab(config, RngStream(rng_master, i))

    if workers == 1:
        run_block(0, n)
    else:
        block = (n + workers - 1) // workers
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_block, lo, min(lo + block, n))
                       for lo in range(0, n, block)]
            for f in futures:
                f.result()
    return results


@dataclass(frozen=True)
class HittingEstimate:
    estimate: float
    standard_error: float
    trimmed_estimate: float
    trim_fraction: float
    n: int


def hitting_probability_estimate(dataset, start: Point,
                                 trim_fraction: float = 0.01
                                 ) -> HittingEstimate:
    """Estimate the probability of ever entering the slab from start.

    The mean of the conditioned weights is an unbiased estimate of the
    entry probability under the plain law. Weights on entered runs are
    bounded by |start1|^(alpha-1) < 1, so the plain mean is already
    well-behaved; the trimmed mean is reported as a skew diagnostic,
    not as a substitute estimator.
    """
    results = list(dataset)
    if not results:
        raise DomainError("cannot estimate from an empty dataset")
    if abs(start.first) <= 1.0:
        raise DomainError("start must lie strictly outside the closed slab")
    for r in results:
        if r.status is not WalkStatus.ENTERED:
            raise DomainError(
                "estimate requires every run to have entered the slab")
    w = np.array([r.weight for r in results], dtype=float)
    est = float(w.mean())
    se = (float(w.std(ddof=1) / math.sqrt(len(w)))
          if len(w) > 1 else math.nan)
    trimmed = float(_scipy_stats.trim_mean(w, trim_fraction))
    return HittingEstimate(estimate=est, standard_error=se,
                           trimmed_estimate=trimmed,
                           trim_fraction=trim_fraction, n=len(w))
