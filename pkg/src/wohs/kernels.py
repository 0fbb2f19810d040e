"""Closed-form first-passage kernels for isotropic stable processes.

Every function here is a pure evaluation of a density, potential, or
Green function at given points. Evaluation points strictly outside a
kernel's open support return 0 so quadrature can sweep freely;
measure-zero configurations (points on the barrier, coincident
arguments, interior poles) raise DomainError instead of returning
infinities.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import DomainError, gamma_fn, incomplete_j, stable_constants

__all__ = [
    "Barrier",
    "Direction",
    "LadderKind",
    "Point",
    "StableParams",
    "ball_hitting_density",
    "cauchy_density",
    "double_density",
    "green_halfspace",
    "jump_density",
    "ladder_potentials",
    "overshoot_density",
    "overshoot_density_conditioned",
    "pcr_density",
    "triple_density",
]


class Direction(enum.Enum):
    DOWN = "down"  # first crossing strictly below the level
    UP = "up"      # first crossing strictly above the level


class LadderKind(enum.Enum):
    ASCENDING = "ascending"
    DESCENDING_RENEWAL = "descending-renewal"


@dataclass(frozen=True)
class StableParams:
    """Stability index and ambient dimension of the process."""

    alpha: float
    d: int

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0,2), got {self.alpha}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be an integer >= 1, got {self.d}")


@dataclass(frozen=True, eq=False)
class Point:
    """A point split into the coordinate normal to the barrier and the rest."""

    first: float
    transverse: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        object.__setattr__(
            self, "transverse",
            np.atleast_1d(np.asarray(self.transverse, dtype=float)))

    @property
    def dim(self) -> int:
        return 1 + len(self.transverse)

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.first], self.transverse])

    @classmethod
    def from_array(cls, a) -> "Point":
        a = np.asarray(a, dtype=float).ravel()
        if len(a) == 0:
            raise DomainError("a point needs at least one coordinate")
        return cls(float(a[0]), a[1:])


@dataclass(frozen=True)
class Barrier:
    level: float
    direction: Direction

    def __post_init__(self):
        if not math.isfinite(self.level):
            raise DomainError("barrier level must be finite")


def _check_dims(params: StableParams, *points: Point) -> None:
    for p in points:
        if p.dim != params.d:
            raise DomainError(
                f"point dimension {p.dim} does not match d={params.d}")


def _dist(a: Point, b: Point) -> float:
    df = a.first - b.first
    dt = a.transverse - b.transverse
    return float(np.sqrt(df * df + dt @ dt))


def _down_frame(barrier: Barrier, *points: Point):
    # reflect Up configurations about the level so one formula serves both
    if barrier.direction is Direction.DOWN:
        return barrier.level, points
    r = barrier.level
    return r, tuple(Point(2.0 * r - p.first, p.transverse) for p in points)


def pcr_density(x: Point, y: Point, params: StableParams) -> float:
    """Density of the point of closest reach to the barrier at 0.

    The process starts at x with x1 > 0 and y is the candidate closest
    point, supported on the wedge 0 < y1 < x1. Other barrier levels and
    the Up direction follow by translating and reflecting the arguments.
    """
    _check_dims(params, x, y)
    if x.first <= 0.0:
        raise DomainError("x must start strictly above the barrier at 0")
    if _dist(x, y) == 0.0:
        raise DomainError("coincident evaluation point")
    if y.first == 0.0:
        raise DomainError("evaluation point on the barrier")
    if y.first < 0.0 or y.first >= x.first:
        return 0.0
    c = stable_constants(params.alpha, params.d)
    a2 = params.alpha / 2.0
    return float(c.C * (x.first - y.first) ** a2 * y.first ** (-a2)
                 * _dist(x, y) ** (-params.d))


def triple_density(x: Point, w: Point, y: Point, z: Point,
                   barrier: Barrier, params: StableParams) -> float:
    """Joint density of (closest reach w before crossing, undershoot y,
    overshoot z) at the first crossing of the barrier."""
    _check_dims(params, x, w, y, z)
    r, (x, w, y, z) = _down_frame(barrier, x, w, y, z)
    for a, b in ((x, w), (w, y), (y, z)):
        if _dist(a, b) == 0.0:
            raise DomainError("coincident evaluation point")
    if r in (x.first, w.first, y.first, z.first):
        raise DomainError("point on the barrier")
    if not (x.first > w.first > r and y.first > w.first and z.first < r):
        return 0.0
    c = stable_constants(params.alpha, params.d)
    a2 = params.alpha / 2.0
    return float(
        c.A
        * (x.first - w.first) ** a2 / _dist(x, w) ** params.d
        * (y.first - w.first) ** a2 / _dist(w, y) ** params.d
        * _dist(y, z) ** (-params.alpha - params.d))


def double_density(x: Point, y: Point, z: Point,
                   barrier: Barrier, params: StableParams) -> float:
    """Joint density of (undershoot y, overshoot z) at the first crossing."""
    _check_dims(params, x, y, z)
    r, (x, y, z) = _down_frame(barrier, x, y, z)
    if _dist(x, y) == 0.0 or _dist(y, z) == 0.0:
        raise DomainError("coincident evaluation point")
    if r in (x.first, y.first, z.first):
        raise DomainError("point on the barrier")
    if not (x.first > r and y.first > r and z.first < r):
        return 0.0
    c = stable_constants(params.alpha, params.d)
    rxy = _dist(x, y)
    zeta = 4.0 * (x.first - r) * (y.first - r) / (rxy * rxy)
    return float(c.B * rxy ** (params.alpha - params.d)
                 * incomplete_j(zeta, params.alpha, params.d)
                 * _dist(y, z) ** (-params.alpha - params.d))


def overshoot_density(x: Point, z: Point,
                      barrier: Barrier, params: StableParams) -> float:
    """Density of the position at first crossing of the barrier."""
    _check_dims(params, x, z)
    r, (x, z) = _down_frame(barrier, x, z)
    if x.first <= r:
        raise DomainError("x must start strictly on the pre-crossing side")
    if z.first == r:
        raise DomainError("evaluation point on the barrier")
    if z.first > r:
        return 0.0
    a2 = params.alpha / 2.0
    c = stable_constants(params.alpha, params.d)
    return float(c.C * _dist(x, z) ** (-params.d)
                 * ((x.first - r) / (r - z.first)) ** a2)


def overshoot_density_conditioned(x: Point, y: Point, barrier: Barrier,
                                  params: StableParams) -> float:
    """Crossing density into the slab under the conditioned law.

    Defined for alpha in (0,1) on the slab faces: level +1 crossed Down
    (x1 > 1, y1 < 1) or level -1 crossed Up (x1 < -1, y1 > -1). The
    weight |y1|^(alpha-1) is anchored at the slab midplane 0 for both
    faces; it is not translation-invariant, so the Up face is handled by
    reflecting through 0, never by shifting.
    """
    _check_dims(params, x, y)
    if not 0.0 < params.alpha < 1.0:
        raise DomainError("conditioned law requires alpha in (0,1)")
    if barrier.level == 1.0 and barrier.direction is Direction.DOWN:
        xf, yf = x.first, y.first
    elif barrier.level == -1.0 and barrier.direction is Direction.UP:
        xf, yf = -x.first, -y.first
    else:
        raise DomainError(
            "conditioned crossing is defined on the slab faces: "
            "level +1 Down or level -1 Up")
    if xf <= 1.0:
        raise DomainError("x must lie strictly beyond the face")
    if yf == 1.0:
        raise DomainError("evaluation point on the face")
    if yf > 1.0:
        return 0.0
    if yf == 0.0:
        raise DomainError("evaluation point at the weight singularity")
    c = stable_constants(params.alpha, params.d)
    a2 = params.alpha / 2.0
    h = abs(yf) ** (params.alpha - 1.0) / xf ** (params.alpha - 1.0)
    return float(c.C * h * _dist(x, y) ** (-params.d)
                 * (xf - 1.0) ** a2 / (1.0 - yf) ** a2)


def cauchy_density(t, gamma: float) -> float:
    """Isotropic Cauchy density in p = len(t) coordinates with scale gamma."""
    if gamma <= 0.0:
        raise DomainError(f"scale must be positive, got {gamma}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = len(t) + 1
    norm = gamma_fn(d / 2.0) / math.pi ** (d / 2.0)
    return float(norm * gamma / (gamma * gamma + t @ t) ** (d / 2.0))


def green_halfspace(x: Point, y: Point,
                    barrier: Barrier, params: StableParams) -> float:
    """Occupation density of the process killed at its first crossing."""
    _check_dims(params, x, y)
    r, (x, y) = _down_frame(barrier, x, y)
    if x.first <= r:
        raise DomainError("x must lie strictly on the surviving side")
    if _dist(x, y) == 0.0:
        raise DomainError("coincident evaluation point")
    if y.first == r:
        raise DomainError("evaluation point on the barrier")
    if y.first < r:
        return 0.0
    c = stable_constants(params.alpha, params.d)
    rxy = _dist(x, y)
    zeta = 4.0 * (x.first - r) * (y.first - r) / (rxy * rxy)
    return float(c.E * rxy ** (params.alpha - params.d)
                 * incomplete_j(zeta, params.alpha, params.d))


def jump_density(v, params: StableParams) -> float:
    """Levy jump density at displacement v."""
    v = np.asarray(v, dtype=float).ravel()
    if len(v) != params.d:
        raise DomainError(
            f"jump vector has {len(v)} coordinates, expected {params.d}")
    n = float(np.sqrt(v @ v))
    if n == 0.0:
        raise DomainError("jump density has a pole at the origin")
    c = stable_constants(params.alpha, params.d)
    return float(c.K * n ** (-params.alpha - params.d))


def ladder_potentials(kind: LadderKind, x: Point, arg,
                      params: StableParams) -> float:
    """Renewal densities of the first-coordinate ladder processes.

    Ascending takes a Point strictly above x in the first coordinate and
    returns the d-dimensional renewal density. DescendingRenewal takes a
    scalar strictly below x1 and returns the one-dimensional ladder
    height occupation density. Arguments outside those half-regions are
    errors, not zeros: both kernels are supported everywhere they are
    defined.
    """
    a2 = params.alpha / 2.0
    if kind is LadderKind.ASCENDING:
        z = arg
        _check_dims(params, x, z)
        if _dist(x, z) == 0.0:
            raise DomainError("coincident evaluation point")
        if z.first <= x.first:
            raise DomainError("ascending kernel needs arg strictly above x")
        return float(
            gamma_fn(params.d / 2.0)
            / (math.pi ** (params.d / 2.0) * gamma_fn(a2))
            * (z.first - x.first) ** a2 / _dist(x, z) ** params.d)
    if kind is LadderKind.DESCENDING_RENEWAL:
        v = float(arg)
        if v >= x.first:
            raise DomainError(
                "descending renewal density needs arg strictly below x")
        return float((x.first - v) ** (a2 - 1.0) / gamma_fn(a2))
    raise DomainError(f"unknown ladder kind: {kind!r}")


def ball_hitting_density(x: Point, y: Point, center: Point, radius: float,
                         params: StableParams) -> float:
    """Density of the entry position into a ball, started outside it.

    Defective: its integral over the ball is the hitting probability,
    which is below 1 whenever the process can avoid the ball forever.
    """
    _check_dims(params, x, y, center)
    if radius <= 0.0:
        raise DomainError(f"radius must be positive, got {radius}")
    rx = _dist(x, center)
    ry = _dist(y, center)
    if rx <= radius:
        raise DomainError("x must lie strictly outside the ball")
    if ry >= radius:
        raise DomainError("y must lie strictly inside the ball")
    c = stable_constants(params.alpha, params.d)
    a2 = params.alpha / 2.0
    ratio = abs(radius * radius - rx * rx) / abs(radius * radius - ry * ry)
    return float(c.C * ratio ** a2 * _dist(x, y) ** (-params.d))
