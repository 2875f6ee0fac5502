"""Flat-torus geometry: points, closed balls, containment and intersection.

Points are tuples of d coordinates in [0, 1), d in {1, 2}.  Coordinates may
be floats or mpfr numbers.  The quotient metric is the Euclidean metric on
the unit cube with opposite faces glued, so every predicate reduces to the
distance between centers as long as radii stay below the injectivity radius
1/2 (we require < 1/4 and games cap at 1/8).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _numeric as nm

TOL = 1e-12
MAX_GAME_RADIUS = 0.125


class DimensionMismatch(ValueError):
    pass


def as_point(x) -> tuple:
    """Accept a scalar (d=1) or a sequence and return a coordinate tuple."""
    if isinstance(x, (tuple, list)):
        return tuple(x)
    try:
        return tuple(x.tolist())  # numpy array
    except AttributeError:
        return (x,)


def normalize(x) -> tuple:
    return tuple(nm.frac(v) for v in as_point(x))


def delta(x, y) -> tuple:
    """Componentwise signed shortest displacement x - y, each in [-1/2, 1/2)."""
    x, y = as_point(x), as_point(y)
    if len(x) != len(y):
        raise DimensionMismatch(f"dimension {len(x)} != {len(y)}")
    return tuple(nm.wrap(a - b) for a, b in zip(x, y))


def torus_distance(x, y):
    d = delta(x, y)
    if len(d) == 1:
        return abs(d[0])
    return nm.sqrt(sum(v * v for v in d))


@dataclass(frozen=True)
class MetricBall:
    center: tuple
    radius: object

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", normalize(self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains_point(self, p) -> bool:
        return torus_distance(self.center, p) <= self.radius * (1 + TOL)

    def to_json(self) -> dict:
        return {"center": nm.encode(list(self.center)), "radius": nm.encode(self.radius)}

    @classmethod
    def from_json(cls, obj) -> "MetricBall":
        return cls(nm.decode(obj["center"]), nm.decode(obj["radius"]))


def ball_contains_ball(outer: MetricBall, inner: MetricBall) -> bool:
    """Closed-ball containment; ties within relative 1e-12 count as contained."""
    d = torus_distance(outer.center, inner.center)
    return d <= outer.radius - inner.radius + TOL * outer.radius


def ball_intersects_ball(a: MetricBall, b: MetricBall) -> bool:
    d = torus_distance(a.center, b.center)
    s = a.radius + b.radius
    return d <= s * (1 + TOL)


def balls_disjoint_strict(a: MetricBall, b: MetricBall) -> bool:
    """Disjointness without tolerance slack (used where a margin is required)."""
    return torus_distance(a.center, b.center) > a.radius + b.radius


def translate(x, v) -> tuple:
    """Point x moved by displacement v, normalized."""
    return normalize(tuple(a + b for a, b in zip(as_point(x), as_point(v))))
