"""Concrete smooth systems on the circle and the 2-torus.

Four families are supported:

* ``circle_expanding(m, delta)``: x -> m x + delta sin(2 pi x) mod 1
* ``torus_conformal(a, b)``: z -> (a + b i) z mod Z^2
* ``cat_map()``: x -> [[2, 1], [1, 1]] x mod 1
* ``perturbed_cat_map(delta)``: cat map plus (delta sin(2 pi x1), 0)

Besides evaluation the module provides derivative cocycles, expansion
bounds, numerically computed hyperbolic splittings, inverse-branch
enumeration of preimage components, distortion ratios, Bowen balls and a
local stable-holonomy projection.  Scalar code is written once and works for
floats and mpfr; a few hot paths also have numpy array versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _numeric as nm
from .geometry import MetricBall, as_point, delta as tdelta, normalize, torus_distance

KINDS = ("circle_expanding", "torus_conformal", "cat_map", "perturbed_cat_map")
DEFAULT_DEPTH_CAP = 64
SQRT5 = math.sqrt(5.0)
CAT_UNSTABLE = (3.0 + SQRT5) / 2.0
CAT_STABLE = (3.0 - SQRT5) / 2.0


class InvalidSystem(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


class DepthCapExceeded(ValueError):
    pass


class HoleTooLarge(ValueError):
    pass


class LocalityExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    m: int = 0
    delta: float = 0.0
    multiplier: tuple = (0, 0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSystem(f"unknown kind {self.kind!r}")
        if self.delta < 0:
            raise InvalidSystem("delta must be nonnegative")
        if self.kind == "circle_expanding":
            if int(self.m) != self.m or self.m < 2:
                raise InvalidSystem("m must be an integer >= 2")
            if not 2 * math.pi * self.delta < self.m - 1:
                raise InvalidSystem("need 2*pi*delta < m - 1 for uniform expansion")
        elif self.kind == "torus_conformal":
            a, b = self.multiplier
            if int(a) != a or int(b) != b or a * a + b * b < 2:
                raise InvalidSystem("multiplier must be a Gaussian integer with a^2+b^2 >= 2")
            object.__setattr__(self, "multiplier", (int(a), int(b)))
        elif self.kind == "perturbed_cat_map":
            if self.delta > 1e-3:
                raise InvalidSystem("perturbation must satisfy delta <= 1e-3")
        if self.kind != "circle_expanding" and self.kind != "perturbed_cat_map" and self.delta:
            raise InvalidSystem(f"{self.kind} takes no delta")

    # -- descriptive properties -------------------------------------------
    @property
    def dim(self) -> int:
        return 1 if self.kind == "circle_expanding" else 2

    @property
    def is_expanding(self) -> bool:
        return self.kind in ("circle_expanding", "torus_conformal")

    @property
    def is_anosov(self) -> bool:
        return self.kind in ("cat_map", "perturbed_cat_map")

    @property
    def is_linear(self) -> bool:
        return self.delta == 0

    @property
    def n_branches(self) -> int:
        if self.kind == "circle_expanding":
            return self.m
        if self.kind == "torus_conformal":
            a, b = self.multiplier
            return a * a + b * b
        return 1

    @property
    def name(self) -> str:
        if self.kind == "circle_expanding":
            if self.delta == 0 and self.m in (2, 3):
                return {2: "doubling", 3: "tripling"}[self.m]
            return f"circle_expanding({self.m},{self.delta:g})"
        if self.kind == "torus_conformal":
            return "torus_conformal({},{})".format(*self.multiplier)
        if self.kind == "cat_map":
            return "cat_map"
        return f"perturbed_cat_map({self.delta:g})"

    def to_config(self) -> dict:
        return {"kind": self.kind, "m": self.m, "delta": self.delta,
                "multiplier": list(self.multiplier)}

    @classmethod
    def from_config(cls, cfg: dict) -> "SystemSpec":
        return cls(cfg["kind"], int(cfg.get("m", 0)), float(cfg.get("delta", 0.0)),
                   tuple(cfg.get("multiplier", (0, 0))))


def circle_expanding(m: int, delta: float = 0.0) -> SystemSpec:
    return SystemSpec("circle_expanding", m=m, delta=float(delta))


def doubling() -> SystemSpec:
    return circle_expanding(2)


def tripling() -> SystemSpec:
    return circle_expanding(3)


def torus_conformal(a: int, b: int) -> SystemSpec:
    return SystemSpec("torus_conformal", multiplier=(a, b))


def cat_map() -> SystemSpec:
    return SystemSpec("cat_map")


def perturbed_cat_map(delta: float) -> SystemSpec:
    return SystemSpec("perturbed_cat_map", delta=float(delta))


def system_from_name(name: str) -> SystemSpec:
    """Parse short names: doubling, tripling, cat, perturbed_cat:1e-3, ce:2:0.05, conformal:1:1."""
    parts = name.strip().lower().split(":")
    head = parts[0]
    try:
        if head == "doubling":
            return doubling()
        if head == "tripling":
            return tripling()
        if head in ("cat", "cat_map", "catmap"):
            return cat_map()
        if head in ("perturbed_cat", "perturbed_cat_map"):
            return perturbed_cat_map(float(parts[1]) if len(parts) > 1 else 1e-3)
        if head in ("ce", "circle_expanding"):
            return circle_expanding(int(parts[1]), float(parts[2]) if len(parts) > 2 else 0.0)
        if head in ("conformal", "torus_conformal"):
            return torus_conformal(int(parts[1]), int(parts[2]))
    except (IndexError, ValueError) as exc:
        raise InvalidSystem(f"cannot parse system {name!r}: {exc}") from exc
    raise InvalidSystem(f"unknown system {name!r}")


# ---------------------------------------------------------------------------
# evaluation

def lift_map(sys: SystemSpec, x):
    """Lift F: R -> R of a circle map, F(x + 1) = F(x) + m."""
    if sys.delta:
        return sys.m * x + sys.delta * nm.sin2pi(x)
    return sys.m * x


def lift_derivative(sys: SystemSpec, x):
    if sys.delta:
        return sys.m + 2 * nm.pi_like(x) * sys.delta * nm.cos2pi(x)
    return sys.m


def _apply_lifted(sys: SystemSpec, x: tuple) -> tuple:
    if sys.kind == "circle_expanding":
        return (lift_map(sys, x[0]),)
    x1, x2 = x
    if sys.kind == "torus_conformal":
        a, b = sys.multiplier
        return (a * x1 - b * x2, b * x1 + a * x2)
    y1 = 2 * x1 + x2
    if sys.delta:
        y1 = y1 + sys.delta * nm.sin2pi(x1)
    return (y1, x1 + x2)


def apply(sys: SystemSpec, x) -> tuple:
    return normalize(_apply_lifted(sys, as_point(x)))


def iterate(sys: SystemSpec, x, k: int) -> tuple:
    x = normalize(x)
    for _ in range(k):
        x = apply(sys, x)
    return x


def orbit(sys: SystemSpec, x, k: int) -> list:
    """[x, f(x), ..., f^k(x)]."""
    out = [normalize(x)]
    for _ in range(k):
        out.append(apply(sys, out[-1]))
    return out


def apply_array(sys: SystemSpec, X: np.ndarray) -> np.ndarray:
    """Vectorized float map on an (n, d) array (or 1-d array for d = 1)."""
    X = np.asarray(X, dtype=float)
    if sys.kind == "circle_expanding":
        Y = sys.m * X + sys.delta * np.sin(2 * np.pi * X)
        return Y - np.floor(Y)
    x1, x2 = X[..., 0], X[..., 1]
    if sys.kind == "torus_conformal":
        a, b = sys.multiplier
        Y = np.stack([a * x1 - b * x2, b * x1 + a * x2], axis=-1)
    else:
        y1 = 2 * x1 + x2 + sys.delta * np.sin(2 * np.pi * x1)
        Y = np.stack([y1, x1 + x2], axis=-1)
    return Y - np.floor(Y)


def jacobian(sys: SystemSpec, x) -> tuple:
    """Df(x) as a tuple of rows; 1x1 for circle maps.

    Linear systems return Python ints so products of Jacobians stay exact.
    """
    x = as_point(x)
    if sys.kind == "circle_expanding":
        return ((lift_derivative(sys, x[0]),),)
    if sys.kind == "torus_conformal":
        a, b = sys.multiplier
        return ((a, -b), (b, a))
    if sys.delta:
        return ((2 + 2 * nm.pi_like(x[0]) * sys.delta * nm.cos2pi(x[0]), 1), (1, 1))
    return ((2, 1), (1, 1))


def apply_with_jacobian(sys: SystemSpec, x) -> tuple:
    """(f(x), Df(x)) sharing one trigonometric evaluation for the perturbed cat map."""
    x = as_point(x)
    if sys.kind != "perturbed_cat_map" or not sys.delta:
        return apply(sys, x), jacobian(sys, x)
    x1, x2 = x
    sn, cs = nm.sin_cos2pi(x1)
    y = normalize((2 * x1 + x2 + sys.delta * sn, x1 + x2))
    return y, ((2 + 2 * nm.pi_like(x1) * sys.delta * cs, 1), (1, 1))


def matmul(A, B):
    return tuple(tuple(sum(A[i][t] * B[t][j] for t in range(len(B)))
                       for j in range(len(B[0]))) for i in range(len(A)))


def matvec(A, v):
    return tuple(sum(A[i][t] * v[t] for t in range(len(v))) for i in range(len(A)))


def transpose(A):
    return tuple(zip(*A))


def inverse_jacobian(sys: SystemSpec, x):
    J = jacobian(sys, x)
    if len(J) == 1:
        return ((1 / J[0][0],),)
    (a, b), (c, d) = J
    det = a * d - b * c
    return ((d / det, -b / det), (-c / det, a / det))


# ---------------------------------------------------------------------------
# inverse branches

def _newton_tol(x):
    if nm.is_mp(x):
        return nm.mp(2) ** (-(nm.precision_bits() - 6))
    return 1e-15


def inverse_branch_1d(sys: SystemSpec, t, i: int):
    """Solve F(x) = t + i for the lifted circle map (unique since F is increasing)."""
    target = t + i
    if not sys.delta:
        return target / sys.m
    m, d = sys.m, sys.delta
    lo, hi = (target - d) / m, (target + d) / m
    x = target / m
    tol = _newton_tol(x)
    for _ in range(200):
        fx = lift_map(sys, x) - target
        if fx > 0:
            hi = x
        else:
            lo = x
        step = fx / lift_derivative(sys, x)
        xn = x - step
        if not lo <= xn <= hi:
            xn = (lo + hi) / 2
        if abs(xn - x) <= tol * max(1, abs(x)):
            return xn
        x = xn
    raise NonConvergence("inverse branch Newton iteration did not converge")


@lru_cache(maxsize=None)
def conformal_coset_reps(a: int, b: int) -> tuple:
    """Integer vectors n indexing the |a+bi|^2 inverse branches z -> M^{-1}(z + n)."""
    D = a * a + b * b
    seen, reps = set(), []
    for n1 in range(D):
        for n2 in range(D):
            key = ((a * n1 + b * n2) % D, (-b * n1 + a * n2) % D)
            if key not in seen:
                seen.add(key)
                reps.append((n1, n2))
            if len(reps) == D:
                return tuple(reps)
    return tuple(reps)


def _conformal_inverse(sys, v, n):
    a, b = sys.multiplier
    D = a * a + b * b
    w1, w2 = v[0] + n[0], v[1] + n[1]
    return ((a * w1 + b * w2) / D, (-b * w1 + a * w2) / D)


def _perturbed_inverse_lifted(sys, y):
    """Exact inverse of the (perturbed) cat map, returned normalized."""
    y1, y2 = y
    d = sys.delta
    u = nm.frac(y1 - y2)  # x1 + delta sin(2 pi x1) = u  (mod 1)
    if d:
        x1 = u
        tol = _newton_tol(u)
        for _ in range(100):
            g = x1 + d * nm.sin2pi(x1) - u
            dx = g / (1 + 2 * nm.pi_like(x1) * d * nm.cos2pi(x1))
            x1 = x1 - dx
            if abs(dx) <= tol:
                break
        else:
            raise NonConvergence("perturbed inverse did not converge")
        x2 = y2 - x1
    else:
        x1 = u
        x2 = y2 - x1
    return normalize((x1, x2))


def preimages(sys: SystemSpec, x) -> list:
    """All f-preimages of x in canonical branch order."""
    x = normalize(x)
    if sys.kind == "circle_expanding":
        return [normalize((inverse_branch_1d(sys, x[0], i),)) for i in range(sys.m)]
    if sys.kind == "torus_conformal":
        return [normalize(_conformal_inverse(sys, x, n)) for n in conformal_coset_reps(*sys.multiplier)]
    return [_perturbed_inverse_lifted(sys, x)]


def inverse(sys: SystemSpec, x) -> tuple:
    if not sys.is_anosov:
        raise InvalidSystem("inverse is only defined for diffeomorphisms")
    return _perturbed_inverse_lifted(sys, normalize(x))


def inverse_array(sys: SystemSpec, Y: np.ndarray) -> np.ndarray:
    """Vectorized inverse for the (perturbed) cat map."""
    Y = np.asarray(Y, dtype=float)
    u = np.mod(Y[:, 0] - Y[:, 1], 1.0)
    x1 = u.copy()
    if sys.delta:
        for _ in range(30):
            g = x1 + sys.delta * np.sin(2 * np.pi * x1) - u
            step = g / (1 + 2 * np.pi * sys.delta * np.cos(2 * np.pi * x1))
            x1 = x1 - step
            if np.max(np.abs(step)) < 1e-16:
                break
    x2 = Y[:, 1] - x1
    X = np.stack([x1, x2], axis=1)
    return X - np.floor(X)


# ---------------------------------------------------------------------------
# expansion bounds and splittings

@dataclass(frozen=True)
class ExpansionBounds:
    sigma1: float
    sigma2: float
    lam: float | None = None

    def __post_init__(self):
        if not 1 < self.sigma1 <= self.sigma2:
            raise InvalidSystem(f"need 1 < sigma1 <= sigma2, got {self.sigma1}, {self.sigma2}")
        if self.lam is not None and not 0 < self.lam < 1:
            raise InvalidSystem(f"need 0 < lambda < 1, got {self.lam}")


@dataclass(frozen=True)
class Splitting:
    point: tuple
    e_u: tuple
    e_s: tuple
    residual: float


def _unit(v):
    n = math.hypot(v[0], v[1])
    u = (v[0] / n, v[1] / n)
    return u if u[0] > 0 or (u[0] == 0 and u[1] > 0) else (-u[0], -u[1])


CAT_E_U = _unit((1.0, (SQRT5 - 1) / 2))
CAT_E_S = _unit((1.0, -(1 + SQRT5) / 2))


def _cocycle_array(sys, X, iterations, stable):
    """Vectorized power iteration giving e_u (or e_s) at each row of X."""
    n = len(X)
    if stable:
        pts = [X]
        for _ in range(iterations):
            pts.append(apply_array(sys, pts[-1]))
        v = np.tile(CAT_E_S, (n, 1))
        for P in reversed(pts[:-1]):
            a = 2 + 2 * np.pi * sys.delta * np.cos(2 * np.pi * P[:, 0])
            det = a - 1
            v = np.stack([(v[:, 0] - v[:, 1]) / det, (-v[:, 0] + a * v[:, 1]) / det], axis=1)
            v /= np.linalg.norm(v, axis=1)[:, None]
    else:
        pts = [X]
        for _ in range(iterations):
            pts.append(inverse_array(sys, pts[-1]))
        v = np.tile(CAT_E_U, (n, 1))
        for P in reversed(pts[1:]):
            a = 2 + 2 * np.pi * sys.delta * np.cos(2 * np.pi * P[:, 0])
            v = np.stack([a * v[:, 0] + v[:, 1], v[:, 0] + v[:, 1]], axis=1)
            v /= np.linalg.norm(v, axis=1)[:, None]
    sgn = np.where(v[:, 0] < 0, -1.0, 1.0)
    return v * sgn[:, None]


@lru_cache(maxsize=None)
def expansion_bounds(sys: SystemSpec) -> ExpansionBounds:
    if sys.kind == "circle_expanding":
        w = 2 * math.pi * sys.delta
        return ExpansionBounds(sys.m - w, sys.m + w)
    if sys.kind == "torus_conformal":
        a, b = sys.multiplier
        s = math.sqrt(a * a + b * b)
        return ExpansionBounds(s, s)
    if not sys.delta:
        return ExpansionBounds(CAT_UNSTABLE, CAT_UNSTABLE, CAT_STABLE)
    # Perturbed: sample ||Df e_u|| and ||Df e_s|| on a grid; widen by the
    # Lipschitz bound of these norms times the half mesh.
    g = (np.arange(64) + 0.5) / 64
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    a = 2 + 2 * np.pi * sys.delta * np.cos(2 * np.pi * X[:, 0])
    eu = _cocycle_array(sys, X, 40, stable=False)
    es = _cocycle_array(sys, X, 40, stable=True)
    nu = np.hypot(a * eu[:, 0] + eu[:, 1], eu[:, 0] + eu[:, 1])
    ns = np.hypot(a * es[:, 0] + es[:, 1], es[:, 0] + es[:, 1])
    margin = 4 * math.pi ** 2 * sys.delta * (0.5 / 64) * 4 + 1e-9
    return ExpansionBounds(float(nu.min() - margin), float(nu.max() + margin),
                           float(ns.max() + margin))


def unstable_direction(sys: SystemSpec, x, iterations: int = 60, tol: float = 1e-9) -> Splitting:
    """Unit unstable/stable directions at x by power iteration of the cocycle."""
    if not sys.is_anosov:
        raise InvalidSystem("splittings are computed for the cat-map families only")
    x = normalize(tuple(float(v) for v in as_point(x)))
    if not sys.delta:
        A = ((2, 1), (1, 1))
        Av = matvec(A, CAT_E_U)
        nv = math.hypot(*Av)
        res = math.hypot(Av[0] - nv * CAT_E_U[0], Av[1] - nv * CAT_E_U[1])
        return Splitting(x, CAT_E_U, CAT_E_S, res)
    X = np.array([x, apply(sys, x)], dtype=float)
    eu = _cocycle_array(sys, X, iterations, stable=False)
    es = _cocycle_array(sys, X[:1], iterations, stable=True)
    J = jacobian(sys, x)
    Jv = matvec(J, tuple(eu[0]))
    nv = math.hypot(*Jv)
    res = math.hypot(Jv[0] - nv * eu[1, 0], Jv[1] - nv * eu[1, 1])
    if res > tol:
        raise NonConvergence(f"splitting residual {res:.3e} exceeds {tol:.1e}")
    return Splitting(x, tuple(float(v) for v in eu[0]), tuple(float(v) for v in es[0]), float(res))


@lru_cache(maxsize=None)
def log_derivative_lipschitz(sys: SystemSpec, samples: int = 200_001) -> float:
    """Measured sup |d/dx log f'(x)| for a circle map (0 for linear maps)."""
    if sys.kind != "circle_expanding":
        raise InvalidSystem("defined for circle maps")
    if not sys.delta:
        return 0.0
    x = np.linspace(0.0, 1.0, samples)
    fp = sys.m + 2 * np.pi * sys.delta * np.cos(2 * np.pi * x)
    fpp = -4 * np.pi ** 2 * sys.delta * np.sin(2 * np.pi * x)
    val = np.abs(fpp / fp).max()
    # grid maximum plus the second-derivative slack over half a mesh
    slack = 8 * np.pi ** 3 * sys.delta / (sys.m - 2 * np.pi * sys.delta) ** 2 * (0.5 / (samples - 1)) * 4
    return float(val + slack)


# ---------------------------------------------------------------------------
# preimage components

@dataclass(frozen=True)
class RectangleSpec:
    """Open parallelogram {y + u e_u + s e_s : |u| < c/2, |s| < c/2}."""

    center: tuple
    c: object
    e_u: tuple
    e_s: tuple

    def coords(self, p) -> tuple:
        """(u, s) coordinates of the shortest displacement p - center."""
        d1, d2 = tdelta(p, self.center)
        return self.coords_of_vector((d1, d2))

    def coords_of_vector(self, v) -> tuple:
        (a, b), (cc, dd) = (self.e_u[0], self.e_s[0]), (self.e_u[1], self.e_s[1])
        det = a * dd - b * cc
        return ((dd * v[0] - b * v[1]) / det, (-cc * v[0] + a * v[1]) / det)

    def covectors(self) -> tuple:
        """Rows of the inverse basis matrix: u = <a, v>, s = <b, v>."""
        a, b = self.e_u[0], self.e_s[0]
        cc, dd = self.e_u[1], self.e_s[1]
        det = a * dd - b * cc
        return ((dd / det, -b / det), (-cc / det, a / det))

    def contains(self, p) -> bool:
        u, s = self.coords(p)
        return abs(u) < self.c / 2 and abs(s) < self.c / 2

    @property
    def sin_angle(self) -> float:
        return abs(float(self.e_u[0]) * float(self.e_s[1]) - float(self.e_u[1]) * float(self.e_s[0]))

    @property
    def inner_radius(self):
        """Radius of the largest ball around the center inside the rectangle."""
        return self.c / 2 * self.sin_angle

    def boundary(self, n: int) -> list:
        """n points per edge around the closed parallelogram."""
        h = self.c / 2
        corners = [(h, h), (-h, h), (-h, -h), (h, -h)]
        pts = []
        for i in range(4):
            (u0, s0), (u1, s1) = corners[i], corners[(i + 1) % 4]
            for t in range(n):
                f = t / n
                u, s = u0 + (u1 - u0) * f, s0 + (s1 - s0) * f
                pts.append((self.center[0] + u * self.e_u[0] + s * self.e_s[0],
                            self.center[1] + u * self.e_u[1] + s * self.e_s[1]))
        return pts

    def to_json(self) -> dict:
        return {"center": nm.encode(list(self.center)), "c": nm.encode(self.c),
                "e_u": nm.encode(list(self.e_u)), "e_s": nm.encode(list(self.e_s))}

    @classmethod
    def from_json(cls, obj) -> "RectangleSpec":
        return cls(nm.decode(obj["center"]), nm.decode(obj["c"]),
                   nm.decode(obj["e_u"]), nm.decode(obj["e_s"]))


def rectangle(sys: SystemSpec, y, c) -> RectangleSpec:
    """Rectangle hole at y with sides along the splitting at y."""
    sp = unstable_direction(sys, y)
    return RectangleSpec(normalize(y), c, sp.e_u, sp.e_s)


@dataclass(frozen=True)
class PreimageComponent:
    k: int
    branch_word: tuple
    enclosure: MetricBall
    diameter: object
    base_point: tuple
    interval: tuple | None = field(default=None, compare=False)

    def to_json(self) -> dict:
        return {"k": self.k, "branch_word": list(self.branch_word),
                "enclosure": self.enclosure.to_json(), "diameter": nm.encode(self.diameter),
                "base_point": nm.encode(list(self.base_point))}


def _window_hits_interval(window, lo, hi) -> bool:
    """Does the lifted interval [lo, hi] meet the window (ball or lifted interval)?"""
    if window is None:
        return True
    if isinstance(window, MetricBall):
        if hi - lo >= 1:
            return True
        mid = (lo + hi) / 2
        return abs(nm.wrap(window.center[0] - mid)) <= (hi - lo) / 2 + window.radius * (1 + 1e-12)
    wlo, whi = window
    if hi - lo >= 1 or whi - wlo >= 1:
        return True
    # compare on the circle: shift the window next to the interval
    shift = nm.floor(lo - wlo)
    for s in (shift - 1, shift, shift + 1):
        if wlo + s <= hi and lo <= whi + s:
            return True
    return False


def _components_circle(sys, hole, k, window, depth_cap):
    y, c = hole.center[0], hole.radius
    m = sys.m
    out = []

    def pull(word, t):
        for w in reversed(word):
            t = inverse_branch_1d(sys, t, w)
        return t

    def rec(word):
        j = len(word)
        if j == k:
            lo, hi = pull(word, y - c), pull(word, y + c)
            if _window_hits_interval(window, lo, hi):
                base = pull(word, y)
                mid = (lo + hi) / 2
                out.append(PreimageComponent(k, tuple(word), MetricBall((mid,), (hi - lo) / 2),
                                             hi - lo, normalize((base,)), (lo, hi)))
            return
        for w in range(m):
            cand = word + [w]
            lo, hi = pull(cand, -c), pull(cand, 1 + c)
            if _window_hits_interval(window, lo, hi):
                rec(cand)

    rec([])
    return out


def _components_conformal(sys, hole, k, window, depth_cap):
    y, c = hole.center, hole.radius
    reps = conformal_coset_reps(*sys.multiplier)
    a, b = sys.multiplier
    mu = math.sqrt(a * a + b * b)
    out = []

    def pull(word, v):
        for w in reversed(word):
            v = _conformal_inverse(sys, v, reps[w])
        return v

    def rec(word):
        j = len(word)
        if j == k:
            ctr = pull(word, y)
            r = c / mu ** k
            ball = MetricBall(ctr, r)
            if window is None or torus_distance(ball.center, window.center) <= r + window.radius:
                out.append(PreimageComponent(k, tuple(word), ball, 2 * r, normalize(ctr)))
            return
        for w in range(len(reps)):
            cand = word + [w]
            ctr = pull(cand, (0.5, 0.5))
            r = (math.sqrt(0.5) + c) / mu ** len(cand)
            if window is None or torus_distance(ctr, window.center) <= r + window.radius:
                rec(cand)

    rec([])
    return out


def _components_rectangle(sys, hole, k, window, n_boundary=33):
    """Enclose f^{-k}(hole) by pulling back a boundary discretization."""

    def enclose(n):
        pts = [hole.center] + hole.boundary(max(1, n // 4))
        img = []
        for p in pts:
            q = normalize(p)
            for _ in range(k):
                q = _perturbed_inverse_lifted(sys, q)
            img.append(q)
        base = img[0]
        disp = [tdelta(q, base) for q in img]
        xs = [d[0] for d in disp]
        ys = [d[1] for d in disp]
        ctr = ((max(xs) + min(xs)) / 2, (max(ys) + min(ys)) / 2)
        rad = max(math.hypot(float(d[0] - ctr[0]), float(d[1] - ctr[1])) for d in disp)
        return normalize((base[0] + ctr[0], base[1] + ctr[1])), rad, base

    n = n_boundary
    ctr, rad, base = enclose(n)
    for _ in range(6):
        ctr2, rad2, base = enclose(2 * n)
        n *= 2
        stable = abs(rad2 - rad) <= 0.01 * rad2
        ctr, rad = ctr2, rad2
        if stable:
            break
    if rad >= 0.25:
        raise HoleTooLarge(f"f^-{k} of the rectangle is no longer local (radius {rad:.3g})")
    ball = MetricBall(ctr, rad)
    if window is not None and torus_distance(ctr, window.center) > rad + window.radius:
        return []
    return [PreimageComponent(k, (), ball, 2 * rad, base)]


def preimage_components(sys: SystemSpec, hole, k: int, window=None,
                        depth_cap: int = DEFAULT_DEPTH_CAP) -> list:
    """Connected components of f^{-k}(hole) meeting ``window``.

    ``hole`` is a MetricBall for expanding maps and a RectangleSpec for the
    cat-map families.  ``window`` is a MetricBall, a lifted interval
    ``(lo, hi)`` (circle only), or None for the whole space.  Components are
    returned in lexicographic order of their branch words, where the first
    letter is the branch containing the component itself.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > depth_cap:
        raise DepthCapExceeded(f"k={k} exceeds the depth cap {depth_cap}")
    if isinstance(hole, RectangleSpec):
        if not sys.is_anosov:
            raise InvalidSystem("rectangle holes are for the cat-map families")
        if hole.c >= 0.1:
            raise HoleTooLarge("rectangle size must be below 0.1")
        return _components_rectangle(sys, hole, k, window)
    if not sys.is_expanding:
        raise InvalidSystem("ball holes are for expanding maps")
    if hole.radius >= 0.25:
        raise HoleTooLarge("hole diameter must be below 1/2")
    if sys.kind == "circle_expanding":
        return _components_circle(sys, hole, k, window, depth_cap)
    return _components_conformal(sys, hole, k, window, depth_cap)


# ---------------------------------------------------------------------------
# distortion, Bowen balls, holonomy

def unstable_norm(sys: SystemSpec, x, k: int) -> float:
    """||Df^k(x)|_{E^u}||, accumulated one step at a time."""
    x = normalize(tuple(float(v) for v in as_point(x)))
    if sys.kind == "circle_expanding":
        p = 1.0
        for _ in range(k):
            p *= float(lift_derivative(sys, x[0]))
            x = apply(sys, x)
        return p
    if sys.kind == "torus_conformal":
        a, b = sys.multiplier
        return math.sqrt(a * a + b * b) ** k
    if not sys.delta:
        return CAT_UNSTABLE ** k
    v = unstable_direction(sys, x).e_u
    p = 1.0
    for _ in range(k):
        w = matvec(jacobian(sys, x), v)
        n = math.hypot(*w)
        p *= n
        v = (w[0] / n, w[1] / n)
        x = apply(sys, x)
    return p


def distortion_ratio(sys: SystemSpec, z1, z2, k: int) -> float:
    if normalize(z1) == normalize(z2) or k == 0:
        return 1.0
    return unstable_norm(sys, z1, k) / unstable_norm(sys, z2, k)


def bowen_ball_contains(sys: SystemSpec, z, k: int, c, w) -> bool:
    z, w = normalize(z), normalize(w)
    for _ in range(k):
        if torus_distance(z, w) > c:
            return False
        z, w = apply(sys, z), apply(sys, w)
    return True


def holonomy_project(sys: SystemSpec, w, z, locality: float, directions=None) -> tuple:
    """Slide w along its local stable leaf onto the local unstable leaf of z.

    For the cat map the leaves are straight lines and the decomposition is
    exact.  For the perturbed map the leaves are approximated by chords whose
    directions are evaluated at midpoints (second-order accurate).
    ``directions`` optionally fixes (e_u, e_s) and skips the refinement.
    """
    if not sys.is_anosov:
        raise InvalidSystem("holonomy is defined for the cat-map families")
    if locality > 0.05:
        raise LocalityExceeded("locality must be at most 0.05")
    dist = torus_distance(w, z)
    if dist > locality:
        raise LocalityExceeded(f"distance {float(dist):.3g} exceeds locality {locality}")
    d = tdelta(w, z)

    def solve(eu, es):
        det = eu[0] * es[1] - eu[1] * es[0]
        t = (d[0] * es[1] - d[1] * es[0]) / det
        return t

    if directions is not None or not sys.delta:
        eu, es = directions if directions is not None else (CAT_E_U, CAT_E_S)
        t = solve(eu, es)
        return normalize((z[0] + t * eu[0], z[1] + t * eu[1]))
    zf = tuple(float(v) for v in normalize(z))
    wf = tuple(float(v) for v in normalize(w))
    spz = unstable_direction(sys, zf)
    spw = unstable_direction(sys, wf)
    eu, es = spz.e_u, spw.e_s
    t = solve(eu, es)
    for _ in range(3):
        p = normalize((zf[0] + t * eu[0], zf[1] + t * eu[1]))
        mid_u = normalize((zf[0] + 0.5 * t * eu[0], zf[1] + 0.5 * t * eu[1]))
        dp = tdelta(wf, p)
        mid_s = normalize((p[0] + 0.5 * dp[0], p[1] + 0.5 * dp[1]))
        eu = unstable_direction(sys, mid_u).e_u
        es = unstable_direction(sys, mid_s).e_s
        t = solve(eu, es)
    return normalize((z[0] + t * eu[0], z[1] + t * eu[1]))


def holonomy_project_array(sys: SystemSpec, W: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Float, row-wise version of ``holonomy_project`` for the perturbed map."""
    W, Z = np.asarray(W, dtype=float) % 1.0, np.asarray(Z, dtype=float) % 1.0
    D = W - Z
    D -= np.round(D)

    def solve(eu, es):
        det = eu[:, 0] * es[:, 1] - eu[:, 1] * es[:, 0]
        return (D[:, 0] * es[:, 1] - D[:, 1] * es[:, 0]) / det

    eu = _cocycle_array(sys, Z, 60, stable=False)
    es = _cocycle_array(sys, W, 60, stable=True)
    t = solve(eu, es)
    for _ in range(3):
        P = Z + t[:, None] * eu
        mid_u = Z + 0.5 * t[:, None] * eu
        dp = W - P
        dp -= np.round(dp)
        mid_s = P + 0.5 * dp
        eu = _cocycle_array(sys, mid_u % 1.0, 60, stable=False)
        es = _cocycle_array(sys, mid_s % 1.0, 60, stable=True)
        t = solve(eu, es)
    return (Z + t[:, None] * eu) % 1.0


# ---------------------------------------------------------------------------
# lifted orbit tracking for circle maps

class CircleOrbit:
    """Forward orbit of a base point with exact tracking of nearby offsets.

    ``offset_image(s, k)`` returns the lifted displacement F^k(b + s) - F^k(b)
    computed through the cancellation-free recursion
    s' = m s + 2 delta cos(2 pi b + pi s) sin(pi s), so tiny offsets keep full
    relative precision at any depth.
    """

    def __init__(self, sys: SystemSpec, x0):
        if sys.kind != "circle_expanding":
            raise InvalidSystem("CircleOrbit needs a circle map")
        self.sys = sys
        self.points = [nm.frac(x0)]

    def point(self, k: int):
        while len(self.points) <= k:
            self.points.append(nm.frac(lift_map(self.sys, self.points[-1])))
        return self.points[k]

    def offset_image(self, s, k: int):
        """(s_k, ds_k/ds)."""
        sys = self.sys
        if not sys.delta:
            f = sys.m ** k
            return s * f, f
        self.point(k)
        m, d = sys.m, sys.delta
        pi = nm.pi_like(s)
        deriv = 1
        for i in range(k):
            b = self.points[i]
            deriv = deriv * (m + 2 * pi * d * nm.cos2pi(b + s))
            s = m * s + 2 * d * nm.cospi(2 * b + s) * nm.sinpi(s)
        return s, deriv

    def derivative(self, k: int):
        return self.offset_image(0 * self.points[0], k)[1]

    def solve_offset(self, target, k: int, guess=None):
        """Offset s with F^k(b + s) - F^k(b) = target (F^k is increasing)."""
        sys = self.sys
        if not sys.delta:
            return target / sys.m ** k
        s = guess if guess is not None else target / self.derivative(k)
        tol = _newton_tol(target if nm.is_mp(target) else s)
        for _ in range(60):
            val, der = self.offset_image(s, k)
            step = (val - target) / der
            s = s - step
            if abs(step) <= tol * max(abs(s), tol):
                return s
        raise NonConvergence("offset Newton iteration did not converge")
