"""Bob policies and generic (strategy-free) Alice players for every game kind.

Policies:

* ``random``: a uniformly sampled legal move.
* ``concentric``: the maximal concentric choice.
* ``hole_seeking``: aim the new center at the nearest preimage of the target
  point y that is still reachable (and, in the potential game, not removed).

Every random draw comes from a generator seeded by (seed, role), so a game is
reproducible from its seed alone.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .. import _numeric as nm
from ..dynamics import SystemSpec, expansion_bounds
from ..geometry import MetricBall, ball_intersects_ball, delta as tdelta, normalize
from .components import BallPreimageTracker, EnumerationTooWide

POLICIES = ("random", "concentric", "hole_seeking")
ALICE_GENERIC = ("concentric", "random", "empty")
HOLE_SEEK_K = 400


def _rng(seed: int, role: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), 0 if role == "bob" else 1])


def _unit_vector(rng, n: int):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def _offset_point(center, direction, length):
    return normalize(tuple(c + nm.mp(float(d)) * length if nm.is_mp(length) else c + float(d) * length
                           for c, d in zip(center, direction)))


def _random_in_disc(rng, center, reach):
    n = len(center)
    u = rng.random() ** (1 / n)
    return _offset_point(center, _unit_vector(rng, n) * u, reach)


def _clamp_towards(center, target, reach):
    """Point of the closed ball B(center, reach) closest to target."""
    d = tdelta(target, center)
    dist = nm.sqrt(sum(v * v for v in d))
    if dist <= reach:
        return normalize(target)
    s = reach / dist
    return normalize(tuple(c + v * s for c, v in zip(center, d)))


# ---------------------------------------------------------------------------
# hole seeking

def _nearest_preimage(params: dict, center, reach, exclude=()):
    """Nearest point of some f^{-k}(y), smallest k first, within ``reach`` of center."""
    if "system" not in params or "y" not in params:
        return None
    sys = SystemSpec.from_config(params["system"])
    y = normalize(tuple(nm.mp(v) for v in params["y"]))
    if sys.is_expanding:
        if sys.kind == "circle_expanding":
            return _circle_preimage(sys, center, reach, y, exclude)
        c = nm.mp(params.get("c", float(reach) * 1e-6))
        tracker = BallPreimageTracker(sys, center, reach, y, c)
        for k in range(HOLE_SEEK_K):
            try:
                comps = tracker.at(k)
            except EnumerationTooWide:
                return None
            live = [cp for cp in comps if not any(b.contains_point(cp.center) for b in exclude)]
            if live:
                return min(live, key=lambda cp: sum(v * v for v in tdelta(cp.center, center))).center
        return None
    return None


def _circle_preimage(sys: SystemSpec, center, reach, y, exclude):
    """Smallest-k preimage of y within reach of center that no removal contains."""
    tracker = BallPreimageTracker(sys, center, reach, y, 0 * reach)
    orb = tracker.orbit
    for k in range(HOLE_SEEK_K):
        s_lo, s_hi, der = tracker.window_image(k)
        if s_hi - s_lo >= 1:
            return None
        t = y[0] - orb.point(k)
        n0 = int(nm.floor(s_lo - t)) + 1
        n1 = int(nm.floor(s_hi - t))
        best = None
        for n in range(n0, n1 + 1):
            o = orb.solve_offset(t + n, k, (t + n) / der)
            p = normalize((center[0] + o,))
            if any(b.contains_point(p) for b in exclude):
                continue
            if best is None or abs(o) < best[0]:
                best = (abs(o), p)
        if best is not None:
            return best[1]
    return None


def _atom_on_preimage(tiling, params: dict, level: int, rng):
    """Level-``level`` atom containing a random f^{-k}(y) with k inside the first step."""
    from ..dynamics import inverse_branch_1d

    from ..tilings import BoundaryAmbiguity

    sys = tiling.sys
    sigma2 = expansion_bounds(sys).sigma2
    horizon = int(params["r"]) * (int(params["a"]) + int(params["b"]))
    for _ in range(20):
        k = int(rng.integers(horizon // 4, horizon))
        z = nm.mp(params["y"][0])
        for _ in range(k):
            z = inverse_branch_1d(sys, z, int(rng.integers(0, sys.m)))
        # dyadic preimages can sit on atom boundaries; shift within the component
        z = nm.frac(z + nm.mp(params["c"]) / (2 * nm.mp(sigma2) ** k))
        try:
            return tiling.atom_containing((z,), level)
        except BoundaryAmbiguity:
            continue
    raise RuntimeError("no preimage away from atom boundaries")


# ---------------------------------------------------------------------------
# Bob

@lru_cache(maxsize=16)
def _backward_orbit(sys: SystemSpec, y: tuple, n: int, bits: int) -> tuple:
    """(y, f^{-1} y, ..., f^{-(n-1)} y) in the current precision (cached; mpfr is immutable)."""
    from ..dynamics import inverse

    z = normalize(tuple(nm.mp(v) for v in y))
    pts = [z]
    for _ in range(n - 1):
        z = inverse(sys, z)
        pts.append(z)
    return tuple(pts)


class BackwardOrbitSeeker:
    """Hole seeking on the torus through the backward orbit of y.

    The cat-map families are invertible, so every preimage piece f^{-k}(hole)
    contains exactly one point z_k = f^{-k}(y).  The seeker opens on z_k for
    a k whose piece width falls inside a later strategy window (when the game
    parameters carry the hole size), and afterwards moves toward the nearest
    z_k it can still reach.
    """

    def __init__(self, params: dict, rng, n_points: int = 800):
        self.sys = SystemSpec.from_config(params["system"])
        self.params = params
        self.points = _backward_orbit(self.sys, tuple(float(v) for v in params["y"]), n_points,
                                      nm.precision_bits())
        self.rng = rng
        self._float = None

    def opening_index(self) -> int | None:
        p = self.params
        if "c" not in p or "r" not in p:
            return None
        q = p["alpha"] * p["beta"]
        r = int(p["r"])
        j = 2 + int(self.rng.integers(0, 3))
        # log of the geometric middle of the step-j window
        lw = math.log(p["alpha"] * p["rho1"]) + ((j + 1.5) * r - 1) * math.log(q)
        lam = math.log(expansion_rate(self.sys))
        k = int(round((math.log(p["c"]) - lw) / lam))
        return k if 0 <= k < len(self.points) else None

    def nearest(self, center, reach):
        """Nearest precomputed point; float prefilter, exact comparison among close ties."""
        if self._float is None:
            # periodic targets repeat; keep each distinct point once (smallest k first)
            seen = {}
            for z in self.points:
                seen.setdefault(z, z)
            self._unique = list(seen.values())
            self._float = np.array([[float(v) for v in z] for z in self._unique])
        d = self._float - np.array([float(v) for v in center])
        d -= np.round(d)
        d2 = (d * d).sum(axis=1)
        cand = np.flatnonzero(d2 <= (math.sqrt(d2.min()) + 1e-12) ** 2)
        best = None
        for i in cand:
            z = self._unique[int(i)]
            e = tdelta(z, center)
            n2 = e[0] * e[0] + e[1] * e[1]
            if best is None or n2 < best[0]:
                best = (n2, z)
        return best[1]


def expansion_rate(sys: SystemSpec) -> float:
    from ..dynamics import expansion_bounds

    eb = expansion_bounds(sys)
    return math.sqrt(eb.sigma1 * eb.sigma2)


class BobPolicy:
    def __init__(self, policy: str, seed: int, params: dict):
        if policy not in POLICIES:
            raise ValueError(f"unknown Bob policy {policy!r}")
        self.policy = policy
        self.params = params
        self.rng = _rng(seed, "bob")
        self._seeker = None
        # potential games: even seeds skip preimages Alice already removed,
        # odd seeds chase the nearest preimage regardless
        self.dodge_removals = seed % 2 == 0

    def _torus_seeker(self):
        if self._seeker is None:
            self._seeker = BackwardOrbitSeeker(self.params, self.rng)
        return self._seeker

    def __call__(self, state):
        if not state.bob:
            return self.opening(state)
        return getattr(self, "_" + state.kind)(state)

    # -- opening -----------------------------------------------------------
    def opening(self, state):
        p = self.params
        if state.kind == "modified":
            tiling = state.tiling
            n1 = int(p.get("n1", 1))
            if self.policy == "hole_seeking" and "y" in p and "r" in p and p.get("opening_word") is None:
                return _atom_on_preimage(tiling, p, n1, self.rng)
            word = p.get("opening_word")
            if word is None:
                word = [int(v) for v in self.rng.integers(0, tiling.sys.m, size=n1 - 1)]
            cell = p.get("opening_cell")
            if cell is None:
                cell = int(self.rng.integers(0, len(tiling.cells)))
            return tiling.atom(word, cell, mp=True)
        dim = int(p.get("dim", 1))
        x0 = p.get("x0")
        rho1 = nm.mp(p.get("rho1", 0.01))
        if x0 is None and self.policy == "hole_seeking" and state.kind == "schmidt" and "y" in p:
            seeker = self._torus_seeker()
            k = seeker.opening_index()
            if k is not None:
                return MetricBall(seeker.points[k], rho1)
        if x0 is None:
            x0 = [float(v) for v in self.rng.random(dim)]
        return MetricBall(tuple(nm.mp(v) for v in x0), rho1)

    # -- per game ----------------------------------------------------------
    def _schmidt(self, state):
        prev = state.alice[-1]
        r = state.beta * prev.radius
        reach = prev.radius - r
        if self.policy == "concentric":
            return MetricBall(prev.center, r)
        if self.policy == "random":
            return MetricBall(_random_in_disc(self.rng, prev.center, reach), r)
        if "y" not in self.params or "system" not in self.params:
            return MetricBall(prev.center, r)
        target = self._torus_seeker().nearest(prev.center, reach)
        return MetricBall(_clamp_towards(prev.center, target, reach), r)

    def _potential(self, state):
        prev = state.bob[-1]
        rho = prev.radius
        if self.policy == "concentric":
            return MetricBall(prev.center, rho * state.beta)
        if self.policy == "random":
            f = nm.mp(float(self.rng.uniform(float(state.beta), (1 + float(state.beta)) / 2)))
            r = max(rho * f, rho * state.beta)
            return MetricBall(_random_in_disc(self.rng, prev.center, rho - r), r)
        r = rho * state.beta
        reach = rho - r
        exclude = tuple(state.all_removals()) if self.dodge_removals else ()
        target = _nearest_preimage(self.params, prev.center, reach, exclude)
        if target is None:
            return MetricBall(prev.center, r)
        return MetricBall(_clamp_towards(prev.center, target, reach), r)

    def _absolute(self, state):
        prev = state.bob[-1]
        rho = prev.radius
        rem = state.removals[-1]
        r = rho * state.beta
        reach = rho - r
        if rem is None:
            if self.policy == "concentric":
                return MetricBall(prev.center, r)
            if self.policy == "random":
                return MetricBall(_random_in_disc(self.rng, prev.center, reach), r)
            target = _nearest_preimage(self.params, prev.center, reach)
            if target is None:
                return MetricBall(prev.center, r)
            return MetricBall(_clamp_towards(prev.center, target, reach), r)
        if self.policy != "concentric":
            for _ in range(64):
                if self.policy == "random":
                    ctr = _random_in_disc(self.rng, prev.center, reach)
                else:
                    target = _nearest_preimage(self.params, prev.center, reach)
                    if target is None:
                        break
                    ctr = _clamp_towards(prev.center, target, reach)
                mv = MetricBall(ctr, r)
                if not ball_intersects_ball(rem, mv):
                    return mv
                if self.policy != "random":
                    break
        mv = MetricBall(prev.center, r)
        if not ball_intersects_ball(rem, mv):
            return mv
        # far side of the ball from the removal
        d = tdelta(prev.center, rem.center)
        dist = nm.sqrt(sum(v * v for v in d))
        if dist == 0:
            d = tuple(1 if i == 0 else 0 for i in range(len(d)))
            dist = 1
        return MetricBall(normalize(tuple(c + v / dist * reach for c, v in zip(prev.center, d))), r)

    def _modified(self, state):
        prev = state.alice[-1]
        kids = state.tiling.descendants(prev, state.b, mp=True)
        if self.policy == "random":
            return kids[int(self.rng.integers(0, len(kids)))]
        if self.policy == "concentric":
            ctr = prev.center
            for kid in kids:
                if kid.contains_point(ctr):
                    return kid
            return max(kids, key=lambda a: a.diameter)
        enc = prev.enclosure
        target = _nearest_preimage(self.params, (nm.frac(enc.center[0]),), enc.radius)
        if target is None:
            return kids[0]
        return min(kids, key=lambda a: abs(nm.wrap(a.center - target[0])))


# ---------------------------------------------------------------------------
# generic Alice

class GenericAlice:
    """Strategy-free Alice used for rule tests and baselines."""

    def __init__(self, policy: str, seed: int, params: dict):
        if policy not in ALICE_GENERIC:
            raise ValueError(f"unknown Alice policy {policy!r}")
        self.policy = policy
        self.params = params
        self.rng = _rng(seed, "alice")

    def __call__(self, state):
        bob = state.bob[-1]
        if state.kind == "schmidt":
            r = state.alpha * bob.radius
            if self.policy == "random":
                return MetricBall(_random_in_disc(self.rng, bob.center, bob.radius - r), r)
            return MetricBall(bob.center, r)
        if state.kind == "absolute":
            if self.policy != "random":
                return None
            r = state.beta * bob.radius * nm.mp(float(self.rng.random()))
            if r <= 0:
                return None
            return MetricBall(_random_in_disc(self.rng, bob.center, bob.radius), r)
        if state.kind == "potential":
            if self.policy != "random":
                return []
            n = int(self.rng.integers(0, 4))
            budget = (state.beta * bob.radius) ** state.gamma
            fam = []
            for _ in range(n):
                share = nm.mp(float(self.rng.random())) / n
                r = (budget * share) ** (1 / state.gamma)
                if r > 0:
                    fam.append(MetricBall(_random_in_disc(self.rng, bob.center, bob.radius), r))
            return fam
        kids = state.tiling.descendants(bob, state.a, mp=True)
        if self.policy == "random":
            return kids[int(self.rng.integers(0, len(kids)))]
        for kid in kids:
            if kid.contains_point(bob.center):
                return kid
        return kids[0]


def make_player(spec, role: str, seed: int, params: dict):
    """A callable player from a policy name, or ``spec`` itself if already callable."""
    if callable(spec):
        return spec
    if role == "bob":
        return BobPolicy(spec, seed, params)
    return GenericAlice(spec, seed, params)


def random_illegal_move(state, rng: np.random.Generator):
    """A move that breaks exactly one rule, with the error class it must raise."""
    from .. import games as g

    kind = state.kind
    who = state.whose_turn
    if kind == "modified":
        prev = state.bob[-1] if who == "alice" else state.alice[-1]
        gen = state.a if who == "alice" else state.b
        tiling = state.tiling
        choice = rng.integers(0, 2)
        if choice == 0:
            kids = tiling.descendants(prev, gen + 1, mp=True)
            return kids[int(rng.integers(0, len(kids)))], g.WrongLevel
        # a correct-level atom outside prev
        for _ in range(100):
            word = list(prev.word) + [int(v) for v in rng.integers(0, tiling.sys.m, size=gen)]
            word[0] = (word[0] + 1) % tiling.sys.m if prev.word else word[0]
            cand = tiling.atom(word, int(rng.integers(0, len(tiling.cells))), mp=True)
            from ..tilings import intervals_disjoint
            if intervals_disjoint(cand.interval, prev.interval):
                return cand, g.NotNested
        kids = tiling.descendants(prev, gen + 1, mp=True)
        return kids[0], g.WrongLevel
    bob = state.bob[-1]
    if kind == "schmidt":
        prev = bob if who == "alice" else state.alice[-1]
        factor = state.alpha if who == "alice" else state.beta
        r = factor * prev.radius
        if rng.integers(0, 2) == 0:
            return MetricBall(prev.center, r * nm.mp(1.5)), g.IllegalRadius
        return MetricBall(_offset_point(prev.center, _unit_vector(rng, len(prev.center)), prev.radius), r), \
            g.NotContained
    if kind == "potential":
        if who == "alice":
            big = state.beta * bob.radius * nm.mp(1.01)
            return [MetricBall(bob.center, big)], g.BudgetExceeded
        if rng.integers(0, 2) == 0:
            return MetricBall(bob.center, bob.radius * state.beta * nm.mp(0.5)), g.BobShrankTooFast
        r = bob.radius * state.beta
        return MetricBall(_offset_point(bob.center, _unit_vector(rng, len(bob.center)), bob.radius), r), \
            g.NotContained
    # absolute
    if who == "alice":
        return MetricBall(bob.center, state.beta * bob.radius * nm.mp(1.5)), g.RemovalTooLarge
    rem = state.removals[-1]
    if rem is not None and rng.integers(0, 2) == 0:
        # legal radius and containment; the removal center is within rho, so the
        # clamped center stays within the new radius of it
        r = bob.radius * state.beta
        return MetricBall(_clamp_towards(bob.center, rem.center, bob.radius - r), r), \
            g.BobInsideRemoval
    if rng.integers(0, 2) == 0:
        return MetricBall(bob.center, bob.radius * state.beta * nm.mp(0.5)), g.BobShrankTooFast
    r = bob.radius * state.beta
    return MetricBall(_offset_point(bob.center, _unit_vector(rng, len(bob.center)), bob.radius), r), \
        g.NotContained
