"""Alice's strategy in the modified Schmidt game on a circle tiling.

Bob opens with an atom of level n1; Alice answers with descendants a levels
down and Bob with descendants b levels down.  Play is grouped in steps of r
Alice turns.  At the start of step j Alice lists every component I_k(c) of
f^{-k}(B(y, c)) with jr(a+b) <= k < (j+1)r(a+b) that meets Bob's atom.  Each
turn she plays the level-(n+a) descendant that misses the most of the
components still meeting Bob's atom; since components are far smaller than
the descendants, each one touches at most two of them, so a fraction eta of
the live ones is always avoided.  With (1-eta)^r (a+b) r < 1 no tracked
component survives the r turns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .. import _numeric as nm
from ..dynamics import SystemSpec, expansion_bounds
from ..geometry import normalize
from ..tilings import TilingFamily, intervals_disjoint
from .base import Infeasible, StrategyContext, to_jsonable
from .components import BallPreimageTracker

ETA = 0.1
L_SCALE = 0.125


class NoQualifyingAtom(RuntimeError):
    """No descendant avoids the required fraction of tracked components."""


@dataclass
class ModifiedConstants:
    a: int
    b: int
    a_star: int
    eta: float
    r: int
    L: float
    c: float
    n1: int
    epsilon: float
    sigma1: float
    sigma2: float

    def check(self) -> list:
        """Re-verify the defining inequalities; returns the violated ones."""
        bad = []
        ab = self.a + self.b
        if not self.a > math.log(13) / math.log(self.sigma1):
            bad.append("a > log 13 / log sigma1")
        if not (self.a > self.a_star and self.b > self.a_star):
            bad.append("a, b > a_*")
        if not 0 < self.eta < 0.25:
            bad.append("0 < eta < 1/4")
        if not (1 - self.eta) ** self.r * ab * self.r < 1:
            bad.append("(1 - eta)^r (a+b) r < 1")
        if self.r > 1 and (1 - self.eta) ** (self.r - 1) * ab * (self.r - 1) < 1:
            bad.append("r not minimal")
        if not 2 * self.epsilon / self.sigma1 ** (self.n1 - ab * self.r) <= self.L / 100:
            bad.append("2 eps / sigma1^(n1 - (a+b) r) <= L/100")
        bound = math.log(self.epsilon / 2) - (self.n1 + ab * self.r + self.a) * math.log(self.sigma2)
        if not math.log(self.c) <= bound + 1e-12:
            bad.append("c <= eps / (2 sigma2^(n1 + (a+b) r + a))")
        return bad

    def to_json(self) -> dict:
        return to_jsonable(self)


def minimal_a(sigma1: float, a_star: int) -> int:
    """Smallest integer a > max(a_*, log 13 / log sigma1)."""
    return max(a_star + 1, math.floor(math.log(13) / math.log(sigma1)) + 1)


def minimal_r_modified(eta: float, ab: int, r_max: int = 100_000) -> int:
    for r in range(1, r_max):
        if (1 - eta) ** r * ab * r < 1:
            return r
    raise Infeasible("no r with (1-eta)^r (a+b) r < 1")


def derive_modified_constants(sys: SystemSpec, b: int | None, tiling: TilingFamily, y=(0.0,),
                              eta: float = ETA, L: float = L_SCALE,
                              a: int | None = None) -> ModifiedConstants:
    if tiling.a_star is None:
        raise Infeasible("the tiling must be certified (a_* unknown)")
    a_star = tiling.a_star
    b = a_star + 1 if b is None else int(b)
    if b <= a_star:
        raise Infeasible(f"b={b} must exceed a_*={a_star}")
    eb = expansion_bounds(sys)
    a_min = minimal_a(eb.sigma1, a_star)
    a = a_min if a is None else int(a)
    if a < a_min:
        raise Infeasible(f"a={a} must be at least {a_min}")
    ab = a + b
    r = minimal_r_modified(eta, ab)
    eps = tiling.epsilon
    n1 = ab * r
    while 2 * eps / eb.sigma1 ** (n1 - ab * r) > L / 100:
        n1 += 1
    # c as a power of two at or below the bound, stored as a float
    log2c = math.log2(eps / 2) - (n1 + ab * r + a) * math.log2(eb.sigma2)
    c = 2.0 ** math.floor(log2c)
    return ModifiedConstants(a, b, a_star, eta, r, L, c, n1, eps, eb.sigma1, eb.sigma2)


def modified_precision(const: ModifiedConstants, depth: int) -> int:
    """Bits for the deepest atom and the deepest tracked component."""
    ab = const.a + const.b
    H = (depth // const.r + 1) * const.r * ab
    return int(-math.log2(const.c) + (const.n1 + H) * math.log2(const.sigma2) + 256)


def _component_interval(x0, comp) -> tuple:
    lo, hi = comp.offsets
    return (x0 + lo, x0 + hi)


def step_components(sys: SystemSpec, atom, y, c, k_lo: int, k_hi: int) -> tuple:
    """Components I_k(c), k_lo <= k < k_hi, meeting the atom, as lifted intervals."""
    enc = atom.enclosure
    tracker = BallPreimageTracker(sys, enc.center, enc.radius, y, c)
    x0 = tracker.x[0]
    comps, counts = [], {}
    for k in range(k_lo, k_hi):
        for comp in tracker.at(k):
            iv = _component_interval(x0, comp)
            if intervals_disjoint(iv, atom.interval):
                continue
            comps.append((k, iv))
            counts[k] = counts.get(k, 0) + 1
    return comps, counts


def alice_modified_next(ctx: StrategyContext, state):
    const: ModifiedConstants = ctx.constants
    ex = ctx.extra
    bob = state.bob[-1]
    i = len(state.alice)
    r, ab = const.r, const.a + const.b
    j, t = divmod(i, r)
    if t == 0:
        comps, counts = step_components(ctx.sys, bob, ctx.y, ex["c"], j * r * ab, (j + 1) * r * ab)
        ctx.tracked = comps
        ctx.step = j
        size_cap = const.epsilon / (2 * const.sigma2 ** (bob.level + const.a))
        ctx.log.append({
            "step": j, "level": bob.level, "tracked": len(comps), "n_k": len(counts),
            "max_per_k": max(counts.values(), default=0),
            "uniqueness_ok": all(v <= 1 for v in counts.values()),
            "count_ok": len(comps) <= r * ab,
            "size_ok": all(iv[1] - iv[0] < size_cap for _, iv in comps),
            "avoided": [],
        })
    live = [cp for cp in ctx.tracked if not intervals_disjoint(cp[1], bob.interval)]
    kids = state.tiling.descendants(bob, const.a, mp=True)
    best, best_hits = None, None
    for kid in kids:
        hits = [cp for cp in live if not intervals_disjoint(cp[1], kid.interval)]
        if best_hits is None or len(hits) < len(best_hits):
            best, best_hits = kid, hits
    avoided = len(live) - len(best_hits)
    if avoided < math.ceil(const.eta * len(live)):
        raise NoQualifyingAtom(f"avoided {avoided} of {len(live)} tracked components")
    ctx.tracked = best_hits
    entry = ctx.log[-1]
    entry["avoided"].append(avoided)
    if t == r - 1:
        entry["claim_ok"] = not best_hits
    return best


class ModifiedAlice:
    """Callable wrapper holding the strategy context for one game."""

    def __init__(self, sys: SystemSpec, constants: ModifiedConstants, y):
        self.ctx = StrategyContext(sys, normalize(y), constants)

    def bind(self, state):
        self.ctx.extra["c"] = nm.mp(self.ctx.constants.c)

    def __call__(self, state):
        return alice_modified_next(self.ctx, state)

    def finish(self, transcript):
        transcript.meta["strategy_log"] = self.ctx.log
        transcript.meta["constants"] = self.ctx.constants.to_json()


def modified_params(sys: SystemSpec, const: ModifiedConstants, tiling: TilingFamily, y) -> dict:
    from ..games import tiling_params

    return {"a": const.a, "b": const.b, "r": const.r, "c": const.c, "n1": const.n1,
            "y": list(normalize(y)), "system": sys.to_config(), "tiling": tiling_params(tiling)}
