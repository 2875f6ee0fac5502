"""Alice's strategy in the zero-dimensional potential game for expanding maps.

Alice plays in steps of r turns.  At the first turn of step j >= 1 (Bob's
ball B_{jr+1} of radius rho) she removes, for every preimage component
I_k(c) of the hole B(y, c) that meets B_{jr+1} and has diameter in
[rho beta^{2r}, rho beta^r), the ball of radius diam(I_k) around it.  All
other turns are empty moves.  With r chosen so that N beta^{(r-1) gamma} <= 1
the removals respect the budget, and consecutive windows overlap because Bob
cannot shrink faster than beta per turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .. import _numeric as nm
from ..dynamics import SystemSpec, expansion_bounds
from ..geometry import MAX_GAME_RADIUS, normalize
from .base import ComponentDepthExhausted, Infeasible, StrategyContext, n_count, to_jsonable
from .components import BallPreimageTracker

K_TARGET = 1.1
HARD_K_CAP = 100_000


@dataclass
class PotentialConstants:
    beta: float
    gamma: float
    r: int
    N: int
    c_prime: float
    K: float
    c: float
    rho1: float
    sigma1: float
    sigma2: float

    def check(self) -> list:
        """Re-verify the defining inequalities; returns the violated ones."""
        bad = []
        if self.N != n_count(self.beta, self.r, self.sigma1):
            bad.append("N formula")
        if not self.N * self.beta ** ((self.r - 1) * self.gamma) <= 1 + 1e-12:
            bad.append("budget inequality N beta^((r-1) gamma) <= 1")
        if self.r > 1 and n_count(self.beta, self.r - 1, self.sigma1) * \
                self.beta ** ((self.r - 2) * self.gamma) <= 1 + 1e-12:
            bad.append("r not minimal")
        if not self.c <= self.c_prime * self.beta ** (2 * self.r) / (100 * self.K):
            bad.append("c <= c' beta^(2r) / (100 K)")
        if not self.c < self.rho1 * self.beta ** (2 * self.r):
            bad.append("c < rho1 beta^(2r)")
        if not 1 <= self.K <= 2:
            bad.append("1 <= K <= 2")
        if not self.rho1 <= self.c_prime / 100:
            bad.append("rho1 <= c'/100")
        return bad

    def to_json(self) -> dict:
        return to_jsonable(self)


def minimal_r(beta: float, gamma: float, sigma1: float, r_max: int = 100_000) -> tuple:
    """Smallest r with N(r) beta^((r-1) gamma) <= 1."""
    for r in range(1, r_max):
        N = n_count(beta, r, sigma1)
        if N * beta ** ((r - 1) * gamma) <= 1 + 1e-12:
            return r, N
    raise Infeasible("no r satisfies the budget inequality")


def hole_scale(sys: SystemSpec, k_target: float = K_TARGET, seed: int = 0) -> tuple:
    """Largest dyadic c' below the injectivity scale with measured K(c') <= k_target."""
    from ..verification import empirical_distortion

    eb = expansion_bounds(sys)
    inj = 1 / (2 * eb.sigma2)  # f is injective on balls of this radius
    cp = min(MAX_GAME_RADIUS, 2.0 ** (math.ceil(math.log2(inj)) - 1))
    if sys.delta == 0:
        return cp, 1.0
    for _ in range(60):
        K = empirical_distortion(sys, cp, 20, 2000, seed)
        if K <= k_target:
            return cp, K
        cp /= 2
    raise Infeasible("no hole scale with small distortion found")


def derive_potential_constants(sys: SystemSpec, beta: float, gamma: float, rho1: float | None,
                               y, seed: int = 0) -> PotentialConstants:
    if not sys.is_expanding:
        raise Infeasible("potential-game strategy needs an expanding map")
    if not (0 < beta < 1 and gamma > 0):
        raise Infeasible("need 0 < beta < 1 and gamma > 0")
    eb = expansion_bounds(sys)
    r, N = minimal_r(beta, gamma, eb.sigma1)
    cp, K = hole_scale(sys, seed=seed)
    if rho1 is None:
        rho1 = min(1e-3, cp / 100)
    if rho1 > cp / 100:
        raise Infeasible(f"rho1={rho1} exceeds c'/100={cp / 100}")
    c = 0.5 * min(cp * beta ** (2 * r) / (100 * K), rho1 * beta ** (2 * r))
    return PotentialConstants(float(beta), float(gamma), r, N, float(cp), float(K), float(c),
                              float(rho1), eb.sigma1, eb.sigma2)


def step_components(sys: SystemSpec, ball, y, c, lo, hi, cap: int = HARD_K_CAP) -> tuple:
    """Components meeting ``ball`` with lo <= diam < hi; also per-k counts."""
    tracker = BallPreimageTracker(sys, ball.center, ball.radius, y, c)
    found, counts = [], {}
    k = 0
    while True:
        dmin, dmax = tracker.diameter_bounds(k)
        if dmax < lo:
            break
        if k > cap:
            raise ComponentDepthExhausted(f"window needs k > {cap}")
        if dmin < hi:
            for comp in tracker.at(k):
                if lo <= comp.diameter < hi:
                    found.append(comp)
                    counts[k] = counts.get(k, 0) + 1
        k += 1
    return found, counts


def alice_potential_next(ctx: StrategyContext, state) -> list:
    const: PotentialConstants = ctx.constants
    i = len(state.bob)
    r = const.r
    if i == 1 or (i - 1) % r != 0:
        return []
    j = (i - 1) // r
    ball = state.bob[-1]
    rho = ball.radius
    beta = state.beta
    lo, hi = rho * beta ** (2 * r), rho * beta ** r
    comps, counts = step_components(ctx.sys, ball, ctx.y, ctx.extra["c"], lo, hi)
    fam = [comp.removal_ball() for comp in comps]
    g = state.gamma
    spent = sum((b.radius ** g for b in fam), 0 * rho)
    ctx.log.append({
        "turn": i, "step": j, "removals": len(fam), "ks": sorted(counts),
        "max_per_k": max(counts.values(), default=0), "n_k": len(counts),
        "budget_ratio": float(spent / (beta * rho) ** g),
        "uniqueness_ok": all(v <= 1 for v in counts.values()),
        "count_ok": len(counts) <= const.N,
    })
    ctx.tracked = comps
    ctx.step = j
    return fam


class PotentialAlice:
    """Callable wrapper holding the strategy context for one game."""

    def __init__(self, sys: SystemSpec, constants: PotentialConstants, y):
        self.ctx = StrategyContext(sys, normalize(y), constants)

    def bind(self, state):
        self.ctx.extra["c"] = nm.mp(self.ctx.constants.c)

    def __call__(self, state):
        return alice_potential_next(self.ctx, state)

    def finish(self, transcript):
        transcript.meta["strategy_log"] = self.ctx.log
        transcript.meta["constants"] = self.ctx.constants.to_json()


def potential_params(sys: SystemSpec, const: PotentialConstants, y) -> dict:
    return {"beta": const.beta, "gamma": const.gamma, "rho1": const.rho1, "dim": sys.dim,
            "system": sys.to_config(), "y": list(normalize(y)), "c": const.c, "r": const.r}


def potential_precision(const: PotentialConstants, depth: int) -> int:
    """Bits needed: final radius scale plus the growth of f^k over the horizon."""
    beta = const.beta
    floor_bits = -math.log2(const.rho1) + (depth + 2 * const.r) * -math.log2(beta)
    kmax = math.log(2 * const.c / (const.rho1 * beta ** (depth + 2 * const.r))) / math.log(const.sigma1)
    return int(floor_bits + max(0.0, kmax) * math.log2(const.sigma2) + 128)
