"""Alice's Schmidt-game strategy for the cat map and its perturbations.

The bad set is a small rectangle hole Pi(y, c) with sides along the
splitting at y.  Play is organized in steps of r turns.  At the start of step
j Alice lists every k whose preimage piece f^{-k}(Pi) meets Bob's ball and
whose width along the unstable direction lies in the step's window; there is
at most one such piece per k and at most N such k.  In each of the next r
turns she moves along the unstable direction so as to dodge at least a
fixed fraction of the pieces that still meet her ball.

Pieces are computed from the exact orbit of the window center and the
exact Jacobian product M_k = Df^k: the set of points x + v with
f^k(x + v) in Pi is contained in the parallelogram
{v : |u_k + g.v| <= c/2 + e, |s_k + g'.v| <= c/2 + e} with g = M_k^T a,
g' = M_k^T b (a, b the coordinate covectors of the rectangle) and e a
rigorous bound on the second-order remainder.  For linear maps e = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .. import _numeric as nm
from ..dynamics import (CAT_E_S, CAT_E_U, RectangleSpec, SystemSpec, _cocycle_array, apply,
                        apply_with_jacobian,
                        expansion_bounds, holonomy_project_array, jacobian, matmul,
                        unstable_direction)
from ..geometry import MetricBall, delta as tdelta, normalize
from .avoidance import EPS_IMPL, AvoidanceFailure, avoidance_choose
from .base import Infeasible, StrategyContext, n_count, to_jsonable

TAU = 0.5
ETA = 0.1
L_SCALE = 0.05
LEAF_D = 2.0   # doubling constant of 1-dimensional leaf measure
LEAF_C = 1.0   # power-law constant of 1-dimensional leaf measure
LIN_SAFETY = 1e-7


# ---------------------------------------------------------------------------
# convex geometry helper

def parallelogram_nearest(slabs):
    """Minimum-norm point v of {v : |alpha_i + g_i . v| <= h_i, i = 1, 2}.

    Checks the origin, the feet of perpendiculars on the four edge lines and
    the four vertices; the minimum over feasible candidates is the answer.
    """
    (g1, a1, h1), (g2, a2, h2) = slabs

    def feasible(v):
        return all(abs(a + g[0] * v[0] + g[1] * v[1]) <= h for g, a, h in slabs)

    zero = 0 * h1
    if feasible((zero, zero)):
        return (zero, zero)
    best = None
    for idx, (g, a, h) in enumerate(slabs):
        gg = g[0] * g[0] + g[1] * g[1]
        og, oa, oh = slabs[1 - idx]
        for sgn in (1, -1):
            t = (sgn * h - a) / gg
            v = (t * g[0], t * g[1])
            if abs(oa + og[0] * v[0] + og[1] * v[1]) <= oh:
                n2 = v[0] * v[0] + v[1] * v[1]
                if best is None or n2 < best[0]:
                    best = (n2, v)
    det = g1[0] * g2[1] - g1[1] * g2[0]
    for s1 in (1, -1):
        for s2 in (1, -1):
            r1, r2 = s1 * h1 - a1, s2 * h2 - a2
            v = ((r1 * g2[1] - r2 * g1[1]) / det, (g1[0] * r2 - g2[0] * r1) / det)
            n2 = v[0] * v[0] + v[1] * v[1]
            if best is None or n2 < best[0]:
                best = (n2, v)
    return best[1]


def disc_meets_slabs(R, slabs) -> bool:
    """Does the disc |v| <= R meet {v : |alpha_i + g_i . v| <= h_i, i = 1, 2}?"""
    for g, a, h in slabs:
        gap = abs(a) - h
        if gap > 0 and gap * gap > R * R * (g[0] * g[0] + g[1] * g[1]):
            return False
    v = parallelogram_nearest(slabs)
    return v[0] * v[0] + v[1] * v[1] <= R * R


# ---------------------------------------------------------------------------
# constants

@dataclass
class AnosovConstants:
    tau: float
    l0: int
    l1: int
    l2: int
    alpha0: float
    alpha: float
    beta: float
    eps_avoid: float
    r: int
    N: int
    L: float
    c_prime: float
    c: float
    m: int
    K: float
    C_hol: float
    rho: float
    rho_max: float
    leaf_C: float = LEAF_C
    leaf_D: float = LEAF_D
    sigma1: float = 0.0
    sigma2: float = 0.0
    lam: float = 0.0
    sin_angle: float = 1.0
    eta: float = ETA
    rect_e_u: tuple = field(default=(0.0, 0.0))
    rect_e_s: tuple = field(default=(0.0, 0.0))

    def window(self, j: int) -> tuple:
        """(floor, upper) of the step-j diameter window (mpfr), before widening by K."""
        q = nm.mp(self.alpha) * nm.mp(self.beta)
        a = nm.mp(self.alpha) * nm.mp(self.rho) / nm.mp(self.C_hol)
        return a * q ** ((j + 2) * self.r - 1), a * q ** ((j + 1) * self.r - 1)

    def check(self) -> list:
        bad = []
        n = 1
        if not self.alpha0 < 0.5 * (1 / (self.leaf_C * self.leaf_D)) ** (1 / n):
            bad.append("alpha0 < (1/2)(1/(CD))^(1/n)")
        if not self.tau ** self.l0 <= self.alpha0 < self.tau ** (self.l0 - 1):
            bad.append("tau^l0 <= alpha0 < tau^(l0-1)")
        if not math.isclose(self.alpha, self.tau ** (self.l0 + 2 * self.l2 + 1), rel_tol=1e-15):
            bad.append("alpha = tau^(l0+2 l2+1)")
        q = self.alpha * self.beta
        if self.N != n_count(q, self.r, self.sigma1):
            bad.append("N formula")
        if not (1 - self.eps_avoid) ** self.r * self.N < 1:
            bad.append("(1-eps)^r N < 1")
        if self.r > 1 and (1 - self.eps_avoid) ** (self.r - 1) * n_count(q, self.r - 1, self.sigma1) < 1:
            bad.append("r not minimal")
        if not self.c <= self.alpha * self.c_prime * q ** (2 * self.r - 1) / 100:
            bad.append("c <= alpha c' (alpha beta)^(2r-1) / 100")
        if not self.c < self.alpha * self.rho * q ** (2 * self.r - 1) / self.C_hol:
            bad.append("c < alpha rho (alpha beta)^(2r-1) / C")
        if not self.tau ** self.m <= self.c / 2 < self.tau ** (self.m - 1):
            bad.append("tau^m <= c/2 < tau^(m-1)")
        if not 1 <= self.K <= 1 + self.eta:
            bad.append("K <= 1 + eta")
        if not self.rho <= self.L / 100:
            bad.append("rho <= L/100")
        if not self.C_hol <= 1.1:
            bad.append("C_hol <= 1.1")
        return bad

    def to_json(self) -> dict:
        return to_jsonable(self)

    @classmethod
    def from_json(cls, d: dict) -> "AnosovConstants":
        d = dict(d)
        d["rect_e_u"] = tuple(d["rect_e_u"])
        d["rect_e_s"] = tuple(d["rect_e_s"])
        return cls(**d)


@lru_cache(maxsize=None)
def leaf_constants(sys: SystemSpec, tau: float = TAU) -> tuple:
    """(l1, l2, sin of the minimal splitting angle) for the flat metric.

    With straight leaves meeting at angle theta, the set D_l(z) is a
    parallelogram with half-sides tau^l: it lies in B(z, tau^l sqrt(2 + 2|cos|))
    and contains B(z, tau^l sin theta).  Both ball nestings hold once
    tau^-l >= sqrt(2 + 2|cos|) and tau^l <= sin theta.
    """
    if sys.delta:
        sins, coss = [], []
        for i in range(8):
            for j in range(8):
                sp = unstable_direction(sys, ((i + 0.5) / 8, (j + 0.5) / 8))
                cr = sp.e_u[0] * sp.e_s[1] - sp.e_u[1] * sp.e_s[0]
                dt = sp.e_u[0] * sp.e_s[0] + sp.e_u[1] * sp.e_s[1]
                sins.append(abs(cr))
                coss.append(abs(dt))
        sin_t, cos_t = min(sins) * (1 - 1e-3), min(1.0, max(coss) * (1 + 1e-3) + 1e-6)
    else:
        sin_t, cos_t = 1.0, abs(CAT_E_U[0] * CAT_E_S[0] + CAT_E_U[1] * CAT_E_S[1])
    l = 1
    while not (tau ** -l >= math.sqrt(2 + 2 * cos_t) and tau ** l <= sin_t):
        l += 1
        if l > 60:
            raise Infeasible("splitting angle too small")
    return l, l, sin_t


def holonomy_constant(sys: SystemSpec, pairs: int = 100, seed: int = 0) -> float:
    """Measured bi-Lipschitz constant of local stable holonomy (1 for the cat map)."""
    if not sys.delta:
        return 1.0
    import numpy as np
    rng = np.random.default_rng(seed)
    Z1 = rng.random((pairs, 2))
    off = rng.normal(size=(pairs, 2))
    off /= np.linalg.norm(off, axis=1)[:, None]
    Z2 = (Z1 + 0.02 * rng.random((pairs, 1)) * off) % 1.0
    eu = _cocycle_array(sys, Z1, 60, stable=False)
    t1 = 0.004 * rng.random(pairs) + 1e-4
    t2 = -0.004 * rng.random(pairs) - 1e-4
    H1 = holonomy_project_array(sys, Z1 + t1[:, None] * eu, Z2)
    H2 = holonomy_project_array(sys, Z1 + t2[:, None] * eu, Z2)
    d = H1 - H2
    d -= np.round(d)
    ratio = np.hypot(d[:, 0], d[:, 1]) / np.abs(t1 - t2)
    return float(max(1.0, ratio.max(), (1 / ratio).max()))


@lru_cache(maxsize=None)
def _hole_scale(sys: SystemSpec, eta: float, seed: int) -> tuple:
    """(c', K(c'), holonomy constant); depends on the system only, so cached."""
    c_prime, K = 0.01, 1.0
    if sys.delta:
        from ..verification import empirical_distortion
        while True:
            K = empirical_distortion(sys, c_prime, 12, 200, seed)
            if K <= 1 + eta:
                break
            c_prime /= 2
            if c_prime < 1e-8:
                raise Infeasible("no hole scale with small distortion")
    C_hol = holonomy_constant(sys, seed=seed)
    if C_hol > 1.1:
        raise Infeasible(f"holonomy constant {C_hol:.3f} > 1.1; use a smaller perturbation")
    return c_prime, K, C_hol


def minimal_r_anosov(alpha: float, beta: float, eps: float, sigma1: float) -> tuple:
    for r in range(1, 100_000):
        N = n_count(alpha * beta, r, sigma1)
        if (1 - eps) ** r * N < 1:
            return r, N
    raise Infeasible("no r with (1-eps)^r N < 1")


def derive_anosov_constants(sys: SystemSpec, beta: float, rho: float | None = None, y=(0.5, 0.5),
                            tau: float = TAU, eta: float = ETA, L: float = L_SCALE,
                            seed: int = 0) -> AnosovConstants:
    if not sys.is_anosov:
        raise Infeasible("the Schmidt-game strategy is for the cat-map families")
    if not 0 < beta < 1:
        raise Infeasible("beta must lie in (0, 1)")
    eb = expansion_bounds(sys)
    bound = 0.5 * (1 / (LEAF_C * LEAF_D))
    alpha0 = 0.99 * bound
    l0 = 1
    while not tau ** l0 <= alpha0:
        l0 += 1
    l1, l2, sin_t = leaf_constants(sys, tau)
    alpha = tau ** (l0 + 2 * l2 + 1)
    eps = EPS_IMPL[1]
    r, N = minimal_r_anosov(alpha, beta, eps, eb.sigma1)
    q = alpha * beta
    c_prime, K, C_hol = _hole_scale(sys, eta, seed)
    rho_lin = math.inf if not sys.delta else LIN_SAFETY * alpha * q ** (2 * r - 1) / (sys.delta * C_hol)
    rho_max = min(L / 100, rho_lin)
    if rho is None:
        rho = rho_max
    if rho > rho_max * (1 + 1e-12):
        raise Infeasible(f"rho={rho:.3g} exceeds {rho_max:.3g}; Alice waits for a smaller ball")
    c = 0.5 * min(alpha * c_prime * q ** (2 * r - 1) / 100, alpha * rho * q ** (2 * r - 1) / C_hol)
    m = 1
    while not tau ** m <= c / 2:
        m += 1
    sp = unstable_direction(sys, y)
    return AnosovConstants(tau, l0, l1, l2, alpha0, alpha, float(beta), eps, r, N, L, c_prime,
                           float(c), m, float(K), float(C_hol), float(rho), float(rho_max),
                           sigma1=eb.sigma1, sigma2=eb.sigma2, lam=eb.lam or 0.0,
                           sin_angle=sin_t, eta=eta, rect_e_u=sp.e_u, rect_e_s=sp.e_s)


def anosov_rectangle(const: AnosovConstants, y) -> RectangleSpec:
    """The hole in working precision (directions are the float splitting at y)."""
    return RectangleSpec(normalize(tuple(nm.mp(v) for v in y)), nm.mp(const.c),
                         tuple(nm.mp(v) for v in const.rect_e_u),
                         tuple(nm.mp(v) for v in const.rect_e_s))


def anosov_precision(const: AnosovConstants, depth: int, rho1: float) -> int:
    q = const.alpha * const.beta
    bits = -math.log2(rho1) + depth * -math.log2(q) * (1 + math.log(const.sigma2) / math.log(const.sigma1))
    return int(bits + 256)


# ---------------------------------------------------------------------------
# linearized orbits

class LinearizedOrbit:
    """Exact orbit x_k, Jacobian product M_k and remainder bound for |v| <= R."""

    def __init__(self, sys: SystemSpec, x, R):
        self.sys = sys
        self.k = 0
        self.x = normalize(x)
        self.M = ((1, 0), (0, 1))
        self.R = R
        self.err = 0 * R
        self.normM = 1 + 0 * R
        self.q2 = 2 * nm.pi_like(R) ** 2 * sys.delta
        # operator-norm bound of Df: ||A|| = golden ratio squared, plus the perturbation
        self.lip = 2.6180339887498953 + 2 * math.pi * sys.delta + 1e-9

    def advance(self):
        nxt, J = apply_with_jacobian(self.sys, self.x)
        if self.sys.delta:
            lin = self.normM * self.R
            self.err = self.lip * self.err + self.q2 * (lin + self.err) ** 2
        self.M = matmul(J, self.M)
        if self.sys.delta:
            self.normM = nm.sqrt(sum(v * v for row in self.M for v in row) + 0 * self.R)
        self.x = nxt
        self.k += 1


@dataclass
class Piece:
    """Thin strip {x + v : |alpha + g.v| <= hw_u} (with a second slab for the ends)."""

    k: int
    base: tuple       # window center the slabs are expressed around
    g: tuple
    alpha: object
    h_u: object
    g2: tuple
    beta: object
    h_s: object
    diameter: object

    def slabs_at(self, point):
        """Slabs re-expressed around another nearby point."""
        d = tdelta(point, self.base)
        a = self.alpha + self.g[0] * d[0] + self.g[1] * d[1]
        b = self.beta + self.g2[0] * d[0] + self.g2[1] * d[1]
        return [(self.g, a, self.h_u), (self.g2, b, self.h_s)]

    def meets_ball(self, ball: MetricBall) -> bool:
        return disc_meets_slabs(ball.radius, self.slabs_at(ball.center))

    def line_coordinate(self, point, e_line) -> tuple:
        """(t0, half-width) of the strip crossing point + t e_line."""
        (g, a, h), _ = self.slabs_at(point)
        ge = g[0] * e_line[0] + g[1] * e_line[1]
        return -a / ge, h / abs(ge)


def enumerate_pieces(sys: SystemSpec, rect: RectangleSpec, ball: MetricBall, lo, hi, e_line,
                     k_cap: int = 200_000):
    """Pieces meeting ``ball`` whose unstable width lies in (lo, hi].

    Returns (pieces, per_k_counts).  Widths are measured along e_line.
    """
    (a1, a2), (b1, b2) = rect.covectors()
    na = nm.sqrt(a1 * a1 + a2 * a2)
    nb = nm.sqrt(b1 * b1 + b2 * b2)
    half = rect.c / 2
    orb = LinearizedOrbit(sys, ball.center, ball.radius)
    pieces, counts = [], {}
    while orb.k <= k_cap:
        M = orb.M
        g = (M[0][0] * a1 + M[1][0] * a2, M[0][1] * a1 + M[1][1] * a2)
        g2 = (M[0][0] * b1 + M[1][0] * b2, M[0][1] * b1 + M[1][1] * b2)
        ge = abs(g[0] * e_line[0] + g[1] * e_line[1])
        width = rect.c / ge
        if width <= lo:
            break
        if width <= hi:
            h_u = half + na * orb.err
            h_s = half + nb * orb.err
            d0 = tdelta(orb.x, rect.center)
            for n1 in (-1, 0, 1):
                for n2 in (-1, 0, 1):
                    d = (d0[0] + n1, d0[1] + n2)
                    al = a1 * d[0] + a2 * d[1]
                    be = b1 * d[0] + b2 * d[1]
                    slabs = [(g, al, h_u), (g2, be, h_s)]
                    if disc_meets_slabs(ball.radius, slabs):
                        pieces.append(Piece(orb.k, ball.center, g, al, h_u, g2, be, h_s, width))
                        counts[orb.k] = counts.get(orb.k, 0) + 1
        orb.advance()
    else:
        from .base import ComponentDepthExhausted
        raise ComponentDepthExhausted(f"window needs k > {k_cap}")
    return pieces, counts


# ---------------------------------------------------------------------------
# the strategy

def _e_line(sys: SystemSpec, x):
    if not sys.delta:
        return tuple(nm.mp(v) for v in CAT_E_U)
    sp = unstable_direction(sys, tuple(float(v) for v in x))
    return tuple(nm.mp(v) for v in sp.e_u)


def alice_anosov_next(ctx: StrategyContext, state) -> MetricBall:
    """One Alice turn; ``ctx.extra`` holds the step bookkeeping."""
    ex = ctx.extra
    bob = state.bob[-1]
    i = len(state.bob)
    alpha = state.alpha
    if ex.get("start") is None:
        if bob.radius <= ex["rho_max"] * (1 + 1e-12):
            ex["start"] = i
            ctx.constants = derive_anosov_constants(ctx.sys, float(state.beta), float(bob.radius),
                                                    ctx.y, seed=ex.get("seed", 0))
            ex["rect"] = anosov_rectangle(ctx.constants, ctx.y)
            ex["K_w"] = max(1.0, ctx.constants.K)
        else:
            return MetricBall(bob.center, alpha * bob.radius)
    const: AnosovConstants = ctx.constants
    t = i - ex["start"]
    r = const.r
    j, turn = divmod(t, r)
    if j == 0:
        return MetricBall(bob.center, alpha * bob.radius)
    if turn == 0:
        lo, hi = const.window(j)
        kw = ex["K_w"]
        e_line = _e_line(ctx.sys, bob.center)
        pieces, counts = enumerate_pieces(ctx.sys, ex["rect"], bob, lo / kw, hi * kw, e_line)
        ctx.tracked = pieces
        ex["e_line"] = e_line
        ctx.step = j
        ctx.log.append({"turn": i, "step": j, "pieces": len(pieces), "n_k": len(counts),
                        "ks": sorted(counts), "max_per_k": max(counts.values(), default=0),
                        "uniqueness_ok": all(v <= 1 for v in counts.values()),
                        "count_ok": len(counts) <= const.N, "avoided": []})
    e_line = ex["e_line"]
    live = [p for p in ctx.tracked if p.meets_ball(bob)]
    targets, widths = [], []
    for p in live:
        t0, hw = p.line_coordinate(bob.center, e_line)
        targets.append((t0,))
        widths.append(hw)
    rho_b = bob.radius
    radius = alpha * rho_b
    if live and max(widths) > radius:
        raise AvoidanceFailure("a tracked piece is wider than Alice's ball; window mis-sized")
    (tstar,), _ = avoidance_choose((0 * rho_b,), rho_b, targets, alpha, 1)
    center = normalize((bob.center[0] + tstar * e_line[0], bob.center[1] + tstar * e_line[1]))
    move = MetricBall(center, radius)
    avoided = [p for p in live if not p.meets_ball(move)]
    need = math.ceil(const.eps_avoid * len(live))
    if len(avoided) < need:
        raise AvoidanceFailure(f"avoided {len(avoided)} < {need} of {len(live)} pieces")
    ids = {id(p) for p in avoided}
    ctx.tracked = [p for p in live if id(p) not in ids]
    ctx.log[-1]["avoided"].append(len(avoided))
    if turn == r - 1:
        ctx.log[-1]["claim_ok"] = not any(p.meets_ball(move) for p in ctx.tracked)
    return move


class AnosovAlice:
    """Callable Schmidt-game strategy; waits for Bob's radius to reach rho_max."""

    def __init__(self, sys: SystemSpec, beta: float, y=(0.5, 0.5), seed: int = 0,
                 base: AnosovConstants | None = None):
        base = base or derive_anosov_constants(sys, beta, None, y, seed=seed)
        self.ctx = StrategyContext(sys, normalize(y), base,
                                   extra={"rho_max": base.rho_max, "seed": seed})
        self.base = base

    @property
    def alpha(self) -> float:
        return self.base.alpha

    def bind(self, state):
        self.ctx.extra["start"] = None

    def __call__(self, state):
        return alice_anosov_next(self.ctx, state)

    def finish(self, transcript):
        transcript.meta["strategy_log"] = self.ctx.log
        transcript.meta["constants"] = self.ctx.constants.to_json()
        transcript.meta["start"] = self.ctx.extra.get("start")


def anosov_params(sys: SystemSpec, const: AnosovConstants, rho1: float, y=(0.5, 0.5)) -> dict:
    """Game parameters; the hole size is included when play starts inside rho_max."""
    p = {"alpha": const.alpha, "beta": const.beta, "rho1": rho1, "dim": 2,
         "system": sys.to_config(), "y": [float(v) for v in normalize(y)], "r": const.r}
    if rho1 <= const.rho_max * (1 + 1e-12):
        q = const.alpha * const.beta
        p["c"] = 0.5 * min(const.alpha * const.c_prime * q ** (2 * const.r - 1) / 100,
                           const.alpha * rho1 * q ** (2 * const.r - 1) / const.C_hol)
    return p
