"""Post-hoc checks: orbit avoidance of limit points, distortion, dimension, audits.

``verify_transcript`` replays a game through the validating engine and then
checks the strategy's claim directly.  The limit point is approximated by
the center of the final enclosure, and the horizon is the number of iterates
for which the diameter windows already handled by Alice cover every
preimage component of the hole.  The check itself never reuses strategy
state: orbits are recomputed from the transcript at its stored precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _numeric as nm
from .dynamics import (InvalidSystem, SystemSpec, _cocycle_array, apply,
                       apply_array, expansion_bounds, inverse_branch_1d, jacobian,
                       log_derivative_lipschitz, matmul)
from .games import GameTranscript, replay, tiling_from_params
from .geometry import MetricBall, as_point, delta as tdelta, normalize, torus_distance


# ---------------------------------------------------------------------------
# reports

@dataclass
class AvoidanceReport:
    transcript_id: int
    x_inf: tuple
    horizon: int
    min_distance: float
    guaranteed_horizon: int
    passed: bool
    c: float = 0.0
    uncovered: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["x_inf"] = [float(v) for v in self.x_inf]
        return d


@dataclass
class DimensionEstimate:
    levels: list
    box_sizes: list
    counts: list
    slope: float
    oracle: float | None = None
    discrepancy: float | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# orbits

def orbit_min_distance(sys: SystemSpec, x, y, horizon: int):
    """min over 0 <= k <= horizon of d(f^k(x), y), by direct iteration."""
    if horizon > 10 ** 6:
        raise ValueError("horizon must be at most 10^6")
    x, y = normalize(as_point(x)), normalize(as_point(y))
    best = torus_distance(x, y)
    for _ in range(horizon):
        x = apply(sys, x)
        best = min(best, torus_distance(x, y))
    return best


def _orbit_distances(sys: SystemSpec, x, y, n: int) -> list:
    out = []
    x = normalize(x)
    for _ in range(n):
        out.append(torus_distance(x, y))
        x = apply(sys, x)
    return out


# ---------------------------------------------------------------------------
# distortion

def empirical_distortion(sys: SystemSpec, c: float, k_max: int, samples: int, seed: int = 0) -> float:
    """Max ratio of k-step unstable derivatives over sampled Bowen-ball pairs.

    z1 is uniform; k is uniform in 1..k_max; z2 is displaced along the
    unstable direction so that f^k(z2) lies within c of f^k(z1).  Pairs that
    leave the Bowen ball B(z1, k, c) at an intermediate time are discarded.
    """
    if sys.is_linear:
        return 1.0
    rng = np.random.default_rng(seed)
    ks = rng.integers(1, k_max + 1, size=samples)
    u = rng.uniform(-1.0, 1.0, size=samples)
    if sys.kind == "circle_expanding":
        z1 = rng.random(samples)
        d1 = np.ones(samples)
        p = z1.copy()
        for i in range(k_max):
            act = i < ks
            d1 = np.where(act, d1 * (sys.m + 2 * np.pi * sys.delta * np.cos(2 * np.pi * p)), d1)
            p = apply_array(sys, p)
        z2 = z1 + 0.999 * c * u / d1
        d2 = np.ones(samples)
        a, b = z1.copy(), z2.copy()
        inside = np.ones(samples, dtype=bool)
        for i in range(k_max + 1):
            gap = np.abs((a - b + 0.5) % 1.0 - 0.5)
            inside &= (i > ks) | (gap <= c)
            act = i < ks
            d2 = np.where(act, d2 * (sys.m + 2 * np.pi * sys.delta * np.cos(2 * np.pi * b)), d2)
            a = np.where(act, apply_array(sys, a), a)
            b = np.where(act, apply_array(sys, b), b)
        ratio = d1[inside] / d2[inside]
        return float(np.max(np.maximum(ratio, 1 / ratio))) if ratio.size else 1.0
    if not sys.is_anosov:
        raise InvalidSystem(f"no distortion sampler for {sys.kind}")
    z1 = rng.random((samples, 2))
    e1 = _cocycle_array(sys, z1, 40, stable=False)
    n1 = _unstable_growth(sys, z1, e1, ks, k_max)
    z2 = z1 + (0.999 * c * u / n1)[:, None] * e1
    z2 -= np.floor(z2)
    e2 = _cocycle_array(sys, z2, 40, stable=False)
    n2 = _unstable_growth(sys, z2, e2, ks, k_max)
    ratio = n1 / n2
    return float(np.max(np.maximum(ratio, 1 / ratio)))


def _unstable_growth(sys, Z, E, ks, k_max):
    norm = np.ones(len(Z))
    v = E.copy()
    P = Z.copy()
    for i in range(k_max):
        act = i < ks
        a = 2 + 2 * np.pi * sys.delta * np.cos(2 * np.pi * P[:, 0])
        w = np.stack([a * v[:, 0] + v[:, 1], v[:, 0] + v[:, 1]], axis=1)
        nw = np.linalg.norm(w, axis=1)
        norm = np.where(act, norm * nw, norm)
        v = np.where(act[:, None], w / nw[:, None], v)
        P = np.where(act[:, None], apply_array(sys, P), P)
    return norm


def distortion_bound(sys: SystemSpec, c: float) -> float:
    """exp(2 l (2c) / (1 - 1/sigma1)), l the log-derivative Lipschitz constant."""
    l = log_derivative_lipschitz(sys)
    s1 = expansion_bounds(sys).sigma1
    return math.exp(2 * l * (2 * c) / (1 - 1 / s1))


# ---------------------------------------------------------------------------
# survivor-set dimension

def _cylinder(sys: SystemSpec, word) -> tuple:
    if not sys.delta:
        n = 0
        for w in word:
            n = n * sys.m + w
        s = sys.m ** len(word)
        return n / s, (n + 1) / s
    lo, hi = 0.0, 1.0
    for w in reversed(word):
        lo, hi = inverse_branch_1d(sys, lo, w), inverse_branch_1d(sys, hi, w)
    return lo, hi


def _in_hole(iv, hole: MetricBall) -> bool:
    lo, hi = iv
    y, c = hole.center[0], hole.radius
    shift = math.floor(lo - (y - c) + 1e-12)
    lo, hi = lo - shift, hi - shift
    return y - c - 1e-12 <= lo and hi <= y + c + 1e-12


def hole_cylinder_level(sys: SystemSpec, hole: MetricBall, max_level: int = 10) -> int | None:
    """Smallest L with the closed hole a union of level-L cylinders (linear maps only)."""
    if sys.kind != "circle_expanding" or sys.delta:
        return None
    lo = hole.center[0] - hole.radius
    hi = hole.center[0] + hole.radius
    for L in range(1, max_level + 1):
        s = sys.m ** L
        if abs(lo * s - round(lo * s)) < 1e-9 and abs(hi * s - round(hi * s)) < 1e-9:
            return L
    return None


def transfer_matrix_dimension(m: int, forbidden: set, L: int) -> float:
    """log(lambda_max) / log m for the subshift without the given length-L words."""
    if L == 1:
        allowed = m - len(forbidden)
        return math.log(allowed) / math.log(m) if allowed > 0 else 0.0
    states = [tuple(int(d) for d in np.base_repr(i, m).zfill(L - 1)) for i in range(m ** (L - 1))]
    index = {s: i for i, s in enumerate(states)}
    T = np.zeros((len(states), len(states)))
    for s in states:
        for a in range(m):
            w = s + (a,)
            if w not in forbidden:
                T[index[s], index[w[1:]]] = 1
    lam = max(abs(np.linalg.eigvals(T)))
    return math.log(lam) / math.log(m) if lam > 1 else 0.0


def survivor_box_dimension(sys: SystemSpec, hole: MetricBall, depth: int, min_level: int | None = None
                           ) -> DimensionEstimate:
    """Box-counting dimension of {x : f^k(x) not in hole, 0 <= k <= depth}.

    A level-n cylinder survives when none of its forward images (the
    cylinders of its suffix words) lies inside the hole.  The fitted slope
    of log N(n) against n log m uses levels min_level..depth.
    """
    if sys.kind != "circle_expanding":
        raise InvalidSystem("survivor dimension is implemented for circle maps")
    if depth > 20:
        raise ValueError("depth must be at most 20")
    m = sys.m
    min_level = min_level if min_level is not None else max(1, depth // 2)
    if depth - min_level + 1 < 5:
        min_level = max(1, depth - 4)
    words = [()]
    counts = []
    killed_cache: dict = {}

    def killed(u):
        if u not in killed_cache:
            killed_cache[u] = _in_hole(_cylinder(sys, u), hole)
        return killed_cache[u]

    for n in range(1, depth + 1):
        nxt = []
        for w in words:
            for a in range(m):
                cand = w + (a,)
                if not any(killed(cand[i:]) for i in range(len(cand))):
                    nxt.append(cand)
        words = nxt
        counts.append(len(words))
    levels = list(range(min_level, depth + 1))
    ys = [math.log(max(counts[n - 1], 1)) for n in levels]
    xs = [n * math.log(m) for n in levels]
    slope = float(np.polyfit(xs, ys, 1)[0])
    oracle = disc = None
    L = hole_cylinder_level(sys, hole)
    if L is not None:
        forbidden = set()
        for i in range(m ** L):
            w = tuple(int(d) for d in np.base_repr(i, m).zfill(L))
            if killed(w):
                forbidden.add(w)
        oracle = transfer_matrix_dimension(m, forbidden, L)
        disc = abs(slope - oracle)
    return DimensionEstimate(levels, [float(m) ** -n for n in levels],
                             [counts[n - 1] for n in levels], slope, oracle, disc)


# ---------------------------------------------------------------------------
# transcript verification

def verify_transcript(transcript: GameTranscript, ctx=None, tiling=None) -> AvoidanceReport:
    """Replay the game and check the limit point against the strategy's claim."""
    replay(transcript, tiling)
    kind = transcript.kind
    if kind == "potential":
        return _verify_potential(transcript)
    if kind == "schmidt":
        return _verify_schmidt(transcript, ctx)
    if kind == "modified":
        return _verify_modified(transcript, tiling)
    return _verify_generic(transcript)


def _system(tr: GameTranscript) -> SystemSpec:
    return SystemSpec.from_config(tr.params["system"])


def _empty_report(tr, x, c=0.0, **details) -> AvoidanceReport:
    return AvoidanceReport(tr.seed, tuple(x) if x is not None else (), 0, math.inf, 0, True,
                           float(c), [], dict(details))


def _verify_generic(tr: GameTranscript) -> AvoidanceReport:
    """Games without a strategy claim: horizon 0 and an orbit distance for information."""
    if tr.final is None or "system" not in tr.params or "y" not in tr.params:
        return _empty_report(tr, None)
    with nm.precision(tr.precision):
        sys = _system(tr)
        x = tr.final.center
        d = orbit_min_distance(sys, x, tuple(tr.params["y"]), 0)
    rep = _empty_report(tr, x)
    rep.min_distance = float(d)
    return rep


def potential_horizon(c, sigma2: float, floor) -> int:
    """Number of k >= 0 with 2c / sigma2^k >= floor (all such components are handled)."""
    if 2 * c < floor:
        return 0
    return int(math.floor(float(nm.log(2 * c / floor)) / math.log(sigma2) + 1e-12)) + 1


def _verify_potential(tr: GameTranscript) -> AvoidanceReport:
    p = tr.params
    with nm.precision(tr.precision):
        sys = _system(tr)
        y = normalize(tuple(nm.mp(v) for v in p["y"]))
        c = nm.mp(p["c"])
        r = int(p["r"])
        beta = nm.mp(p["beta"])
        bobs = tr.bob_moves()
        fams = tr.alice_moves()
        if not bobs:
            return _empty_report(tr, None, c)
        final = bobs[-1]
        x = final.center
        J = (len(fams) - 1) // r if fams else 0
        rho_step = bobs[J * r].radius
        floor = rho_step * beta ** (2 * r)
        sigma2 = expansion_bounds(sys).sigma2
        # no completed step certifies nothing
        H = potential_horizon(c, sigma2, floor) if J > 0 else 0
        # window coverage: rho_{jr+1} beta^{2r} <= rho_{(j+1)r+1} beta^r
        coverage = all(bobs[j * r].radius * beta ** (2 * r) <= bobs[(j + 1) * r].radius * beta ** r
                       * (1 + 1e-12) for j in range(J))
        removals = [b for fam in fams for b in fam]
        dists = _orbit_distances(sys, x, y, H)
        captured_by = [b for b in removals if b.contains_point(x)]
        uncovered, free = [], []
        for k, d in enumerate(dists):
            if d <= c:
                if not captured_by:
                    uncovered.append(k)
            else:
                free.append(d)
        min_free = min(free) if free else math.inf
        log = tr.meta.get("strategy_log", [])
        details = {"window_coverage": coverage, "steps": J, "captured": len(captured_by) > 0,
                   "hits": sum(1 for d in dists if d <= c),
                   "uniqueness_ok": all(e.get("uniqueness_ok", True) for e in log),
                   "count_ok": all(e.get("count_ok", True) for e in log)}
        passed = not uncovered and coverage
        return AvoidanceReport(tr.seed, tuple(float(v) for v in x), H, float(min_free), H, passed,
                               float(c), uncovered, details)


def _verify_modified(tr: GameTranscript, tiling=None) -> AvoidanceReport:
    p = tr.params
    tiling = tiling or tiling_from_params(p)
    with nm.precision(tr.precision):
        sys = _system(tr)
        y = normalize(tuple(nm.mp(v) for v in p["y"]))
        c = nm.mp(p["c"])
        r = int(p["r"])
        ab = int(p["a"]) + int(p["b"])
        alices = [tiling.atom(a.word, a.cell, mp=True) for a in tr.alice_moves()]
        if not alices:
            return _empty_report(tr, None, c)
        J = len(alices) // r
        step_claims = []
        uncovered = []
        for j in range(J):
            atom = alices[r * (j + 1) - 1]
            bad = _atom_hits(sys, atom, y, c, (j + 1) * r * ab)
            step_claims.append(not bad)
            if j == J - 1:
                uncovered = bad
        H = J * r * ab
        final = alices[-1]
        x = (final.center,)
        dists = _orbit_distances(sys, x, y, H)
        min_d = min(dists) if dists else math.inf
        center_hits = [k for k, d in enumerate(dists) if d <= c]
        passed = all(step_claims) and not center_hits
        details = {"steps": J, "step_claims": step_claims, "center_hits": center_hits}
        return AvoidanceReport(tr.seed, (float(x[0]),), H, float(min_d), H, passed, float(c),
                               sorted(set(uncovered) | set(center_hits)), details)


def _atom_hits(sys: SystemSpec, atom, y, c, n: int) -> list:
    """k < n with f^k(atom) meeting the closed hole B(y, c)."""
    from .dynamics import CircleOrbit

    lo, hi = atom.interval
    orb = CircleOrbit(sys, lo)
    out = []
    for k in range(n):
        b = orb.point(k)
        length = orb.offset_image(hi - lo, k)[0]
        if length >= 1:
            out.append(k)
            continue
        mid = b + length / 2
        if abs(nm.wrap(mid - y[0])) <= length / 2 + c:
            out.append(k)
    return out


def _verify_schmidt(tr: GameTranscript, ctx=None) -> AvoidanceReport:
    from .dynamics import RectangleSpec
    from .strategies.anosov import AnosovConstants, disc_meets_slabs

    start = tr.meta.get("start")
    cj = tr.meta.get("constants")
    if ctx is not None and getattr(ctx, "constants", None) is not None and cj is None:
        cj = ctx.constants.to_json()
    bobs = tr.bob_moves()
    if not bobs or cj is None or start is None:
        return _empty_report(tr, bobs[-1].center if bobs else None)
    const = AnosovConstants.from_json(cj)
    with nm.precision(tr.precision):
        sys = _system(tr)
        y = normalize(tuple(nm.mp(v) for v in tr.params["y"]))
        rect = RectangleSpec(y, nm.mp(const.c), tuple(nm.mp(v) for v in const.rect_e_u),
                             tuple(nm.mp(v) for v in const.rect_e_s))
        n_alice = len(tr.alice_moves()) - (start - 1)
        J = max(0, n_alice) // const.r
        final = bobs[-1]
        if J < 2:
            return _empty_report(tr, final.center, const.c, steps=J)
        kw = max(1.0, const.K)
        floor = const.window(J - 1)[0] / kw
        (a1, a2), (b1, b2) = rect.covectors()
        na = nm.sqrt(a1 * a1 + a2 * a2)
        nb = nm.sqrt(b1 * b1 + b2 * b2)
        growth = 2.6180339887498953 + 2 * math.pi * sys.delta + 1e-9
        H = 0
        while rect.c / (na * nm.mp(growth) ** H) > floor:
            H += 1
        # exact orbit and Jacobian product of the final center
        R = final.radius
        x = final.center
        M = ((1, 0), (0, 1))
        err = 0 * R
        normM = 1 + 0 * R
        q2 = 2 * nm.pi_like(R) ** 2 * sys.delta
        uncovered, dmin = [], None
        half = rect.c / 2
        for k in range(H):
            g = (M[0][0] * a1 + M[1][0] * a2, M[0][1] * a1 + M[1][1] * a2)
            g2 = (M[0][0] * b1 + M[1][0] * b2, M[0][1] * b1 + M[1][1] * b2)
            d0 = tdelta(x, y)
            dist = nm.sqrt(d0[0] * d0[0] + d0[1] * d0[1])
            dmin = dist if dmin is None or dist < dmin else dmin
            for n1 in (-1, 0, 1):
                for n2 in (-1, 0, 1):
                    d = (d0[0] + n1, d0[1] + n2)
                    slabs = [(g, a1 * d[0] + a2 * d[1], half + na * err),
                             (g2, b1 * d[0] + b2 * d[1], half + nb * err)]
                    if disc_meets_slabs(R, slabs):
                        uncovered.append(k)
            J1 = jacobian(sys, x)
            if sys.delta:
                err = growth * err + q2 * (normM * R + err) ** 2
            M = matmul(J1, M)
            if sys.delta:
                normM = nm.sqrt(sum(v * v for row in M for v in row) + 0 * R)
            x = apply(sys, x)
        log = tr.meta.get("strategy_log", [])
        details = {"steps": J, "start": start, "inner_radius": float(rect.inner_radius),
                   "uniqueness_ok": all(e.get("uniqueness_ok", True) for e in log),
                   "count_ok": all(e.get("count_ok", True) for e in log),
                   "claims_ok": all(e.get("claim_ok", True) for e in log)}
        return AvoidanceReport(tr.seed, tuple(float(v) for v in final.center), H,
                               float(dmin) if dmin is not None else math.inf, H, not uncovered,
                               const.c, sorted(set(uncovered)), details)


def _polygon_meets_box(P, h) -> bool:
    """Convex polygon P (counterclockwise or clockwise) meets the closed box [-h, h]^2."""
    us = [p[0] for p in P]
    vs = [p[1] for p in P]
    if min(us) > h or max(us) < -h or min(vs) > h or max(vs) < -h:
        return False
    n = len(P)
    for i in range(n):
        (x0, y0), (x1, y1) = P[i], P[(i + 1) % n]
        nx, ny = y1 - y0, x0 - x1
        proj = [nx * p[0] + ny * p[1] for p in P]
        box = h * (abs(nx) + abs(ny))
        if min(proj) > box or max(proj) < -box:
            return False
    return True


def disc_rectangle_hits(sys: SystemSpec, ball: MetricBall, rect, ks, n_boundary: int = 16) -> list:
    """k in ``ks`` with f^k(ball) meeting the rectangle hole, by exact iteration.

    Independent of the strategy and of the Jacobian bookkeeping in the
    verifier: the center and n_boundary boundary points are iterated exactly,
    the image polygon is inflated by 1/cos(pi/n) about the image center (so
    it contains the image ellipse of the disc to first order) and tested
    against the hole in its own (u, s) coordinates over all lattice translates.
    """
    ks = sorted(set(ks))
    (a1, a2), (b1, b2) = rect.covectors()
    R, x = ball.radius, ball.center
    pts = []
    for i in range(n_boundary):
        s_, c_ = nm.sin_cos2pi(nm.mp(i) / n_boundary)
        pts.append(normalize((x[0] + R * c_, x[1] + R * s_)))
    inflate = 1 / nm.cospi(nm.mp(1) / n_boundary)
    half = rect.c / 2
    hits = []
    k = 0
    for target in ks:
        while k < target:
            x = apply(sys, x)
            pts = [apply(sys, p) for p in pts]
            k += 1
        d0 = tdelta(x, rect.center)
        offs = [tuple(inflate * v for v in tdelta(p, x)) for p in pts]
        for n1 in (-1, 0, 1):
            for n2 in (-1, 0, 1):
                d = (d0[0] + n1, d0[1] + n2)
                P = [(a1 * (d[0] + o[0]) + a2 * (d[1] + o[1]),
                      b1 * (d[0] + o[0]) + b2 * (d[1] + o[1])) for o in offs]
                if _polygon_meets_box(P, half):
                    hits.append(k)
    return sorted(set(hits))


def rectangle_bruteforce_hits(tr: GameTranscript, horizon: int, n_boundary: int = 16) -> list:
    """k < horizon with f^k(final Bob disc) meeting the transcript's rectangle hole."""
    from .dynamics import RectangleSpec
    from .strategies.anosov import AnosovConstants

    const = AnosovConstants.from_json(tr.meta["constants"])
    with nm.precision(tr.precision):
        y = normalize(tuple(nm.mp(v) for v in tr.params["y"]))
        rect = RectangleSpec(y, nm.mp(const.c), tuple(nm.mp(v) for v in const.rect_e_u),
                             tuple(nm.mp(v) for v in const.rect_e_s))
        return disc_rectangle_hits(_system(tr), tr.bob_moves()[-1], rect, range(horizon),
                                   n_boundary)


# ---------------------------------------------------------------------------
# mutation helpers

def required_removals(tr: GameTranscript) -> list:
    """(alice move index, removal index) of removals the potential claim depends on.

    A removal is required when it is the only one containing the final
    center and that center's orbit enters the hole before the horizon.
    """
    if tr.kind != "potential":
        raise ValueError("required removals are defined for potential games")
    rep = _verify_potential(tr)
    if rep.details.get("hits", 0) == 0:
        return []
    with nm.precision(tr.precision):
        x = tr.bob_moves()[-1].center
        owners = [(i, j) for i, fam in enumerate(tr.alice_moves()) for j, b in enumerate(fam)
                  if b.contains_point(x)]
    return owners if len(owners) == 1 else []


def drop_removal(tr: GameTranscript, move_index: int, removal_index: int) -> GameTranscript:
    """Copy of ``tr`` with one removal deleted from Alice's move ``move_index``."""
    moves, seen = [], -1
    for player, mv in tr.moves:
        if player == "alice":
            seen += 1
            if seen == move_index:
                mv = [b for j, b in enumerate(mv) if j != removal_index]
        moves.append((player, mv))
    return GameTranscript(tr.kind, tr.params, moves, tr.depth, tr.seed, tr.precision,
                          tr.final, tr.failure, dict(tr.meta))


def enumerate_all_components(sys: SystemSpec, y, c, window: MetricBall, k_max: int) -> list:
    """Brute-force list of hole components meeting ``window`` for k <= k_max (circle maps)."""
    from .dynamics import preimage_components

    hole = MetricBall(normalize(y), c)
    out = []
    for k in range(k_max + 1):
        out.extend(preimage_components(sys, hole, k, window, depth_cap=max(64, k_max)))
    return out
