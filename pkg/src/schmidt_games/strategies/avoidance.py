"""Constructive ball-avoidance search.

Given a ball B(x1, rho) and N target balls B(y_i, alpha rho), pick a center x2
with B(x2, alpha rho) inside B(x1, rho) that is disjoint from as many targets
as possible.  The candidate set always contains 2n antipodal extreme points
(+-rho(1-alpha) along each axis).  When alpha < 1/3 in dimension 1 (or
alpha < 1/4 in dimension 2) those extremes are more than 4 alpha rho apart,
so a target can block at most one of them and the best extreme avoids at
least N/2 (resp. 3N/4) targets.  We certify the smaller fractions below and
assert them after every search.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _numeric as nm
from ..geometry import as_point, delta as tdelta, normalize

EPS_IMPL = {1: 0.25, 2: 0.125}
ALPHA_BOUND = {1: 1 / 3, 2: 1 / 4}


class AvoidanceFailure(RuntimeError):
    pass


def _candidates(n: int, reach, rel_targets, excl):
    """Candidate displacements: extremes, a coarse grid and points beside targets."""
    one = reach / reach  # 1 in the scalar type of reach
    if n == 1:
        cands = [(reach,), (-reach,), (0 * reach,)]
        cands += [(reach * (2 * one * i / 16 - 1),) for i in range(1, 16)]
        for (t,) in rel_targets:
            for s in (t + excl, t - excl):
                if abs(s) <= reach:
                    cands.append((s,))
        return cands
    cands = [(reach, 0 * reach), (-reach, 0 * reach), (0 * reach, reach), (0 * reach, -reach),
             (0 * reach, 0 * reach)]
    for i in range(-4, 5):
        for j in range(-4, 5):
            v = (reach * i / 4, reach * j / 4)
            if v[0] * v[0] + v[1] * v[1] <= reach * reach:
                cands.append(v)
    for t in rel_targets:
        for ang in range(8):
            th = 2 * math.pi * ang / 8
            v = (t[0] + excl * math.cos(th), t[1] + excl * math.sin(th))
            if v[0] * v[0] + v[1] * v[1] <= reach * reach:
                cands.append(v)
    return cands


def avoidance_choose(x1, rho, targets, alpha, n: int, radii=None, certify: bool = True):
    """Choose x2 so that B(x2, alpha rho) avoids many target balls.

    ``targets`` are points; each target ball has radius ``radii[i]`` (default
    alpha rho).  Returns (x2, avoided) where ``avoided`` is the sorted list of
    target indices whose balls are disjoint from B(x2, alpha rho).
    """
    x1 = as_point(x1)
    if len(x1) != n:
        raise ValueError("dimension mismatch")
    targets = [as_point(t) for t in targets]
    if not targets:
        return normalize(x1), []
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    r_alice = alpha * rho
    reach = rho - r_alice
    rad = list(radii) if radii is not None else [r_alice] * len(targets)
    rel = [tdelta(t, x1) for t in targets]
    excl = r_alice + max(rad) * (1 + 1e-9) + r_alice * 1e-9
    best = None
    for v in _candidates(n, reach, rel, excl):
        avoided = []
        for i, (t, rr) in enumerate(zip(rel, rad)):
            d2 = sum((a - b) ** 2 for a, b in zip(v, t))
            if d2 > (r_alice + rr) ** 2:
                avoided.append(i)
        if best is None or len(avoided) > len(best[1]):
            best = (v, avoided)
            if len(avoided) == len(targets):
                break
    v, avoided = best
    if certify and alpha < ALPHA_BOUND[n] and radii is None:
        need = math.ceil(EPS_IMPL[n] * len(targets))
        if len(avoided) < need:
            raise AvoidanceFailure(f"avoided {len(avoided)} < {need} of {len(targets)} targets")
    x2 = normalize(tuple(a + b for a, b in zip(x1, v)))
    return x2, avoided


def random_instance(rng: np.random.Generator, n: int, n_targets: int = 50, alpha: float = 0.2):
    """Targets clustered inside the ball, a worst-case-ish configuration."""
    x1 = tuple(rng.random(n))
    rho = 0.1 * rng.random() + 1e-3
    targets = []
    for _ in range(n_targets):
        v = rng.normal(size=n)
        v = v / np.linalg.norm(v) * rho * rng.random() ** (1 / n)
        targets.append(normalize(tuple(a + b for a, b in zip(x1, v))))
    return x1, rho, targets, alpha
