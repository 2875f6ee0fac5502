"""Dynamically induced tilings of the circle and their certification.

Level-1 atoms are the Voronoi arcs of a maximal eps-separated set; level-n
atoms are the connected components of f^{-(n-1)} of level-1 atoms.  An atom
is stored symbolically as ``(word, cell)``: its lifted interval is
g_word(cell), where g_j(t) = F^{-1}(t + j) is the inverse of the lift F and
letters j are arbitrary integers (so that every atom is expressed in the
lift of its own parent, which makes nesting exact in lifted coordinates).
The letters reduced mod m are the usual branch indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _numeric as nm
from .dynamics import (InvalidSystem, SystemSpec, apply, expansion_bounds,
                       inverse_branch_1d, lift_map)
from .geometry import MetricBall, normalize, torus_distance

DEFAULT_EPSILON = 0.1


class BoundaryAmbiguity(ValueError):
    pass


class TilingDepthCap(ValueError):
    pass


@dataclass(frozen=True)
class SeparatedSet:
    epsilon: float
    points: tuple

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def min_separation(self) -> float:
        p = self.points
        if len(p) < 2:
            return math.inf
        return min(float(torus_distance(p[i], p[j]))
                   for i in range(len(p)) for j in range(i + 1, len(p)))

    def covering_radius(self) -> float:
        """Max distance from a grid point (mesh eps/10) to the set."""
        g = _grid(self.dim, self.epsilon / 10)
        P = np.array(self.points, dtype=float)
        D = np.abs(g[:, None, :] - P[None, :, :])
        D = np.minimum(D, 1 - D)
        return float(np.sqrt((D ** 2).sum(-1)).min(axis=1).max())


def _grid(d: int, mesh: float) -> np.ndarray:
    n = max(1, int(math.ceil(1 / mesh)))
    g = np.arange(n) / n
    if d == 1:
        return g[:, None]
    return np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)


def build_separated_set(d: int, epsilon: float, seed: int = 0) -> SeparatedSet:
    """Greedy maximal eps-separated set over a shuffled grid of mesh eps/10."""
    if d not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if not 0 < epsilon:
        raise ValueError("epsilon must be positive")
    g = _grid(d, epsilon / 10)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(g))
    chosen = []
    for idx in order:
        p = g[idx]
        ok = True
        for q in chosen:
            dd = np.abs(p - q)
            dd = np.minimum(dd, 1 - dd)
            if math.sqrt(float((dd ** 2).sum())) < epsilon:
                ok = False
                break
        if ok:
            chosen.append(p)
    pts = sorted(tuple(float(v) for v in p) for p in chosen)
    return SeparatedSet(float(epsilon), tuple(pts))


@dataclass(frozen=True)
class Atom:
    """A tiling atom g_word(cell); ``interval`` is its closed lifted arc."""

    level: int
    word: tuple
    cell: int
    interval: tuple
    base_point: tuple
    index: int = field(default=-1, compare=False)

    @property
    def branch_word(self) -> tuple:
        return self.word

    @property
    def diameter(self):
        lo, hi = self.interval
        return hi - lo

    @property
    def enclosure(self) -> MetricBall:
        lo, hi = self.interval
        return MetricBall(((lo + hi) / 2,), (hi - lo) / 2)

    @property
    def center(self):
        lo, hi = self.interval
        return nm.frac((lo + hi) / 2)

    def contains_point(self, z, tol: float = 0.0) -> bool:
        lo, hi = self.interval
        x = nm.frac(z[0] if isinstance(z, tuple) else z)
        x = x + nm.floor(lo - x) + 1 if x < lo else x
        x = x - nm.floor(x - lo) if x - lo >= 1 else x
        return lo - tol <= x <= hi + tol

    def key(self) -> tuple:
        return (self.level, self.word, self.cell)

    def to_json(self) -> dict:
        return {"level": self.level, "word": list(self.word), "cell": self.cell,
                "interval": nm.encode(list(self.interval))}


def interval_contains(outer: tuple, inner: tuple, tol_rel: float = 1e-12) -> bool:
    """Lifted-arc containment allowing an integer shift of the inner arc."""
    olo, ohi = outer
    ilo, ihi = inner
    tol = tol_rel * (ohi - olo)
    s = nm.floor(ilo - olo + tol)
    ilo, ihi = ilo - s, ihi - s
    return olo - tol <= ilo and ihi <= ohi + tol


def intervals_disjoint(a: tuple, b: tuple) -> bool:
    """Closed arcs on the circle (lengths < 1) share no point."""
    alo, ahi = a
    blo, bhi = b
    mid_a, mid_b = (alo + ahi) / 2, (blo + bhi) / 2
    gap = abs(nm.wrap(mid_a - mid_b))
    return gap > (ahi - alo) / 2 + (bhi - blo) / 2


class TilingFamily:
    """f-induced eps-tiling of the circle from Voronoi arcs of a separated set."""

    def __init__(self, sys: SystemSpec, epsilon: float = DEFAULT_EPSILON, seed: int = 0,
                 depth_cap: int = 24, separated: SeparatedSet | None = None):
        if sys.kind != "circle_expanding":
            raise InvalidSystem("tilings are built for circle expanding maps")
        self.sys = sys
        self.epsilon = float(epsilon)
        self.seed = seed
        self.depth_cap = depth_cap
        self.separated = separated or build_separated_set(1, epsilon, seed)
        pts = [p[0] for p in self.separated.points]
        q = len(pts)
        cells = []
        for i, p in enumerate(pts):
            if q == 1:
                cells.append((p - 0.5, p + 0.5))
                continue
            prev = pts[i - 1] - (1.0 if i == 0 else 0.0)
            nxt = pts[(i + 1) % q] + (1.0 if i == q - 1 else 0.0)
            cells.append(((prev + p) / 2, (p + nxt) / 2))
        self.cells = tuple(cells)
        self.centers = tuple(pts)
        self._levels: dict[int, list[Atom]] = {}
        self._inner: dict[int, dict[int, list]] = {}
        self.a_star: int | None = None
        self.msg2_constants: tuple | None = None

    # -- symbolic interval arithmetic --------------------------------------
    def pull(self, word, t):
        """g_word(t), innermost letter applied first."""
        sys = self.sys
        if not sys.delta:
            n = 0
            for w in word:
                n = n * sys.m + w
            return (t + n) / sys.m ** len(word)
        for w in reversed(word):
            t = inverse_branch_1d(sys, t, w)
        return t

    def atom(self, word, cell: int, mp: bool = False, index: int = -1) -> Atom:
        lo, hi = self.cells[cell]
        z = self.centers[cell]
        if mp:
            lo, hi, z = nm.mp(lo), nm.mp(hi), nm.mp(z)
        word = tuple(int(w) for w in word)
        return Atom(len(word) + 1, word, cell,
                    (self.pull(word, lo), self.pull(word, hi)),
                    normalize((self.pull(word, z),)), index)

    # -- levels ------------------------------------------------------------
    def atoms_level(self, n: int) -> list:
        if n < 1:
            raise ValueError("levels start at 1")
        if n > self.depth_cap:
            raise TilingDepthCap(f"level {n} exceeds depth cap {self.depth_cap}")
        if n in self._levels:
            return self._levels[n]
        if n == 1:
            atoms = [self.atom((), i) for i in range(len(self.cells))]
        else:
            prev = self.atoms_level(n - 1)
            raw = [((j,) + a.word, a.cell) for a in prev for j in range(self.sys.m)]
            atoms = [self.atom(w, c) for w, c in raw]
        atoms.sort(key=lambda a: a.interval[0])
        atoms = [Atom(a.level, a.word, a.cell, a.interval, a.base_point, i) for i, a in enumerate(atoms)]
        self._levels[n] = atoms
        return atoms

    def inner_table(self, gen: int) -> dict:
        """For each level-1 cell, the level-(gen+1) atoms inside it as (word, cell).

        Words are re-lettered so that g_word(cell') lies in the canonical lift
        of the parent cell.
        """
        if gen in self._inner:
            return self._inner[gen]
        m = self.sys.m
        table = {c: [] for c in range(len(self.cells))}
        for a in self.atoms_level(gen + 1):
            for c, (lo, hi) in enumerate(self.cells):
                tol = 1e-9 * (hi - lo)
                s = math.floor(a.interval[0] - lo + tol)
                if lo - tol <= a.interval[0] - s and a.interval[1] - s <= hi + tol:
                    w = (a.word[0] - m * s,) + a.word[1:]
                    table[c].append((w, a.cell))
        for c in table:
            table[c].sort(key=lambda wc: float(self.pull(wc[0], self.cells[wc[1]][0])))
        self._inner[gen] = table
        return table

    def descendants(self, atom: Atom, gen: int, mp: bool = True) -> list:
        """Atoms of level atom.level + gen inside ``atom``."""
        if gen == 0:
            return [atom]
        out = []
        for w, c in self.inner_table(gen)[atom.cell]:
            out.append(self.atom(atom.word + w, c, mp=mp))
        return out

    def atom_containing(self, z, n: int, tol: float = 1e-9) -> Atom:
        """The level-n atom containing z.

        Float z is limited to the depth cap; an mpfr z is handled exactly in
        the working precision at any level.
        """
        z = z[0] if isinstance(z, (tuple, list)) else z
        exact = nm.is_mp(z)
        if not exact:
            z = float(z)
            if n > self.depth_cap:
                raise TilingDepthCap(f"level {n} exceeds depth cap {self.depth_cap}")
        z = nm.frac(z)
        orbit = [z]
        for _ in range(n - 1):
            orbit.append(apply(self.sys, (orbit[-1],))[0])
        t_end = orbit[-1]
        cell = None
        for c, (lo, hi) in enumerate(self.cells):
            s = nm.floor(t_end - lo)
            t = t_end - s
            if lo <= t <= hi:
                if cell is not None:
                    raise BoundaryAmbiguity(f"{z} lies on a level-{n} atom boundary")
                cell, tl = c, t
        if cell is None:
            raise BoundaryAmbiguity(f"{z} not covered at level {n}")
        word = []
        t = tl
        for j in range(n - 2, -1, -1):
            target = orbit[j]
            best = None
            for i in range(self.sys.m):
                g = inverse_branch_1d(self.sys, t, i)
                d = abs(nm.wrap(g - target))
                if best is None or d < best[0]:
                    best = (d, i, g)
            word.insert(0, best[1])
            t = best[2]
        atom = self.atom(word, cell, mp=exact)
        lo, hi = atom.interval
        x = z - nm.floor(z - lo)
        if min(abs(x - lo), abs(hi - x)) < tol * (hi - lo):
            raise BoundaryAmbiguity(f"{z} is within tolerance of an atom boundary")
        return atom


# ---------------------------------------------------------------------------
# certification

@dataclass
class TilingCertificate:
    max_n: int
    level_table: list            # (n, count, min diam, max diam, total length)
    msg2_C: float
    msg2_sigma: float
    msg2_ok: bool
    a_star: int | None
    msg0_ok: bool
    disjoint_ok: bool
    covering_ok: bool
    nu1_ok: bool
    nu2_c: float
    nu2_ok: bool
    definition_ok: bool
    failures: list

    @property
    def ok(self) -> bool:
        return (self.msg2_ok and self.msg0_ok and self.disjoint_ok and self.covering_ok
                and self.nu1_ok and self.nu2_ok and self.definition_ok)

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d

    def level_csv(self) -> str:
        rows = ["level,count,min_diameter,max_diameter,total_length"]
        rows += [f"{n},{c},{a:.17g},{b:.17g},{t:.17g}" for n, c, a, b, t in self.level_table]
        return "\n".join(rows) + "\n"


def certify_tiling(tiling: TilingFamily, max_n: int, nu2_samples: int = 20,
                   seed: int = 0) -> TilingCertificate:
    failures = []
    sys = tiling.sys
    eb = expansion_bounds(sys)
    table = []
    disjoint_ok = covering_ok = nu1_ok = True
    for n in range(1, max_n + 1):
        atoms = tiling.atoms_level(n)
        lens = np.array([float(a.diameter) for a in atoms])
        total = float(lens.sum())
        table.append((n, len(atoms), float(lens.min()), float(lens.max()), total))
        if (lens <= 0).any():
            nu1_ok = False
            failures.append(f"level {n}: atom with nonpositive length")
        if abs(total - 1) > 1e-6:
            covering_ok = False
            failures.append(f"level {n}: total length {total}")
        for a, b in zip(atoms, atoms[1:] + [atoms[0]]):
            gap = (b.interval[0] - a.interval[1] + 0.5) % 1.0 - 0.5
            if gap < -1e-9:
                disjoint_ok = False
                failures.append(f"level {n}: atoms {a.index} and {b.index} overlap")
            elif gap > 1e-9:
                covering_ok = False
                failures.append(f"level {n}: gap after atom {a.index}")
    # MSG2: diam <= C exp(-sigma n)
    ns = np.array([t[0] for t in table], dtype=float)
    mx = np.array([t[3] for t in table])
    if max_n >= 2:
        sigma = -np.polyfit(ns, np.log(mx), 1)[0]
    else:
        sigma = math.log(eb.sigma1)
    C = float(np.max(mx * np.exp(sigma * ns)))
    msg2_ok = bool(sigma >= math.log(eb.sigma1) - 0.05 and np.all(mx <= C * np.exp(-sigma * ns) * (1 + 1e-12)))
    if not msg2_ok:
        failures.append(f"MSG2 fit sigma={sigma:.4f} below log sigma1 - 0.05")
    # MSG0: smallest a_* with every cell containing a level-(g+1) atom for all a_* < g <= max_n - 1
    ok_gen = {}
    for g in range(1, max_n):
        inner = tiling.inner_table(g)
        ok_gen[g] = all(len(v) > 0 for v in inner.values())
    a_star = None
    for a in range(1, max_n):
        if all(ok_gen[g] for g in range(a + 1, max_n)):
            a_star = a
            break
    msg0_ok = a_star is not None and a_star < max_n - 1
    if not msg0_ok:
        failures.append("MSG0: no a_* found within the built levels")
    # definition condition (1) at the level of cells
    definition_ok = True
    eps = tiling.epsilon
    for c, (lo, hi) in enumerate(tiling.cells):
        z = tiling.centers[c]
        if not (z - lo >= eps / 2 - 1e-12 and hi - z >= eps / 2 - 1e-12
                and z - lo <= eps + 1e-12 and hi - z <= eps + 1e-12):
            definition_ok = False
            failures.append(f"cell {c} violates B(z, eps/2) <= cell <= B(z, eps)")
    # nu2 witness: worst-case grandchildren measure fraction
    nu2_c = float("nan")
    nu2_ok = True
    if a_star is not None and max_n > 1 + 2 * (a_star + 1):
        b = a = a_star + 1
        rng = np.random.default_rng(seed)
        lv = max(1, max_n - a - b)
        atoms = tiling.atoms_level(lv)
        fracs = []
        for idx in rng.choice(len(atoms), size=min(nu2_samples, len(atoms)), replace=False):
            om = atoms[int(idx)]
            tot = 0.0
            for th in tiling.descendants(om, b, mp=False):
                kids = tiling.descendants(th, a, mp=False)
                if not kids:
                    nu2_ok = False
                    break
                tot += min(float(k.diameter) for k in kids)
            fracs.append(tot / float(om.diameter))
        nu2_c = float(min(fracs)) if fracs else float("nan")
        nu2_ok = nu2_ok and nu2_c > 0
        if not nu2_ok:
            failures.append("nu2: some sampled atom has no qualifying descendants")
    tiling.a_star = a_star
    tiling.msg2_constants = (C, float(sigma))
    return TilingCertificate(max_n, table, C, float(sigma), msg2_ok, a_star, msg0_ok,
                             disjoint_ok, covering_ok, nu1_ok, nu2_c, nu2_ok,
                             definition_ok, failures)
