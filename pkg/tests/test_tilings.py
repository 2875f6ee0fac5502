import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schmidt_games.dynamics import apply, circle_expanding, doubling, inverse_branch_1d, iterate
from schmidt_games.geometry import ball_contains_ball, torus_distance
from schmidt_games.tilings import (BoundaryAmbiguity, SeparatedSet, TilingFamily,
                                   build_separated_set, certify_tiling)


def scan_atom(tiling, z, n):
    """Exhaustive oracle: every level-n atom whose lifted interval holds z."""
    out = []
    for a in tiling.atoms_level(n):
        lo, hi = a.interval
        x = z - math.floor(z - lo)
        if lo <= x <= hi:
            out.append(a)
    return out


# separated sets

def test_separated_single_point():
    assert len(build_separated_set(1, 0.6).points) == 1


def test_separated_circle_counts():
    s = build_separated_set(1, 0.1, seed=3)
    assert 5 <= len(s.points) <= 10
    assert s.min_separation() >= 0.1 - 1e-12
    assert s.covering_radius() < 0.1


def test_separated_torus_counts():
    s = build_separated_set(2, 0.3, seed=1)
    assert 4 <= len(s.points) <= 16
    assert s.min_separation() >= 0.3 - 1e-12
    assert s.covering_radius() < 0.3


# atoms

def test_level_one_partition(doubling_tiling):
    atoms = doubling_tiling.atoms_level(1)
    assert sum(float(a.diameter) for a in atoms) == pytest.approx(1, abs=1e-12)


def test_level_two_doubles_and_maps_onto_level_one(doubling_tiling):
    t = doubling_tiling
    one, two = t.atoms_level(1), t.atoms_level(2)
    assert len(two) == 2 * len(one)
    for a in two:
        lo, hi = a.interval
        parent = t.cells[a.cell]
        assert (2 * lo - parent[0]) % 1.0 == pytest.approx(0, abs=1e-12) or \
            (2 * lo - parent[0]) % 1.0 == pytest.approx(1, abs=1e-12)
        assert 2 * (hi - lo) == pytest.approx(parent[1] - parent[0], rel=1e-12)


def test_level_five_counts_and_diameters(doubling_tiling):
    t = doubling_tiling
    one = t.atoms_level(1)
    five = t.atoms_level(5)
    assert len(five) == 2 ** 4 * len(one)
    assert max(float(a.diameter) for a in five) <= max(float(a.diameter) for a in one) / 2 ** 4 + 1e-15


def test_atom_containing_base_point(doubling_tiling):
    for a in doubling_tiling.atoms_level(4)[::7]:
        assert doubling_tiling.atom_containing(a.base_point, 4).key() == a.key()


def test_atom_containing_voronoi_example():
    sep = SeparatedSet(0.25, ((0.0,), (0.25,), (0.5,), (0.75,)))
    t = TilingFamily(doubling(), 0.25, separated=sep)
    a = t.atom_containing((0.26,), 1)
    assert t.centers[a.cell] == 0.25


def test_atom_containing_matches_scan(doubling_tiling):
    rng = np.random.default_rng(7)
    for z in rng.random(100):
        try:
            a = doubling_tiling.atom_containing((float(z),), 6)
        except BoundaryAmbiguity:
            continue
        hits = scan_atom(doubling_tiling, float(z), 6)
        assert [h.key() for h in hits] == [a.key()]


def test_boundary_ambiguity_reported(doubling_tiling):
    a = doubling_tiling.atoms_level(3)[5]
    with pytest.raises(BoundaryAmbiguity):
        doubling_tiling.atom_containing((float(a.interval[0]),), 3)


# certification

def test_certify_doubling_level_12(doubling_tiling):
    cert = certify_tiling(TilingFamily(doubling(), 0.1, 0), 12)
    assert cert.ok, cert.failures
    assert cert.a_star == 1
    assert abs(cert.msg2_sigma - math.log(2)) <= 0.02 * math.log(2)


def test_certify_perturbed_diameters():
    t = TilingFamily(circle_expanding(2, 0.05), 0.1, 0)
    cert = certify_tiling(t, 10)
    s1 = 2 - 0.1 * math.pi
    C = max(d * s1 ** n for n, _, _, d, _ in cert.level_table)
    for n, _, _, dmax, _ in cert.level_table:
        assert dmax <= C * s1 ** -n * (1 + 1e-12)
    assert cert.msg2_ok and cert.msg2_sigma >= math.log(s1) - 0.05


def test_certify_single_level():
    cert = certify_tiling(TilingFamily(doubling(), 0.1, 0), 1)
    assert cert.msg2_ok
    assert cert.msg2_C == pytest.approx(cert.level_table[0][3] * math.exp(cert.msg2_sigma))


# invariants

def test_definition_condition_on_cells(doubling_tiling):
    """B(f^{n-1} x, eps/2) is inside f^{n-1}(atom) which is inside B(f^{n-1} x, eps)."""
    t = doubling_tiling
    eps = t.epsilon
    for a in t.atoms_level(4):
        img_lo = iterate(t.sys, (float(a.interval[0]),), 3)[0]
        z = iterate(t.sys, a.base_point, 3)[0]
        lo, hi = t.cells[a.cell]
        assert torus_distance((img_lo,), (lo,)) < 1e-9
        assert eps / 2 - 1e-12 <= t.centers[a.cell] - lo <= eps + 1e-12
        assert eps / 2 - 1e-12 <= hi - t.centers[a.cell] <= eps + 1e-12
        assert torus_distance((z,), (t.centers[a.cell],)) < 1e-9


@pytest.mark.parametrize("sys", [doubling(), circle_expanding(2, 0.05)])
def test_f_maps_atom_onto_parent(sys):
    t = TilingFamily(sys, 0.1, 0)
    rng = np.random.default_rng(0)
    atoms = t.atoms_level(5)
    for a in [atoms[i] for i in rng.choice(len(atoms), 10, replace=False)]:
        parent = t.atom(a.word[1:], a.cell)
        lo, hi = a.interval
        for s in rng.uniform(0.01, 0.99, 20):
            x = lo + s * (hi - lo)
            fx = apply(sys, (x % 1.0,))[0]
            assert parent.contains_point(fx, tol=1e-12)
            back = inverse_branch_1d(sys, fx, a.word[0])
            assert torus_distance((back,), (x % 1.0,)) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 6, 10])
def test_lebesgue_totals(doubling_tiling, n):
    assert sum(float(a.diameter) for a in doubling_tiling.atoms_level(n)) == pytest.approx(1, abs=1e-6)


def test_nesting_consistency(doubling_tiling):
    """atom_containing(z, n+m) lies inside atom_containing(z, n) for 10^3 random (z, n, m)."""
    rng = np.random.default_rng(11)
    bad = []
    for _ in range(1000):
        z, n, m = float(rng.random()), int(rng.integers(1, 8)), int(rng.integers(1, 5))
        try:
            A = doubling_tiling.atom_containing((z,), n)
            B = doubling_tiling.atom_containing((z,), n + m)
        except BoundaryAmbiguity:
            continue
        if not ball_contains_ball(A.enclosure, B.enclosure):
            bad.append((z, n, m))
    assert not bad, f"{len(bad)} of 1000 nestings fail, e.g. {bad[:3]}"


@given(st.floats(min_value=0, max_value=1, exclude_max=True), st.integers(1, 8))
def test_descendants_inside_parent(z, n):
    t = TilingFamily(doubling(), 0.1, 0)
    t.a_star = 1
    try:
        atom = t.atom_containing((z,), n)
    except BoundaryAmbiguity:
        return
    for gen in (2, 3):
        kids = t.descendants(atom, gen, mp=False)
        assert kids
        lo, hi = atom.interval
        for k in kids:
            assert k.level == n + gen
            s = math.floor(k.interval[0] - lo + 1e-12)
            assert lo - 1e-12 <= k.interval[0] - s and k.interval[1] - s <= hi + 1e-12
