import math
from fractions import Fraction
from types import SimpleNamespace

import pytest

from schmidt_games import _numeric as nm
from schmidt_games.dynamics import doubling, tripling
from schmidt_games.experiment import ExperimentConfig, prepare
from schmidt_games.strategies.base import StrategyContext
from schmidt_games.strategies.modified import (alice_modified_next, derive_modified_constants,
                                               minimal_a, minimal_r_modified)
from schmidt_games.tilings import intervals_disjoint


def test_minimal_a_examples():
    assert minimal_a(2.0, 1) == 4
    assert minimal_a(3.0, 1) == 3
    assert minimal_a(3.0, 5) == 6


def test_minimal_r_scan():
    # independent scan: first r with 0.9^r * 6 r < 1
    r = next(r for r in range(1, 1000) if Fraction(9, 10) ** r * 6 * r < 1)
    assert r == 56
    assert minimal_r_modified(0.1, 6) == 56
    assert 0.9 ** 56 * 336 < 1 <= 0.9 ** 55 * 330


def test_constants_check(doubling_tiling):
    const = derive_modified_constants(doubling(), None, doubling_tiling, (0.0,))
    assert (const.a, const.b, const.r) == (4, 2, 56)
    assert const.check() == []
    assert 2 * const.epsilon / 2 ** (const.n1 - 6 * const.r) <= const.L / 100


def test_tripling_constants():
    from schmidt_games.tilings import TilingFamily, certify_tiling

    t = TilingFamily(tripling(), 0.1, 0)
    cert = certify_tiling(t, 8)
    t.a_star = cert.a_star
    const = derive_modified_constants(tripling(), None, t, (0.0,))
    assert const.a == max(3, cert.a_star + 1)
    assert const.check() == []


def _turn(tiling, const, bob, tracked):
    ctx = StrategyContext(doubling(), (nm.mp(0),), const, tracked=tracked,
                          log=[{"avoided": []}], extra={"c": nm.mp(const.c)})
    # one Alice move already made, so this is a mid-step turn
    state = SimpleNamespace(bob=[bob], alice=[None], tiling=tiling)
    return alice_modified_next(ctx, state)


def test_zero_tracked_gives_descendant(doubling_tiling):
    const = derive_modified_constants(doubling(), None, doubling_tiling, (0.0,))
    with nm.precision(200):
        bob = doubling_tiling.atom([0, 1, 1], 0, mp=True)
        mv = _turn(doubling_tiling, const, bob, [])
        assert mv.level == bob.level + const.a
        lo, hi = mv.interval
        assert bob.interval[0] <= lo < hi <= bob.interval[1]


def test_one_tracked_is_avoided(doubling_tiling):
    const = derive_modified_constants(doubling(), None, doubling_tiling, (0.0,))
    with nm.precision(200):
        bob = doubling_tiling.atom([1, 0, 1], 2, mp=True)
        for kid in doubling_tiling.descendants(bob, const.a, mp=True):
            mid = (kid.interval[0] + kid.interval[1]) / 2
            comp = (7, (mid - nm.mp(1e-9), mid + nm.mp(1e-9)))
            mv = _turn(doubling_tiling, const, bob, [comp])
            assert intervals_disjoint(comp[1], mv.interval)


def _exact(v) -> Fraction:
    return Fraction(*nm.mp(v).as_integer_ratio())


def _doubling_hits(interval, c: Fraction, n: int) -> list:
    """k < n with 2^k [lo, hi] mod 1 meeting [-c, c] mod 1, in exact rationals."""
    lo, hi = (_exact(v) for v in interval)
    out = []
    for k in range(n):
        a, length = (lo * 2 ** k) % 1, (hi - lo) * 2 ** k
        if length >= 1 or a <= c or a + length >= 1 - c:
            out.append(k)
    return out


@pytest.mark.parametrize("bob", ["random", "hole_seeking"])
def test_game_step_claims_exact(bob):
    prep = prepare(ExperimentConfig(system="doubling", kind="modified", y=[0.0], bob=bob))
    res = prep.play(1)
    assert res.passed
    tr = res.transcript
    const = prep.constants
    ab = const.a + const.b
    c = Fraction(const.c)
    log = tr.meta["strategy_log"]
    if bob == "hole_seeking":
        assert log[0]["tracked"] > 0
    with nm.precision(tr.precision):
        alices = [prep.tiling.atom(a.word, a.cell, mp=True) for a in tr.alice_moves()]
        if bob == "hole_seeking":
            # the oracle is not vacuous: Bob's opening atom carries a preimage of y
            opening = tr.bob_moves()[0]
            opening = prep.tiling.atom(opening.word, opening.cell, mp=True)
            assert _doubling_hits(opening.interval, c, const.r * ab) != []
        for j, entry in enumerate(log):
            assert entry["claim_ok"] and entry["uniqueness_ok"] and entry["count_ok"]
            atom = alices[const.r * (j + 1) - 1]
            assert _doubling_hits(atom.interval, c, (j + 1) * const.r * ab) == []
    assert math.isclose(tr.params["c"], const.c)
