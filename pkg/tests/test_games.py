import pytest

from schmidt_games import _numeric as nm
from schmidt_games.games import (AbsoluteState, BobInsideRemoval, BudgetExceeded,
                                 GameTranscript, IllegalRadius, ModifiedState, NotContained,
                                 NotNested, PotentialState, RemovalTooLarge, SchmidtState,
                                 WrongLevel, WrongTurn, absolute_step, modified_step, play_game,
                                 potential_step, replay, schmidt_step, tiling_params)
from schmidt_games.geometry import MetricBall, ball_contains_ball, ball_intersects_ball


def B(c, r):
    return MetricBall((c,), r)


# Schmidt

def test_schmidt_examples():
    s = SchmidtState(0.5, 0.5)
    schmidt_step(s, B(0.5, 0.1))
    schmidt_step(s, B(0.5, 0.05))
    s = SchmidtState(0.5, 0.5)
    schmidt_step(s, B(0.5, 0.1))
    with pytest.raises(IllegalRadius):
        schmidt_step(s, B(0.5, 0.06))
    with pytest.raises(NotContained):
        schmidt_step(s, B(0.56, 0.05))


def test_wrong_turn():
    s = SchmidtState(0.5, 0.5)
    with pytest.raises(WrongTurn):
        schmidt_step(s, B(0.5, 0.1), "alice")


# potential

def _potential(beta, gamma):
    s = PotentialState(beta, gamma)
    potential_step(s, B(0.5, 0.125))
    return s


def test_potential_examples():
    # rho = 1/8 scaled: budget (beta rho)^gamma
    rho = 0.125
    s = _potential(0.5, 1)
    potential_step(s, [B(0.5, 0.3 * rho), B(0.4, 0.2 * rho)])
    s = _potential(0.5, 1)
    with pytest.raises(BudgetExceeded):
        potential_step(s, [B(0.5, 0.3 * rho), B(0.4, 0.3 * rho)])
    s = _potential(0.5, 2)
    potential_step(s, [B(0.5, 0.3 * rho), B(0.4, 0.4 * rho)])


def test_potential_unit_scale_budget_arithmetic():
    """The rule at rho = 1 (outside the 1/8 game cap): budgets compare exactly."""
    for radii, gamma, ok in (([0.3, 0.2], 1, True), ([0.3, 0.3], 1, False), ([0.3, 0.4], 2, True)):
        s = PotentialState(0.5, gamma)
        s.bob.append(B(0.5, 1.0))
        if ok:
            potential_step(s, [B(0.5, r) for r in radii])
        else:
            with pytest.raises(BudgetExceeded):
                potential_step(s, [B(0.5, r) for r in radii])


# absolute

def test_absolute_examples():
    rho = 0.1
    s = AbsoluteState(0.3)
    absolute_step(s, B(0.5, rho))
    absolute_step(s, B(0.5, 0.3 * rho))
    s = AbsoluteState(0.3)
    absolute_step(s, B(0.5, rho))
    with pytest.raises(RemovalTooLarge):
        absolute_step(s, B(0.5, 0.31 * rho))
    absolute_step(s, B(0.45, 0.01))
    with pytest.raises(BobInsideRemoval):
        absolute_step(s, B(0.46, 0.03))


# modified

def test_modified_examples(doubling_tiling):
    t = doubling_tiling
    bob = t.atoms_level(3)[4]
    s = ModifiedState(2, 2, t)
    modified_step(s, bob)
    kids = t.descendants(bob, 2, mp=False)
    modified_step(s, kids[0])
    s = ModifiedState(2, 2, t)
    modified_step(s, bob)
    with pytest.raises(WrongLevel):
        modified_step(s, t.descendants(bob, 1, mp=False)[0] if t.descendants(bob, 1, mp=False)
                      else t.atoms_level(4)[0])
    outside = next(a for a in t.atoms_level(5)
                   if float(a.interval[1]) < float(bob.interval[0])
                   or float(a.interval[0]) > float(bob.interval[1]))
    with pytest.raises(NotNested):
        modified_step(s, outside)


def test_modified_requires_a_b_above_a_star(doubling_tiling):
    with pytest.raises(ValueError):
        ModifiedState(1, 2, doubling_tiling)


# driver

def test_depth_zero_only_opening():
    tr = play_game("schmidt", {"alpha": 0.5, "beta": 0.5, "rho1": 0.1, "dim": 1}, "concentric",
                   "concentric", 0, seed=1)
    assert [p for p, _ in tr.moves] == ["bob"]


def test_concentric_radius_law():
    rho1, depth = 0.1, 12
    tr = play_game("schmidt", {"alpha": 0.5, "beta": 0.5, "rho1": rho1, "dim": 2}, "concentric",
                   "concentric", depth, seed=0, precision=128)
    assert float(tr.final.radius) == pytest.approx(rho1 * 0.25 ** depth, rel=1e-12)


def test_schmidt_radius_closed_form():
    a, b, rho1 = 0.3, 0.6, 0.1
    tr = play_game("schmidt", {"alpha": a, "beta": b, "rho1": rho1, "dim": 2}, "random", "random",
                   15, seed=4, precision=128)
    bobs, alices = tr.bob_moves(), tr.alice_moves()
    for k, ball in enumerate(bobs):
        assert float(ball.radius) == pytest.approx(rho1 * (a * b) ** k, rel=1e-12)
    for k, ball in enumerate(alices):
        assert float(ball.radius) == pytest.approx(rho1 * (a * b) ** k * a, rel=1e-12)


def test_potential_random_bob_radius_bounds():
    beta, rho1 = 0.5, 0.01
    params = {"beta": beta, "gamma": 1.0, "rho1": rho1, "dim": 1}
    tr = play_game("potential", params, "empty", "random", 40, seed=2, precision=256)
    bobs = tr.bob_moves()
    radii = [float(b.radius) for b in bobs]
    assert all(x >= y for x, y in zip(radii, radii[1:]))
    assert radii[-1] <= rho1
    assert radii[-1] >= rho1 * beta ** (2 * 40)
    for x, y in zip(bobs, bobs[1:]):
        assert ball_contains_ball(x, y)


@pytest.mark.parametrize("kind,params", [
    ("schmidt", {"alpha": 0.4, "beta": 0.5, "rho1": 0.05, "dim": 2}),
    ("potential", {"beta": 0.5, "gamma": 1.0, "rho1": 0.05, "dim": 1}),
    ("absolute", {"beta": 0.25, "rho1": 0.05, "dim": 1}),
])
def test_replay_bit_identical(kind, params):
    tr = play_game(kind, params, "random", "random", 25, seed=9, precision=200)
    assert tr.ok
    back = GameTranscript.from_jsonl(tr.to_jsonl())
    assert back.to_jsonl() == tr.to_jsonl()
    s1, s2 = replay(tr), replay(back)
    assert s1.enclosure == s2.enclosure
    tr2 = play_game(kind, params, "random", "random", 25, seed=9, precision=200)
    assert tr2.to_jsonl() == tr.to_jsonl()


def test_modified_replay(doubling_tiling):
    params = {"a": 2, "b": 2, "n1": 3, "tiling": tiling_params(doubling_tiling)}
    tr = play_game("modified", params, "random", "random", 6, seed=3, precision=128,
                   tiling=doubling_tiling)
    assert tr.ok
    back = GameTranscript.from_jsonl(tr.to_jsonl(), doubling_tiling)
    assert back.to_jsonl() == tr.to_jsonl()
    levels = [a.level for _, a in tr.moves]
    assert levels == [3 + 2 * i for i in range(len(levels))]


def test_absolute_final_disjoint_from_removals():
    params = {"beta": 0.2, "rho1": 0.05, "dim": 1}
    for seed in range(10):
        tr = play_game("absolute", params, "random", "random", 20, seed=seed, precision=200)
        assert tr.ok
        st = replay(tr)
        with nm.precision(tr.precision):
            for rem in st.removals:
                if rem is not None:
                    assert not ball_intersects_ball(rem, st.enclosure)


def test_illegal_strategy_move_recorded():
    def bad_alice(state):
        prev = state.bob[-1]
        return MetricBall(prev.center, prev.radius)  # wrong radius

    tr = play_game("schmidt", {"alpha": 0.5, "beta": 0.5, "rho1": 0.05, "dim": 1}, bad_alice,
                   "random", 3, seed=0)
    assert not tr.ok
    assert tr.failure["player"] == "alice" and tr.failure["error"] == "IllegalRadius"
