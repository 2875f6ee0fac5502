from fractions import Fraction

import pytest

from schmidt_games import _numeric as nm
from schmidt_games.experiment import ExperimentConfig, prepare
from schmidt_games.games import play_game, replay

KIND_CONFIGS = {
    "schmidt": dict(system="cat", kind="schmidt", y=[0.5, 0.5], alice="random"),
    "absolute": dict(system="doubling", kind="absolute", beta=0.25, alice="random"),
    "potential": dict(system="doubling", kind="potential", alice="random"),
    "modified": dict(system="doubling", kind="modified", alice="random"),
}


def _play(kind, bob, seed, depth=12, alice=None):
    cfg = dict(KIND_CONFIGS[kind], bob=bob, depth=depth)
    if alice:
        cfg["alice"] = alice
    prep = prepare(ExperimentConfig(**cfg))
    return play_game(kind, prep.params, prep.alice(), bob, depth, seed, prep.precision,
                     tiling=prep.tiling), prep


@pytest.mark.parametrize("kind", sorted(KIND_CONFIGS))
@pytest.mark.parametrize("bob", ["random", "concentric", "hole_seeking"])
def test_policies_legal_and_deterministic(kind, bob):
    tr, prep = _play(kind, bob, 5)
    assert tr.ok, tr.failure
    replay(tr, prep.tiling)
    again, _ = _play(kind, bob, 5)
    assert again.to_jsonl() == tr.to_jsonl()


@pytest.mark.parametrize("kind", ["schmidt", "potential", "modified"])
def test_random_policy_depends_on_seed(kind):
    a, _ = _play(kind, "random", 1)
    b, _ = _play(kind, "random", 2)
    assert a.to_jsonl() != b.to_jsonl()


def test_concentric_schmidt_move():
    tr, prep = _play("schmidt", "concentric", 3)
    beta = nm.mp(prep.params["beta"])
    moves = [m for _, m in tr.moves]
    with nm.precision(tr.precision):
        for prev, bob in zip(moves[1::2], moves[2::2]):
            assert bob.center == prev.center
            assert bob.radius == beta * prev.radius


def test_hole_seeking_potential_reaches_preimage():
    """Against an empty Alice, Bob settles on a dyadic point, a preimage of y = 0."""
    tr, _ = _play("potential", "hole_seeking", 1, depth=30, alice="empty")
    assert tr.ok
    x = Fraction(*tr.bob_moves()[-1].center[0].as_integer_ratio())
    assert (x.denominator & (x.denominator - 1)) == 0
    assert x.denominator <= 2 ** 400


def test_random_potential_radius_range():
    tr, prep = _play("potential", "random", 4, depth=20, alice="empty")
    beta = prep.params["beta"]
    bobs = tr.bob_moves()
    for prev, cur in zip(bobs, bobs[1:]):
        ratio = float(cur.radius / prev.radius)
        assert beta - 1e-12 <= ratio <= (1 + beta) / 2 + 1e-12
