import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schmidt_games.geometry import torus_distance
from schmidt_games.strategies.avoidance import EPS_IMPL, avoidance_choose, random_instance


def check_post(x1, rho, targets, alpha, x2, avoided):
    r = alpha * rho
    assert torus_distance(x1, x2) <= rho - r + 1e-12 * rho
    for i in avoided:
        assert torus_distance(x2, targets[i]) > 2 * r
    assert len(avoided) >= math.ceil(EPS_IMPL[len(x1)] * len(targets))


def test_empty_targets():
    assert avoidance_choose((0.3,), 0.1, [], 0.2, 1) == ((0.3,), [])


def test_single_target_circle():
    x2, avoided = avoidance_choose((0.5,), 0.1, [(0.5,)], 0.2, 1)
    assert avoided == [0]
    d = abs(x2[0] - 0.5)
    assert 0.04 < d <= 0.08 + 1e-15
    # grid oracle: such centers exist and every one satisfies the two inequalities
    grid = np.linspace(0.42, 0.58, 1601)
    ok = grid[(np.abs(grid - 0.5) <= 0.08) & (np.abs(grid - 0.5) > 0.04)]
    assert ok.size > 0


@pytest.mark.parametrize("n", [1, 2])
def test_monte_carlo_instances(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(1000):
        x1, rho, targets, alpha = random_instance(rng, n, 50, 0.2)
        x2, avoided = avoidance_choose(x1, rho, targets, alpha, n)
        check_post(x1, rho, targets, alpha, x2, avoided)


@given(st.integers(1, 2), st.integers(0, 40), st.integers(0, 2 ** 31), st.floats(0.05, 0.24))
def test_postconditions_property(n, n_targets, seed, alpha):
    rng = np.random.default_rng(seed)
    x1, rho, targets, _ = random_instance(rng, n, n_targets, alpha)
    x2, avoided = avoidance_choose(x1, rho, targets, alpha, n)
    if targets:
        check_post(x1, rho, targets, alpha, x2, avoided)
    else:
        assert x2 == tuple(x1) and avoided == []
