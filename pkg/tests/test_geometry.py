import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schmidt_games.geometry import (DimensionMismatch, MetricBall, ball_contains_ball,
                                    ball_intersects_ball, normalize, torus_distance)

coord = st.floats(min_value=-3, max_value=3, allow_nan=False)
pt1 = st.tuples(coord)
pt2 = st.tuples(coord, coord)
small_r = st.floats(min_value=1e-4, max_value=0.24)


# examples

def test_distance_wraps_short_arc():
    assert torus_distance((0.1,), (0.9,)) == pytest.approx(0.2, abs=1e-15)


def test_distance_identity():
    assert torus_distance((0.37, 0.81), (0.37, 0.81)) == 0


def test_distance_diagonal():
    assert torus_distance((0.0, 0.0), (0.5, 0.5)) == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        torus_distance((0.1,), (0.1, 0.2))


@pytest.mark.parametrize("outer,inner,expect", [
    (((0.5,), 0.3), ((0.6,), 0.1), True),
    (((0.5,), 0.2), ((0.5,), 0.2), True),
    (((0.5,), 0.2), ((0.6,), 0.15), False),
])
def test_contains_examples(outer, inner, expect):
    assert ball_contains_ball(MetricBall(*outer), MetricBall(*inner)) is expect


@pytest.mark.parametrize("a,b,expect", [
    (((0.0,), 0.2), ((0.5,), 0.2), False),
    (((0.3,), 0.1), ((0.3,), 0.2), True),
    (((0.1,), 0.1), ((0.4,), 0.2), True),
])
def test_intersects_examples(a, b, expect):
    assert ball_intersects_ball(MetricBall(*a), MetricBall(*b)) is expect


def test_radius_must_be_positive():
    with pytest.raises(ValueError):
        MetricBall((0.1,), 0.0)


# invariants

@given(st.one_of(pt1, pt2))
def test_normalize_range_and_idempotent(x):
    n = normalize(x)
    assert all(0 <= v < 1 for v in n)
    assert normalize(n) == n


@given(pt2, pt2, pt2)
def test_metric_axioms_and_diameter(x, y, z):
    dxy = torus_distance(x, y)
    assert dxy <= 0.5 * math.sqrt(2) + 1e-15
    assert dxy == pytest.approx(torus_distance(y, x), abs=1e-15)
    assert dxy <= torus_distance(x, z) + torus_distance(z, y) + 1e-12


@given(pt2, pt2, pt2, small_r, small_r, small_r)
def test_containment_transitive(c1, c2, c3, r1, r2, r3):
    A, B, C = MetricBall(c1, r1), MetricBall(c2, r2), MetricBall(c3, r3)
    if ball_contains_ball(A, B) and ball_contains_ball(B, C):
        assert ball_contains_ball(A, C)


@given(pt2, pt2, small_r, small_r)
def test_contains_implies_intersects(c1, c2, r1, r2):
    A, B = MetricBall(c1, r1), MetricBall(c2, r2)
    if ball_contains_ball(A, B):
        assert ball_intersects_ball(A, B)


def test_containment_agrees_with_boundary_sampling():
    """10^4 random pairs; oracle samples 10^3 points on the inner boundary."""
    rng = np.random.default_rng(1)
    th = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
    agree = checked = 0
    for _ in range(10_000):
        c1 = rng.random(2)
        R = rng.uniform(0.01, 0.24)
        c2 = (c1 + rng.uniform(-0.3, 0.3, 2)) % 1.0
        r = rng.uniform(0.001, 0.24)
        d = np.abs(c2 - c1)
        d = np.hypot(*np.minimum(d, 1 - d))
        if abs(d - (R - r)) < 1e-4:   # within sampling resolution of the boundary
            continue
        pts = c2 + r * np.stack([np.cos(th), np.sin(th)], 1)
        e = np.abs(pts - c1) % 1.0
        e = np.minimum(e, 1 - e)
        oracle = bool((np.hypot(e[:, 0], e[:, 1]) <= R).all()) and r <= R
        got = ball_contains_ball(MetricBall(tuple(c1), R), MetricBall(tuple(c2), r))
        agree += got == oracle
        checked += 1
    assert checked > 9000
    assert agree == checked
