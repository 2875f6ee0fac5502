"""
How big is the set of orbits that miss a hole?
==============================================

Points whose orbit never enters a hole form a Cantor-like set.  When the
hole is a union of cylinders the exact dimension comes from a transfer
matrix; otherwise box counting is all we have.  Shrinking the hole pushes
the dimension toward 1, and distortion constants toward 1 with it.
"""

from schmidt_games import _numeric as nm
from schmidt_games.dynamics import doubling, system_from_name, tripling
from schmidt_games.geometry import MetricBall
from schmidt_games.verification import (distortion_bound, empirical_distortion,
                                        survivor_box_dimension)


def hole(center, radius):
    return MetricBall((nm.mp(center),), nm.mp(radius))


with nm.precision(128):
    # middle third removed under x -> 3x: the Cantor set
    est = survivor_box_dimension(tripling(), hole(0.5, 1 / 6), 14)
    print(f"tripling, middle cylinder: fit {est.slope:.4f}, oracle {est.oracle:.4f}")

    # no "00" in the binary expansion: golden-mean shift
    est = survivor_box_dimension(doubling(), hole(0.125, 0.125), 14)
    print(f"doubling, word 00 removed:  fit {est.slope:.4f}, oracle {est.oracle:.4f}")

    # small holes leave almost everything
    for r in (1e-2, 1e-3, 1e-4):
        est = survivor_box_dimension(doubling(), hole(0.3, r), 16)
        print(f"doubling, hole radius {r:g}: fit {est.slope:.4f}")

# distortion of a nonlinear circle map shrinks with the scale c
sys = system_from_name("ce:2:0.05")
for c in (0.1, 0.01, 0.001):
    print(f"c = {c:g}: measured K = {empirical_distortion(sys, c, 20, 10_000):.5f}, "
          f"bound {distortion_bound(sys, c):.5f}")
