"""
Avoiding a point with the potential game on the doubling map
=============================================================

Alice removes small neighborhoods from Bob's balls so that the limit point's
orbit under x -> 2x mod 1 never comes close to y.  This script derives her
constants, plays one game against a hole-seeking Bob and checks the outcome.
"""

from schmidt_games import _numeric as nm
from schmidt_games.experiment import ExperimentConfig, constants_table, prepare
from schmidt_games.verification import orbit_min_distance

# derive the strategy: step length r, component bound N, hole size c
cfg = ExperimentConfig(system="doubling", kind="potential", y=[0.3], beta=0.5, gamma=1.0,
                       bob="hole_seeking")
prep = prepare(cfg)
for key in ("r", "N", "c", "rho1"):
    print(f"{key:>5} = {constants_table(prep)[key]}")

# play one game of 10 r rounds; Bob keeps steering toward preimages of y
res = prep.play(seed=2)
tr, rep = res.transcript, res.report
removals = sum(len(fam) for fam in tr.alice_moves())
print(f"{len(tr.bob_moves())} Bob moves, {removals} removals by Alice")

# the final center is either inside a removal or its orbit avoids the hole
print(f"captured by a removal: {rep.details['captured']}")
print(f"guaranteed horizon {rep.guaranteed_horizon}, min distance {rep.min_distance:.3e}"
      f" vs c = {rep.c:.3e}, passed = {rep.passed}")

# an independent look at the orbit by direct iteration
with nm.precision(tr.precision):
    x = tr.bob_moves()[-1].center
    d = orbit_min_distance(prep.sys, x, (nm.mp(0.3),), rep.guaranteed_horizon - 1)
print(f"direct iteration: min distance {float(d):.3e}")
