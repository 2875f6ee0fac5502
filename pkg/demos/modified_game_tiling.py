"""
The modified game on a tiling of the circle
============================================

Instead of balls the players pick atoms of a Markov-like tiling built from a
maximal separated set.  The script certifies the tiling, derives a, b and r
and plays against a Bob who opens on an atom carrying a preimage of y.
"""

from schmidt_games.experiment import ExperimentConfig, prepare

prep = prepare(ExperimentConfig(system="doubling", kind="modified", y=[0.0], epsilon=0.1,
                                bob="hole_seeking"))
cert, const = prep.certificate, prep.constants
print(f"tiling: a_* = {cert.a_star}, log expansion {cert.msg2_sigma:.4f} per level")
print(f"a = {const.a}, b = {const.b}, r = {const.r}, opening level n1 = {const.n1}")

res = prep.play(seed=0)
for entry in res.transcript.meta["strategy_log"]:
    print(f"step {entry['step']} at level {entry['level']}: {entry['tracked']} components "
          f"tracked, cleared by step end: {entry['claim_ok']}")
print("step claims:", res.report.details["step_claims"], "passed:", res.passed)
