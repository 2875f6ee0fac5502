"""The ten acceptance criteria at their stated sizes and tolerances.

Each test prints one PASS/FAIL line (also collected into the terminal summary)
before asserting, so a failing criterion still reports its numbers.
"""

import math
import time

import numpy as np
import pytest

from schmidt_games import _numeric as nm
from schmidt_games.dynamics import doubling, system_from_name, tripling
from schmidt_games.experiment import ExperimentConfig, prepare
from schmidt_games.games import GameRuleError, GameTranscript, WrongTurn, new_state, play_game, \
    replay, step
from schmidt_games.geometry import MetricBall, torus_distance
from schmidt_games.strategies.avoidance import ALPHA_BOUND, EPS_IMPL, avoidance_choose, \
    random_instance
from schmidt_games.strategies.bob import make_player, random_illegal_move
from schmidt_games.strategies.modified import minimal_a
from schmidt_games.strategies.potential import minimal_r
from schmidt_games.tilings import TilingFamily, certify_tiling
from schmidt_games.verification import (distortion_bound, drop_removal, empirical_distortion,
                                        rectangle_bruteforce_hits, required_removals,
                                        survivor_box_dimension, verify_transcript)

from conftest import ACCEPTANCE_LINES


def report(n: int, ok: bool, detail: str, elapsed: float, limit: float | None = None):
    within = limit is None or elapsed < limit
    line = (f"criterion {n:2d}: {'PASS' if ok and within else 'FAIL'}  {detail}  "
            f"[{elapsed:.1f} s" + (f" / limit {limit:.0f} s]" if limit else "]"))
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line
    assert within, line


# ---------------------------------------------------------------------------
# 1. rule enforcement

RULE_CONFIGS = {
    "schmidt": dict(system="cat", kind="schmidt", y=[0.5, 0.5], alice="random", beta=0.5),
    "absolute": dict(system="doubling", kind="absolute", alice="random", beta=0.25),
    "potential": dict(system="doubling", kind="potential", alice="random", beta=0.5),
    "modified": dict(system="doubling", kind="modified", alice="random"),
}


def _sizes(state) -> tuple:
    return tuple(len(v) for v in vars(state).values() if isinstance(v, list))


def _illegal_attempts(prep, n_attempts: int, rng) -> tuple:
    """Walk legal random games and try one illegal move at every state."""
    kind = prep.config.kind
    tried = correct = 0
    seed = 0
    with nm.precision(prep.precision):
        while tried < n_attempts:
            alice = make_player("random", "alice", seed, prep.params)
            bob = make_player("random", "bob", seed, prep.params)
            state = new_state(kind, prep.params, prep.tiling)
            step(state, bob.opening(state), "bob")
            for _ in range(2 * 25):
                if tried >= n_attempts:
                    break
                who = state.whose_turn
                if rng.random() < 0.1:
                    other = "bob" if who == "alice" else "alice"
                    move, err = (alice if who == "alice" else bob)(state), WrongTurn
                    player = other
                else:
                    move, err = random_illegal_move(state, rng)
                    player = who
                snapshot = _sizes(state)
                tried += 1
                try:
                    step(state, move, player)
                except GameRuleError as exc:
                    correct += type(exc) is err and _sizes(state) == snapshot
                mover = alice if who == "alice" else bob
                step(state, mover(state), who)
            seed += 1
    return tried, correct


def test_criterion_1_rule_enforcement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    details, ok = [], True
    for kind, cfg in RULE_CONFIGS.items():
        prep = prepare(ExperimentConfig(**cfg, depth=10))
        tried, correct = _illegal_attempts(prep, 1000, rng)
        ok &= tried == correct == 1000
        details.append(f"{kind} {correct}/{tried}")
    # 10^3 legal random games, 250 per kind, replay deterministically
    replayed = 0
    for kind, cfg in RULE_CONFIGS.items():
        prep = prepare(ExperimentConfig(**cfg, depth=10))
        for seed in range(250):
            tr = play_game(kind, prep.params, "random", "random", 10, seed, prep.precision,
                           tiling=prep.tiling)
            again = play_game(kind, prep.params, "random", "random", 10, seed, prep.precision,
                              tiling=prep.tiling)
            text = tr.to_jsonl()
            loaded = GameTranscript.from_jsonl(text, prep.tiling)
            replay(loaded, prep.tiling)
            replayed += tr.ok and again.to_jsonl() == text and loaded.to_jsonl() == text
    ok &= replayed == 1000
    details.append(f"replayed {replayed}/1000")
    report(1, ok, "illegal rejected: " + ", ".join(details), time.perf_counter() - t0, 60)


# ---------------------------------------------------------------------------
# 2. potential-game strategy, and 10. mutation sensitivity on its transcripts

@pytest.fixture(scope="module")
def criterion2_runs():
    t0 = time.perf_counter()
    runs = []
    for system in ("doubling", "ce:2:0.05"):
        for y in (0.0, 0.3):
            for beta in (0.3, 0.5):
                for bob in ("random", "hole_seeking"):
                    prep = prepare(ExperimentConfig(system=system, kind="potential", y=[y],
                                                    beta=beta, gamma=1.0, bob=bob))
                    assert prep.depth >= 10 * prep.constants.r
                    for seed in range(200):
                        res = prep.play(seed)
                        runs.append(((system, y, beta, bob), res))
    return runs, time.perf_counter() - t0


def test_criterion_2_potential_strategy(criterion2_runs):
    runs, elapsed = criterion2_runs
    by_cell, bad = {}, []
    for cell, res in runs:
        rep = res.report
        captured = rep is not None and rep.details["captured"]
        ok = res.passed and (captured or rep.min_distance >= rep.c / 2)
        by_cell.setdefault(cell, []).append(ok)
        if not ok:
            bad.append((cell, res.seed))
    ok = all(all(v) and len(v) == 200 for v in by_cell.values()) and len(by_cell) == 16
    worst = min(sum(v) for v in by_cell.values())
    n_capt = sum(1 for _, r in runs if r.report and r.report.details["captured"])
    report(2, ok, f"{len(by_cell)} cells x 200 games, worst cell {worst}/200, "
                  f"{n_capt} captured by a removal, failures {bad[:3]}", elapsed, 600)


def test_criterion_10_mutation_sensitivity(criterion2_runs):
    t0 = time.perf_counter()
    runs, _ = criterion2_runs
    mutations = failed = 0
    for _, res in runs:
        tr = res.transcript
        if not res.passed:
            continue
        for i, j in required_removals(tr):
            mutations += 1
            failed += not verify_transcript(drop_removal(tr, i, j)).passed
    ok = mutations > 0 and failed >= 0.95 * mutations
    report(10, ok, f"{failed}/{mutations} mutations that drop a required removal fail "
                   f"verification", time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 3. Schmidt-game strategy on the torus

def test_criterion_3_torus_strategy():
    t0 = time.perf_counter()
    details, ok = [], True
    for system in ("cat", "perturbed_cat:0.001"):
        for beta in (0.3, 0.5):
            preps = {bob: prepare(ExperimentConfig(system=system, kind="schmidt", y=[0.5, 0.5],
                                                   beta=beta, bob=bob))
                     for bob in ("random", "hole_seeking")}
            passed = brute = brute_ok = 0
            for seed in range(100):
                prep = preps["random" if seed % 2 == 0 else "hole_seeking"]
                assert prep.depth >= 10 * prep.constants.r
                res = prep.play(seed)
                good = res.passed and res.report.guaranteed_horizon > 0
                if good and seed % 4 == 0:
                    brute += 1
                    hits = rectangle_bruteforce_hits(res.transcript, res.report.guaranteed_horizon)
                    brute_ok += hits == []
                    good = hits == []
                passed += good
            ok &= passed == 100 and brute_ok == brute == 25
            details.append(f"{system} beta={beta}: {passed}/100 (brute force {brute_ok}/{brute})")
    report(3, ok, "; ".join(details), time.perf_counter() - t0, 1200)


# ---------------------------------------------------------------------------
# 4. modified-game strategy

def test_criterion_4_modified_strategy():
    t0 = time.perf_counter()
    prep = prepare(ExperimentConfig(system="doubling", kind="modified", y=[0.0], epsilon=0.1,
                                    bob="random"))
    const = prep.constants
    assert const.b == prep.certificate.a_star + 1
    claims = passed = 0
    for seed in range(100):
        res = prep.play(seed)
        log = res.transcript.meta["strategy_log"]
        claims += all(e["claim_ok"] for e in log) and all(res.report.details["step_claims"])
        passed += res.passed
    ok = claims == passed == 100
    report(4, ok, f"a={const.a} b={const.b} r={const.r}: step claims {claims}/100, "
                  f"orbit avoidance {passed}/100", time.perf_counter() - t0, 600)


# ---------------------------------------------------------------------------
# 5. constant derivations

def test_criterion_5_constants():
    t0 = time.perf_counter()
    got = (minimal_r(0.5, 1.0, 2.0), minimal_r(1 / 3, 1.0, 3.0), minimal_a(2.0, 1))
    ok = got[0] == (4, 6) and got[1] == (2, 3) and got[2] >= 4
    report(5, ok, f"(r, N) = {got[0]}, {got[1]}; a = {got[2]}", time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 6. bounded distortion

def test_criterion_6_distortion():
    t0 = time.perf_counter()
    sys = system_from_name("ce:2:0.05")
    rows = [(c, empirical_distortion(sys, c, 20, 10_000), distortion_bound(sys, c))
            for c in (0.1, 0.01, 0.001)]
    ok = all(k <= b for _, k, b in rows) and rows[-1][1] <= 1.01
    detail = ", ".join(f"K({c:g}) = {k:.5f} <= {b:.5f}" for c, k, b in rows)
    report(6, ok, detail, time.perf_counter() - t0, 120)


# ---------------------------------------------------------------------------
# 7. tiling certification

def test_criterion_7_tiling():
    t0 = time.perf_counter()
    cert = certify_tiling(TilingFamily(doubling(), 0.1, 0), 12)
    rel = abs(cert.msg2_sigma - math.log(2)) / math.log(2)
    ok = (cert.a_star is not None and cert.msg0_ok and rel <= 0.02 and cert.disjoint_ok
          and cert.covering_ok)
    report(7, ok, f"a_* = {cert.a_star}, sigma = {cert.msg2_sigma:.5f} ({100 * rel:.2f}% from "
                  f"log 2), disjoint {cert.disjoint_ok}, covering {cert.covering_ok}",
           time.perf_counter() - t0, 120)


# ---------------------------------------------------------------------------
# 8. dimension oracles

def test_criterion_8_dimension():
    t0 = time.perf_counter()
    with nm.precision(128):
        cantor = survivor_box_dimension(tripling(), MetricBall((nm.mp(0.5),), nm.mp(1) / 6), 14)
        golden = survivor_box_dimension(doubling(), MetricBall((nm.mp(0.125),), nm.mp(0.125)), 14)
    phi = math.log((1 + math.sqrt(5)) / 2) / math.log(2)
    ok = (abs(cantor.slope - math.log(2) / math.log(3)) <= 0.05 and abs(golden.slope - phi) <= 0.05
          and math.isclose(cantor.oracle, math.log(2) / math.log(3))
          and math.isclose(golden.oracle, phi))
    report(8, ok, f"tripling fit {cantor.slope:.4f} vs {cantor.oracle:.5f}; doubling fit "
                  f"{golden.slope:.4f} vs {golden.oracle:.5f}", time.perf_counter() - t0, 120)


# ---------------------------------------------------------------------------
# 9. avoidance search

def test_criterion_9_avoidance():
    t0 = time.perf_counter()
    details, ok = [], True
    for n in (1, 2):
        rng = np.random.default_rng(900 + n)
        success, worst = 0, math.inf
        for _ in range(1000):
            alpha = float(rng.uniform(0.02, ALPHA_BOUND[n] - 1e-3))
            x1, rho, targets, _ = random_instance(rng, n, int(rng.integers(1, 60)), alpha)
            x2, avoided = avoidance_choose(x1, rho, targets, alpha, n)
            r = alpha * rho
            good = (torus_distance(x1, x2) <= rho - r + 1e-12 * rho
                    and all(torus_distance(x2, targets[i]) > 2 * r for i in avoided))
            frac = len(avoided) / len(targets)
            worst = min(worst, frac)
            success += good and len(avoided) >= math.ceil(EPS_IMPL[n] * len(targets))
        ok &= success == 1000
        details.append(f"n={n}: {success}/1000, min avoided fraction {worst:.3f} "
                       f">= eps_impl {EPS_IMPL[n]}")
    report(9, ok, "; ".join(details), time.perf_counter() - t0, 60)
