"""Command-line entry point.

Exit codes: 0 success with every threshold met, 1 usage or configuration
error, 2 a game, verification or certification threshold failed.
Environment: SCHMIDT_GAMES_OUTPUT overrides the output directory and
SCHMIDT_GAMES_WORKERS the number of batch worker processes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import _numeric as nm
from .dynamics import InvalidSystem, system_from_name
from .experiment import ConfigError, ExperimentConfig, constants_table, prepare
from .games import GameRuleError, GameTranscript, replay, tiling_from_params
from .geometry import MetricBall
from .strategies.base import Infeasible

CSV_COLUMNS = ("seed", "kind", "depth", "pass", "min_distance", "horizon", "runtime_ms")
ENV_OUTPUT = "SCHMIDT_GAMES_OUTPUT"
ENV_WORKERS = "SCHMIDT_GAMES_WORKERS"

# flag name -> config field
_FLAGS = {"system": "system", "game": "kind", "y": "y", "alpha": "alpha", "beta": "beta",
          "gamma": "gamma", "a": "a", "b": "b", "rho1": "rho1", "epsilon": "epsilon",
          "tiling_seed": "tiling_seed", "tiling_levels": "tiling_levels", "alice": "alice",
          "bob": "bob", "depth": "depth", "games": "games", "seed": "seed", "output": "output"}


class UsageError(Exception):
    pass


def _game_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment file; flags override its values")
    p.add_argument("--system")
    p.add_argument("--game", choices=("schmidt", "absolute", "potential", "modified"))
    p.add_argument("--y", type=float, nargs="+")
    for name in ("alpha", "beta", "gamma", "rho1", "epsilon"):
        p.add_argument(f"--{name}", type=float)
    for name in ("a", "b", "depth", "games", "seed", "tiling-seed", "tiling-levels"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--alice", choices=("strategy", "concentric", "random", "empty"))
    p.add_argument("--bob", choices=("random", "concentric", "hole_seeking"))
    p.add_argument("--output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schmidt-games",
                                 description="Simulate and verify Schmidt-type games.")
    ap.add_argument("--json", action="store_true", help="machine-readable stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    _game_args(sub.add_parser("derive", help="print strategy constants"))
    p = sub.add_parser("play", help="play one game and write its transcript")
    _game_args(p)
    p.add_argument("--transcript", help="transcript path (default: <output>/<kind>_<seed>.jsonl)")
    p = sub.add_parser("batch", help="play many games and write a CSV summary")
    _game_args(p)
    p.add_argument("--csv", help="summary path (default: <output>/batch.csv)")
    p.add_argument("--workers", type=int)
    p.add_argument("--timings", action="store_true",
                   help="fill runtime_ms (otherwise blank so reruns are byte-identical)")
    p.add_argument("--transcripts", action="store_true", help="also write every transcript")
    p = sub.add_parser("verify", help="replay transcripts and report avoidance")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("tiling", help="build and certify a tiling")
    p.add_argument("--system", default="doubling")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--levels", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p = sub.add_parser("dimension", help="box-counting dimension of a survivor set")
    p.add_argument("--system", default="tripling")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--hole-cylinder", type=int, help="middle cylinder of this level")
    g.add_argument("--hole-word", help="cylinder of a digit word, e.g. 00")
    g.add_argument("--hole", type=float, nargs=2, metavar=("CENTER", "RADIUS"))
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--tolerance", type=float, default=0.05)
    p = sub.add_parser("distortion", help="measured distortion against its bound")
    p.add_argument("--system", default="ce:2:0.05")
    p.add_argument("--c", type=float, nargs="+", default=[0.1, 0.01, 0.001])
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    return ap


# ---------------------------------------------------------------------------
# configuration

def load_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
    for flag, key in _FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[key] = v
    if os.environ.get(ENV_OUTPUT):
        data["output"] = os.environ[ENV_OUTPUT]
    if "y" not in data:
        system = data.get("system", "doubling")
        data["y"] = [0.5, 0.5] if system_from_name(system).dim == 2 else [0.0]
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# output helpers

def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        print(text)


def _fmt_table(d: dict) -> str:
    w = max(len(k) for k in d) if d else 0
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in d.items())


def _fmt_float(x) -> str:
    x = float(x)
    return "inf" if math.isinf(x) else f"{x:.6e}"


def _outdir(cfg_output: str) -> Path:
    out = Path(os.environ.get(ENV_OUTPUT) or cfg_output)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands

def _partial_potential(cfg: ExperimentConfig) -> dict:
    """rho1-independent potential-game constants."""
    from .dynamics import expansion_bounds
    from .strategies.potential import hole_scale, minimal_r

    sys_ = cfg.spec
    r, N = minimal_r(cfg.beta, cfg.gamma, expansion_bounds(sys_).sigma1)
    cp, K = hole_scale(sys_)
    return {"kind": cfg.kind, "system": cfg.system, "beta": cfg.beta, "gamma": cfg.gamma,
            "r": r, "N": N, "c_prime": cp, "K": K, "rho1_max": cp / 100}


def cmd_derive(args) -> int:
    cfg = load_config(args)
    try:
        prep = prepare(cfg)
    except Infeasible as exc:
        if cfg.kind != "potential" or not cfg.spec.is_expanding:
            raise
        table = _partial_potential(cfg)
        table["error"] = str(exc)
        _emit(args, table, _fmt_table(table))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    table = constants_table(prep)
    bad = prep.constants.check() if prep.constants is not None else []
    table["violations"] = bad
    _emit(args, table, _fmt_table(table))
    return 0 if not bad else 2


def cmd_play(args) -> int:
    cfg = load_config(args)
    prep = prepare(cfg)
    res = prep.play(cfg.seed)
    path = Path(args.transcript) if args.transcript else \
        _outdir(cfg.output) / f"{cfg.kind}_{cfg.seed}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    res.transcript.save(path)
    rep = res.report.to_json() if res.report is not None else None
    payload = {"transcript": str(path), "ok": res.transcript.ok, "failure": res.transcript.failure,
               "report": rep, "passed": res.passed}
    text = f"transcript {path}\nlegal {res.transcript.ok}\npassed {res.passed}"
    if res.report is not None:
        text += (f"\nmin_distance {_fmt_float(res.report.min_distance)}"
                 f"\nhorizon {res.report.horizon}\nc {_fmt_float(res.report.c)}")
    _emit(args, payload, text)
    return 0 if res.passed else 2


_WORKER_PREP = None


def _worker_init(cfg_dict: dict) -> None:
    global _WORKER_PREP
    _WORKER_PREP = prepare(ExperimentConfig.from_dict(cfg_dict))


def _worker_play(seed: int):
    res = _WORKER_PREP.play(seed)
    return res.seed, res.passed, res.report, res.runtime_ms, res.transcript.to_jsonl()


def run_batch(cfg: ExperimentConfig, workers: int = 1) -> list:
    """Rows (seed, passed, report, runtime_ms, transcript_jsonl) sorted by seed."""
    seeds = list(range(cfg.seed, cfg.seed + cfg.games))
    if workers <= 1:
        _worker_init(cfg.to_dict())
        rows = [_worker_play(s) for s in seeds]
    else:
        with ProcessPoolExecutor(workers, initializer=_worker_init,
                                 initargs=(cfg.to_dict(),)) as ex:
            rows = list(ex.map(_worker_play, seeds))
    return sorted(rows, key=lambda r: r[0])


def batch_csv(cfg: ExperimentConfig, depth: int, rows: list, timings: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for seed, passed, rep, ms, _ in rows:
        w.writerow([seed, cfg.kind, depth, int(passed),
                    _fmt_float(rep.min_distance) if rep is not None else "",
                    rep.horizon if rep is not None else "",
                    f"{ms:.1f}" if timings else ""])
    return buf.getvalue()


def cmd_batch(args) -> int:
    cfg = load_config(args)
    workers = args.workers or int(os.environ.get(ENV_WORKERS, "1"))
    if workers < 1:
        raise UsageError("workers must be positive")
    depth = prepare(cfg).depth
    rows = run_batch(cfg, workers)
    out = _outdir(cfg.output)
    path = Path(args.csv) if args.csv else out / "batch.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(batch_csv(cfg, depth, rows, args.timings))
    if args.transcripts:
        for seed, _, _, _, text in rows:
            (out / f"{cfg.kind}_{seed}.jsonl").write_text(text)
    n_pass = sum(1 for r in rows if r[1])
    payload = {"csv": str(path), "games": len(rows), "passed": n_pass}
    _emit(args, payload, f"summary {path}\npassed {n_pass}/{len(rows)}")
    return 0 if n_pass == len(rows) else 2


def cmd_verify(args) -> int:
    from .verification import verify_transcript

    reports, all_ok = [], True
    for p in args.paths:
        try:
            tr = GameTranscript.load(p)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read transcript {p}: {exc}") from exc
        tiling = tiling_from_params(tr.params) if tr.kind == "modified" else None
        try:
            replay(tr, tiling)
            legal = tr.ok
        except GameRuleError as exc:
            legal, tr.failure = False, {"error": type(exc).__name__, "message": str(exc)}
        rep = verify_transcript(tr, tiling=tiling) if legal else None
        ok = legal and rep is not None and rep.passed
        all_ok &= ok
        reports.append({"path": p, "legal": legal, "passed": ok,
                        "report": rep.to_json() if rep else None})
    text = "\n".join(f"{r['path']}  legal={r['legal']}  passed={r['passed']}" +
                     (f"  min_distance={_fmt_float(r['report']['min_distance'])}"
                      f"  horizon={r['report']['horizon']}" if r["report"] else "")
                     for r in reports)
    _emit(args, {"reports": reports}, text)
    return 0 if all_ok else 2


def cmd_tiling(args) -> int:
    from .tilings import TilingFamily, certify_tiling

    tiling = TilingFamily(system_from_name(args.system), args.epsilon, args.seed)
    cert = certify_tiling(tiling, args.levels)
    if args.output or os.environ.get(ENV_OUTPUT):
        out = _outdir(args.output or "out")
        (out / "tiling_levels.csv").write_text(cert.level_csv())
    d = cert.to_json()
    summary = {k: d[k] for k in ("ok", "a_star", "msg2_C", "msg2_sigma", "msg0_ok", "msg2_ok",
                                 "disjoint_ok", "covering_ok", "nu1_ok", "nu2_c", "nu2_ok",
                                 "definition_ok", "failures")}
    _emit(args, d, _fmt_table(summary))
    return 0 if cert.ok else 2


def _hole_from_args(args, m: int) -> MetricBall:
    if args.hole is not None:
        return MetricBall((args.hole[0],), args.hole[1])
    if args.hole_word is not None:
        word = [int(ch) for ch in args.hole_word]
        if any(not 0 <= w < m for w in word):
            raise UsageError(f"hole word digits must lie in 0..{m - 1}")
        n = 0
        for w in word:
            n = n * m + w
        s = m ** len(word)
        return MetricBall(((n + 0.5) / s,), 0.5 / s)
    L = args.hole_cylinder if args.hole_cylinder is not None else 1
    s = m ** L
    n = s // 2   # the middle cylinder for odd m, the one starting at 1/2 for even m
    return MetricBall(((n + 0.5) / s,), 0.5 / s)


def cmd_dimension(args) -> int:
    from .verification import survivor_box_dimension

    sys_ = system_from_name(args.system)
    if sys_.kind != "circle_expanding":
        raise UsageError("survivor dimension is computed for circle maps")
    hole = _hole_from_args(args, sys_.m)
    est = survivor_box_dimension(sys_, hole, args.depth)
    d = est.to_json()
    text = f"fit {est.slope:.5f}"
    if est.oracle is not None:
        text += f"\noracle {est.oracle:.5f}\ndiscrepancy {est.discrepancy:.5f}"
    _emit(args, d, text)
    return 0 if est.discrepancy is None or est.discrepancy <= args.tolerance else 2


def cmd_distortion(args) -> int:
    from .verification import distortion_bound, empirical_distortion

    sys_ = system_from_name(args.system)
    rows = []
    for c in args.c:
        k_hat = empirical_distortion(sys_, c, args.k_max, args.samples, args.seed)
        bound = distortion_bound(sys_, c) if sys_.kind == "circle_expanding" else None
        rows.append({"c": c, "K_hat": k_hat, "bound": bound,
                     "ok": bound is None or k_hat <= bound})
    text = "\n".join(f"c={r['c']:<8g} K_hat={r['K_hat']:.6f}" +
                     (f" bound={r['bound']:.6f}" if r["bound"] is not None else "") +
                     f" {'ok' if r['ok'] else 'FAIL'}" for r in rows)
    _emit(args, {"rows": rows}, text)
    return 0 if all(r["ok"] for r in rows) else 2


COMMANDS = {"derive": cmd_derive, "play": cmd_play, "batch": cmd_batch, "verify": cmd_verify,
            "tiling": cmd_tiling, "dimension": cmd_dimension, "distortion": cmd_distortion}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        with nm.precision(256):
            return COMMANDS[args.command](args)
    except (UsageError, ConfigError, Infeasible, InvalidSystem, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
