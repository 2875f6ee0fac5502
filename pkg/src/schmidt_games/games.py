"""Rule-enforcing engines for four game types and a deterministic game driver.

* ``schmidt``: Bob and Alice alternate nested balls with r_k = beta r'_{k-1}
  and r'_k = alpha r_k.
* ``absolute`` (zero-dimensional): Alice removes a ball of radius at most
  beta rho_i; Bob's next ball must avoid it and keep radius >= beta rho_i.
* ``potential``: Alice removes a family of balls with sum rho_{i,j}^gamma at
  most (beta rho_i)^gamma; Bob has no avoidance duty.
* ``modified``: players alternate tiling atoms, levels increasing by a (Alice)
  and b (Bob), each atom nested in the previous one.

States are mutable; each ``*_step`` validates a move, appends it and returns
the state.  A game round is one Alice move followed by one Bob move, after
Bob's opening move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import _numeric as nm
from .dynamics import SystemSpec
from .geometry import (MAX_GAME_RADIUS, TOL, MetricBall, ball_contains_ball,
                       ball_intersects_ball)
from .tilings import Atom, TilingFamily, interval_contains

KINDS = ("schmidt", "absolute", "potential", "modified")


class GameRuleError(Exception):
    """A move violated the rules; ``player`` names the offender."""

    def __init__(self, msg: str, player: str | None = None):
        super().__init__(msg)
        self.player = player


class IllegalRadius(GameRuleError):
    pass


class NotContained(GameRuleError):
    pass


class BudgetExceeded(GameRuleError):
    pass


class BobShrankTooFast(GameRuleError):
    pass


class RemovalTooLarge(GameRuleError):
    pass


class BobInsideRemoval(GameRuleError):
    pass


class WrongLevel(GameRuleError):
    pass


class NotNested(GameRuleError):
    pass


class WrongTurn(GameRuleError):
    pass


def _rel_close(a, b, tol=TOL) -> bool:
    return abs(a - b) <= tol * abs(b)


def _check_cap(ball: MetricBall, player: str):
    if ball.radius > MAX_GAME_RADIUS:
        raise IllegalRadius(f"radius {float(ball.radius):.3g} exceeds the cap 1/8", player)


def _check_turn(state, player):
    if player is not None and player != state.whose_turn:
        raise WrongTurn(f"it is {state.whose_turn}'s turn, not {player}'s", player)
    return state.whose_turn


# ---------------------------------------------------------------------------
# states

@dataclass
class SchmidtState:
    alpha: object
    beta: object
    bob: list = field(default_factory=list)
    alice: list = field(default_factory=list)

    kind = "schmidt"

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("alpha and beta must lie in (0, 1)")

    @property
    def whose_turn(self) -> str:
        return "bob" if len(self.bob) == len(self.alice) else "alice"

    @property
    def current(self) -> MetricBall:
        return self.bob[-1] if self.whose_turn == "alice" else self.alice[-1]

    @property
    def enclosure(self):
        if not self.bob:
            return None
        return self.bob[-1] if len(self.bob) > len(self.alice) else self.alice[-1]


@dataclass
class AbsoluteState:
    beta: object
    bob: list = field(default_factory=list)
    removals: list = field(default_factory=list)

    kind = "absolute"

    def __post_init__(self):
        if not 0 < self.beta < 1 / 3:
            raise ValueError("absolute games need 0 < beta < 1/3")

    @property
    def whose_turn(self) -> str:
        return "bob" if len(self.bob) == len(self.removals) else "alice"

    @property
    def enclosure(self):
        return self.bob[-1] if self.bob else None


@dataclass
class PotentialState:
    beta: object
    gamma: object
    bob: list = field(default_factory=list)
    removals: list = field(default_factory=list)

    kind = "potential"

    def __post_init__(self):
        if not (0 < self.beta < 1 and self.gamma > 0):
            raise ValueError("need 0 < beta < 1 and gamma > 0")

    @property
    def whose_turn(self) -> str:
        return "bob" if len(self.bob) == len(self.removals) else "alice"

    @property
    def enclosure(self):
        return self.bob[-1] if self.bob else None

    def all_removals(self):
        for fam in self.removals:
            yield from fam


@dataclass
class ModifiedState:
    a: int
    b: int
    tiling: TilingFamily
    bob: list = field(default_factory=list)
    alice: list = field(default_factory=list)

    kind = "modified"

    def __post_init__(self):
        a_star = self.tiling.a_star
        if a_star is not None and (self.a <= a_star or self.b <= a_star):
            raise ValueError(f"a and b must exceed a_* = {a_star}")
        if self.a < 1 or self.b < 1:
            raise ValueError("a and b must be positive")

    @property
    def whose_turn(self) -> str:
        return "bob" if len(self.bob) == len(self.alice) else "alice"

    @property
    def enclosure(self):
        if not self.bob:
            return None
        return self.bob[-1] if len(self.bob) > len(self.alice) else self.alice[-1]


# ---------------------------------------------------------------------------
# step functions

def schmidt_step(state: SchmidtState, move: MetricBall, player: str | None = None) -> SchmidtState:
    who = _check_turn(state, player)
    _check_cap(move, who)
    if who == "bob":
        if state.alice:
            prev = state.alice[-1]
            if not _rel_close(move.radius, state.beta * prev.radius):
                raise IllegalRadius(f"Bob radius must equal beta * {float(prev.radius):.6g}", who)
            if not ball_contains_ball(prev, move):
                raise NotContained("Bob's ball is not inside Alice's", who)
        state.bob.append(move)
    else:
        prev = state.bob[-1]
        if not _rel_close(move.radius, state.alpha * prev.radius):
            raise IllegalRadius(f"Alice radius must equal alpha * {float(prev.radius):.6g}", who)
        if not ball_contains_ball(prev, move):
            raise NotContained("Alice's ball is not inside Bob's", who)
        state.alice.append(move)
    return state


def _bob_radius_checks(state, move, who):
    prev = state.bob[-1]
    if move.radius < state.beta * prev.radius * (1 - TOL):
        raise BobShrankTooFast(f"radius below beta * {float(prev.radius):.6g}", who)
    if not ball_contains_ball(prev, move):
        raise NotContained("Bob's ball is not inside his previous ball", who)


def absolute_step(state: AbsoluteState, move, player: str | None = None) -> AbsoluteState:
    """Alice's move is a MetricBall (the removed neighborhood) or None (empty move)."""
    who = _check_turn(state, player)
    if who == "alice":
        if move is not None:
            rho = state.bob[-1].radius
            if move.radius > state.beta * rho * (1 + TOL):
                raise RemovalTooLarge(f"removal radius exceeds beta * {float(rho):.6g}", who)
        state.removals.append(move)
        return state
    _check_cap(move, who)
    if state.bob:
        _bob_radius_checks(state, move, who)
        rem = state.removals[-1]
        if rem is not None and ball_intersects_ball(rem, move):
            raise BobInsideRemoval("Bob's ball meets the removed neighborhood", who)
    state.bob.append(move)
    return state


def potential_step(state: PotentialState, move, player: str | None = None) -> PotentialState:
    """Alice's move is a list of MetricBall removals (possibly empty)."""
    who = _check_turn(state, player)
    if who == "alice":
        fam = list(move or [])
        rho = state.bob[-1].radius
        g = state.gamma
        total = sum((r.radius ** g for r in fam), 0 * rho)
        bound = (state.beta * rho) ** g
        if total > bound * (1 + TOL):
            raise BudgetExceeded(f"sum of radius^gamma {float(total):.6g} > {float(bound):.6g}", who)
        state.removals.append(fam)
        return state
    _check_cap(move, who)
    if state.bob:
        _bob_radius_checks(state, move, who)
    state.bob.append(move)
    return state


def _canonical_atom(state: ModifiedState, move: Atom) -> Atom:
    mp = nm.is_mp(move.interval[0])
    return state.tiling.atom(move.word, move.cell, mp=mp)


def modified_step(state: ModifiedState, move: Atom, player: str | None = None) -> ModifiedState:
    who = _check_turn(state, player)
    if move.cell < 0 or move.cell >= len(state.tiling.cells) or move.level != len(move.word) + 1:
        raise WrongLevel("malformed atom", who)
    atom = _canonical_atom(state, move)
    if who == "bob":
        if state.alice:
            prev = state.alice[-1]
            if atom.level != prev.level + state.b:
                raise WrongLevel(f"Bob must play level {prev.level + state.b}", who)
            if not interval_contains(prev.interval, atom.interval):
                raise NotNested("Bob's atom is not inside Alice's", who)
        state.bob.append(atom)
    else:
        prev = state.bob[-1]
        if atom.level != prev.level + state.a:
            raise WrongLevel(f"Alice must play level {prev.level + state.a}", who)
        if not interval_contains(prev.interval, atom.interval):
            raise NotNested("Alice's atom is not inside Bob's", who)
        state.alice.append(atom)
    return state


STEP = {"schmidt": schmidt_step, "absolute": absolute_step,
        "potential": potential_step, "modified": modified_step}


def new_state(kind: str, params: dict, tiling: TilingFamily | None = None):
    if kind == "schmidt":
        return SchmidtState(nm.mp(params["alpha"]), nm.mp(params["beta"]))
    if kind == "absolute":
        return AbsoluteState(nm.mp(params["beta"]))
    if kind == "potential":
        return PotentialState(nm.mp(params["beta"]), nm.mp(params["gamma"]))
    if kind == "modified":
        if tiling is None:
            tiling = tiling_from_params(params)
        return ModifiedState(int(params["a"]), int(params["b"]), tiling)
    raise ValueError(f"unknown game kind {kind!r}")


def step(state, move, player: str | None = None):
    return STEP[state.kind](state, move, player)


_TILING_CACHE: dict = {}


def tiling_from_params(params: dict) -> TilingFamily:
    cfg = params["tiling"]
    key = json.dumps(cfg, sort_keys=True)
    if key not in _TILING_CACHE:
        t = TilingFamily(SystemSpec.from_config(cfg["system"]), cfg["epsilon"], cfg["seed"])
        t.a_star = cfg.get("a_star")
        _TILING_CACHE[key] = t
    return _TILING_CACHE[key]


def tiling_params(tiling: TilingFamily) -> dict:
    return {"system": tiling.sys.to_config(), "epsilon": tiling.epsilon,
            "seed": tiling.seed, "a_star": tiling.a_star}


# ---------------------------------------------------------------------------
# transcripts

def encode_move(move):
    if move is None:
        return None
    if isinstance(move, MetricBall):
        return {"ball": move.to_json()}
    if isinstance(move, Atom):
        return {"atom": {"word": list(move.word), "cell": move.cell}}
    return {"family": [b.to_json() for b in move]}


def decode_move(obj, state=None):
    if obj is None:
        return None
    if "ball" in obj:
        return MetricBall.from_json(obj["ball"])
    if "atom" in obj:
        return state.tiling.atom(obj["atom"]["word"], obj["atom"]["cell"], mp=True)
    return [MetricBall.from_json(b) for b in obj["family"]]


@dataclass
class GameTranscript:
    kind: str
    params: dict
    moves: list                  # (player, move)
    depth: int
    seed: int
    precision: int
    final: object = None
    failure: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure is None

    def bob_moves(self) -> list:
        return [m for p, m in self.moves if p == "bob"]

    def alice_moves(self) -> list:
        return [m for p, m in self.moves if p == "alice"]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"type": "header", "kind": self.kind, "params": self.params,
                             "depth": self.depth, "seed": self.seed,
                             "precision": self.precision, "meta": self.meta}, sort_keys=True)]
        for i, (p, m) in enumerate(self.moves):
            lines.append(json.dumps({"type": "move", "turn": i, "player": p,
                                     "move": encode_move(m)}, sort_keys=True))
        fin = encode_move(self.final) if self.final is not None else None
        lines.append(json.dumps({"type": "final", "enclosure": fin, "failure": self.failure},
                                sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str, tiling: TilingFamily | None = None) -> "GameTranscript":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        head = rows[0]
        if head.get("type") != "header":
            raise ValueError("transcript must start with a header line")
        with nm.precision(head["precision"]):
            state = new_state(head["kind"], head["params"], tiling)
            moves = []
            for row in rows[1:]:
                if row["type"] == "move":
                    moves.append((row["player"], decode_move(row["move"], state)))
            tail = rows[-1]
            final = decode_move(tail.get("enclosure"), state) if tail["type"] == "final" else None
        return cls(head["kind"], head["params"], moves, head["depth"], head["seed"],
                   head["precision"], final, tail.get("failure"), head.get("meta", {}))

    @classmethod
    def load(cls, path, tiling: TilingFamily | None = None) -> "GameTranscript":
        with open(path) as fh:
            return cls.from_jsonl(fh.read(), tiling)


def replay(transcript: GameTranscript, tiling: TilingFamily | None = None):
    """Re-validate every move; returns the final state (raises GameRuleError)."""
    with nm.precision(transcript.precision):
        state = new_state(transcript.kind, transcript.params, tiling)
        for player, move in transcript.moves:
            step(state, move, player)
    return state


# ---------------------------------------------------------------------------
# driver

def play_game(kind: str, params: dict, alice, bob, depth: int, seed: int = 0,
              precision: int = 256, tiling: TilingFamily | None = None,
              meta: dict | None = None) -> GameTranscript:
    """Play Bob's opening plus ``depth`` rounds through the validating engine.

    ``alice`` and ``bob`` are callables ``(state) -> move``.  A strategy may
    expose ``opening(state)`` (Bob) and ``finish(transcript)`` hooks.  The
    first illegal move ends the game and is recorded as the failure.
    """
    from .strategies.bob import make_player

    alice = make_player(alice, "alice", seed, params)
    bob = make_player(bob, "bob", seed, params)
    moves = []
    failure = None
    with nm.precision(precision):
        state = new_state(kind, params, tiling)
        if hasattr(alice, "bind"):
            alice.bind(state)
        try:
            mv = bob(state)
            step(state, mv, "bob")
            moves.append(("bob", mv))
            for _ in range(depth):
                for who, player in (("alice", alice), ("bob", bob)):
                    mv = player(state)
                    step(state, mv, who)
                    moves.append((who, mv))
        except GameRuleError as exc:
            failure = {"player": exc.player, "error": type(exc).__name__, "message": str(exc)}
        tr = GameTranscript(kind, params, moves, depth, seed, precision,
                            state.enclosure, failure, dict(meta or {}))
        if hasattr(alice, "finish"):
            alice.finish(tr)
    return tr
