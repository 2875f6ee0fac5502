"""Experiment configuration and one-call game setup shared by the CLI and scripts.

An :class:`ExperimentConfig` names a system, a game kind and the parameters;
:func:`prepare` derives the strategy constants once and returns a
:class:`PreparedGame` whose ``play(seed)`` runs and verifies one game.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

from . import _numeric as nm
from .dynamics import SystemSpec, system_from_name
from .games import GameTranscript, play_game
from .tilings import TilingFamily, certify_tiling
from .verification import AvoidanceReport, verify_transcript

KINDS = ("schmidt", "absolute", "potential", "modified")
BOB_POLICIES = ("random", "concentric", "hole_seeking")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    system: str = "doubling"
    kind: str = "potential"
    y: list = field(default_factory=lambda: [0.0])
    alpha: float | None = None
    beta: float = 0.5
    gamma: float = 1.0
    a: int | None = None
    b: int | None = None
    rho1: float | None = None
    epsilon: float = 0.1
    tiling_seed: int = 0
    tiling_levels: int = 12
    alice: str = "strategy"
    bob: str = "random"
    depth: int | None = None
    games: int = 10
    seed: int = 0
    output: str = "out"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if not isinstance(cfg.y, list):
            cfg.y = list(cfg.y) if isinstance(cfg.y, tuple) else [cfg.y]
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def spec(self) -> SystemSpec:
        try:
            return system_from_name(self.system)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if self.bob not in BOB_POLICIES:
            raise ConfigError(f"bob must be one of {BOB_POLICIES}")
        if self.alice not in ("strategy", "concentric", "random", "empty"):
            raise ConfigError("alice must be strategy, concentric, random or empty")
        sys = self.spec
        if len(self.y) != sys.dim:
            raise ConfigError(f"y must have {sys.dim} coordinates")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.kind == "absolute" and not self.beta < 1 / 3:
            raise ConfigError("the absolute game needs beta < 1/3")
        if self.kind == "potential" and not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.kind == "modified" and sys.kind != "circle_expanding":
            raise ConfigError("modified games are played on circle tilings")
        if self.kind == "schmidt" and self.alice == "strategy" and not sys.is_anosov:
            raise ConfigError("the Schmidt-game strategy needs a cat-map system")
        if self.kind == "potential" and not sys.is_expanding:
            raise ConfigError("the potential game needs an expanding map")
        if self.games < 1 or (self.depth is not None and self.depth < 1):
            raise ConfigError("games and depth must be positive")


@dataclass
class GameResult:
    seed: int
    transcript: GameTranscript
    report: AvoidanceReport | None
    runtime_ms: float

    @property
    def passed(self) -> bool:
        return self.transcript.ok and self.report is not None and self.report.passed


@dataclass
class PreparedGame:
    config: ExperimentConfig
    sys: SystemSpec
    params: dict
    depth: int
    precision: int
    constants: object = None
    tiling: TilingFamily | None = None
    certificate: object = None

    def alice(self):
        cfg = self.config
        if cfg.alice != "strategy":
            return cfg.alice
        y = tuple(cfg.y)
        if cfg.kind == "potential":
            from .strategies.potential import PotentialAlice
            return PotentialAlice(self.sys, self.constants, y)
        if cfg.kind == "schmidt":
            from .strategies.anosov import AnosovAlice
            return AnosovAlice(self.sys, cfg.beta, y, base=self.constants)
        if cfg.kind == "modified":
            from .strategies.modified import ModifiedAlice
            return ModifiedAlice(self.sys, self.constants, y)
        return "empty"

    def play(self, seed: int, verify: bool = True) -> GameResult:
        t = time.perf_counter()
        tr = play_game(self.config.kind, self.params, self.alice(), self.config.bob, self.depth,
                       seed, self.precision, tiling=self.tiling)
        rep = verify_transcript(tr, tiling=self.tiling) if verify and tr.ok else None
        return GameResult(seed, tr, rep, 1000 * (time.perf_counter() - t))


def prepare(cfg: ExperimentConfig) -> PreparedGame:
    """Derive constants and game parameters for ``cfg``."""
    cfg.validate()
    sys = cfg.spec
    y = tuple(cfg.y)
    if cfg.kind == "potential":
        from .strategies.potential import (derive_potential_constants, potential_params,
                                           potential_precision)
        const = derive_potential_constants(sys, cfg.beta, cfg.gamma, cfg.rho1, y)
        depth = cfg.depth or 10 * const.r
        return PreparedGame(cfg, sys, potential_params(sys, const, y), depth,
                            potential_precision(const, depth), const)
    if cfg.kind == "schmidt":
        if cfg.alice != "strategy":
            alpha = cfg.alpha if cfg.alpha is not None else 0.25
            params = {"alpha": alpha, "beta": cfg.beta, "rho1": cfg.rho1 or 0.01, "dim": sys.dim,
                      "system": sys.to_config(), "y": list(y)}
            depth = cfg.depth or 20
            return PreparedGame(cfg, sys, params, depth, _plain_precision(alpha * cfg.beta, depth))
        from .strategies.anosov import anosov_params, anosov_precision, derive_anosov_constants
        const = derive_anosov_constants(sys, cfg.beta, None, y)
        if cfg.alpha is not None and not math.isclose(cfg.alpha, const.alpha):
            raise ConfigError(f"the strategy plays alpha = {const.alpha}")
        rho1 = cfg.rho1 if cfg.rho1 is not None else const.rho_max
        depth = cfg.depth or 10 * const.r
        return PreparedGame(cfg, sys, anosov_params(sys, const, rho1, y), depth,
                            anosov_precision(const, depth, rho1), const)
    if cfg.kind == "modified":
        from .strategies.modified import (derive_modified_constants, modified_params,
                                          modified_precision)
        tiling = TilingFamily(sys, cfg.epsilon, cfg.tiling_seed)
        cert = certify_tiling(tiling, cfg.tiling_levels)
        if not cert.ok:
            raise ConfigError(f"tiling certification failed: {cert.failures[:3]}")
        if cfg.b is not None and cfg.b <= cert.a_star:
            raise ConfigError(f"b must exceed a_* = {cert.a_star}")
        tiling.a_star = cert.a_star
        const = derive_modified_constants(sys, cfg.b, tiling, y, a=cfg.a)
        depth = cfg.depth or 2 * const.r
        return PreparedGame(cfg, sys, modified_params(sys, const, tiling, y), depth,
                            modified_precision(const, depth), const, tiling, cert)
    # absolute game: no avoidance strategy, generic players only
    params = {"beta": cfg.beta, "rho1": cfg.rho1 or 0.01, "dim": sys.dim,
              "system": sys.to_config(), "y": list(y)}
    depth = cfg.depth or 20
    return PreparedGame(cfg, sys, params, depth, _plain_precision(cfg.beta ** 2, depth))


def _plain_precision(shrink: float, depth: int) -> int:
    return int(depth * -math.log2(shrink) + 128)


def constants_table(prep: PreparedGame) -> dict:
    """Flat dictionary of derived constants for printing."""
    out = {"kind": prep.config.kind, "system": prep.config.system, "depth": prep.depth,
           "precision": prep.precision}
    if prep.constants is not None:
        out.update(prep.constants.to_json())
    if prep.certificate is not None:
        out["a_star"] = prep.certificate.a_star
    return {k: nm.encode(v) for k, v in out.items()}
