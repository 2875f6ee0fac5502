"""Shared strategy plumbing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dynamics import SystemSpec


class Infeasible(ValueError):
    """No admissible constants for the requested parameters."""


class ComponentDepthExhausted(RuntimeError):
    """A diameter window needed more preimage depth than the hard cap allows."""


@dataclass
class StrategyContext:
    sys: SystemSpec
    y: tuple
    constants: object
    step: int = 0
    tracked: list = field(default_factory=list)
    log: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def n_count(beta_like: float, r: int, sigma1: float, log_k: float = math.log(2)) -> int:
    """floor((log K + r log(1/q)) / log sigma1) + 1, robust to rounding at integers."""
    v = (log_k + r * math.log(1 / beta_like)) / math.log(sigma1)
    return int(math.floor(v + 1e-9)) + 1


def to_jsonable(obj):
    """Dataclass fields to plain JSON values (mpfr as decimal strings)."""
    from .. import _numeric as nm
    out = {}
    for k, v in obj.__dict__.items():
        if isinstance(v, SystemSpec):
            v = v.to_config()
        elif isinstance(v, tuple):
            v = nm.encode(list(v))
        else:
            v = nm.encode(v)
        out[k] = v
    return out
