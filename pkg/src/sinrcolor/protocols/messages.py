"""Payloads carried by packets.

Any payload with a non-None ``color`` field tells its receivers the sender's
current color; only r1 (neighborhood) messages carry one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional


@dataclass(frozen=True)
class Color:
    color: int


@dataclass(frozen=True)
class Rank:
    """MIS competition announcement; ``tag`` separates concurrent competitions."""

    tag: Any
    rank: float
    color: Optional[int] = None


@dataclass(frozen=True)
class Dominate:
    color: Optional[int]
    # absolute start of the leader's active-interval schedule (ColorReduction)
    schedule_ref: Optional[float] = None


@dataclass(frozen=True)
class Request:
    leader: int
    used_base: Optional[int] = None
    color: Optional[int] = None


@dataclass(frozen=True)
class Grant:
    target: int
    base: Optional[int] = None
    color: Optional[int] = None


@dataclass(frozen=True)
class DoNotTransmit:
    """Sent on the r2 range, so it carries no color."""


@dataclass(frozen=True)
class StartColoring:
    color: Optional[int] = None


@dataclass(frozen=True)
class StartTransmit:
    """Sent on the r2 range, so it carries no color."""


@dataclass(frozen=True)
class AskColor:
    leader: int
    color: Optional[int] = None


@dataclass(frozen=True)
class Beacon:
    """Calibration probe payload."""

    color: Optional[int] = None
