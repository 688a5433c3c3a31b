"""Geometric SINR reception model.

A transmission from ``u`` to ``v`` is decodable iff the received power
``P_u / d(u, v)**alpha`` is at least ``beta`` times the summed power of all
other concurrent transmissions plus the ambient noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional, Sequence

import numpy as np


class DegenerateGeometryError(ValueError):
    """Sender and receiver occupy the same point."""


class RangeClass(str, Enum):
    R1 = "r1"
    R2 = "r2"


@dataclass(frozen=True)
class SinrParams:
    alpha: float = 4.0
    beta: float = 10.0
    noise: float = 1e-9
    power: float = 1.0
    range_divisor: float = 2.0
    # multiplier between the r2 (coordination) range and the broadcast range
    r2_factor: float = 3.0
    # raise emitted power for r2 packets so that r2 is physically reachable
    scale_r2_power: bool = True

    def __post_init__(self):
        if not 2.0 <= self.alpha <= 6.0:
            raise ValueError(f"alpha must lie in [2, 6], got {self.alpha}")
        if self.beta <= 1.0:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if self.noise <= 0 or self.power <= 0:
            raise ValueError("noise and power must be positive")
        if self.range_divisor < 1.0:
            raise ValueError("range_divisor must be >= 1")

    @property
    def r2_power(self) -> float:
        if self.scale_r2_power:
            return self.power * self.r2_factor ** self.alpha
        return self.power


def transmission_range(p: SinrParams) -> float:
    """Largest distance at which an isolated transmission is decodable."""
    return (p.power / (p.beta * p.noise)) ** (1.0 / p.alpha)


def broadcast_range(p: SinrParams) -> float:
    """Neighborhood radius; strictly inside the transmission range for divisor > 1."""
    return (p.power / (p.range_divisor * p.beta * p.noise)) ** (1.0 / p.alpha)


def range_radius(p: SinrParams, rc: RangeClass) -> float:
    rb = broadcast_range(p)
    return rb * p.r2_factor if rc == RangeClass.R2 else rb


@dataclass(eq=False)
class Packet:
    """One in-flight transmission. Identity-compared."""

    origin: int
    origin_pos: tuple
    start: float
    end: float
    payload: Any = None
    broadcast_id: int = -1
    range_class: RangeClass = RangeClass.R1
    power: float = 1.0

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("packet must end after it starts")

    def overlaps(self, other: "Packet") -> bool:
        return self.start < other.end and other.start < self.end

    def same_broadcast(self, other: "Packet") -> bool:
        return (self.broadcast_id != -1 and self.origin == other.origin
                and self.broadcast_id == other.broadcast_id)


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def interferers(sender: Packet, concurrent: Iterable[Packet]) -> list:
    """Packets that count as interference against ``sender``.

    Excludes the sender's own packet and copies belonging to the same
    broadcast (same origin and broadcast id).
    """
    return [q for q in concurrent if q is not sender and not sender.same_broadcast(q)]


def sinr_feasible(sender: Packet, receiver_pos, concurrent: Iterable[Packet],
                  p: SinrParams) -> bool:
    d = _dist(sender.origin_pos, receiver_pos)
    if d == 0.0:
        raise DegenerateGeometryError("receiver coincides with sender")
    d = d ** p.alpha
    if d == 0.0:
        raise DegenerateGeometryError("receiver coincides with sender")
    signal = sender.power / d
    interference = 0.0
    for q in interferers(sender, concurrent):
        dq = _dist(q.origin_pos, receiver_pos) ** p.alpha
        if dq == 0.0:
            return False
        interference += q.power / dq
    return signal >= p.beta * (interference + p.noise)


def feasible_mask(sender_pos, sender_power: float, receiver_pos: np.ndarray,
                  interferer_pos: np.ndarray, interferer_power: np.ndarray,
                  p: SinrParams) -> np.ndarray:
    """Vectorized feasibility of one packet at many receivers.

    ``receiver_pos`` is (m, 2), ``interferer_pos`` is (k, 2).
    """
    dx = receiver_pos[:, 0] - sender_pos[0]
    dy = receiver_pos[:, 1] - sender_pos[1]
    d = np.hypot(dx, dy)
    if np.any(d == 0.0):
        raise DegenerateGeometryError("receiver coincides with sender")
    signal = sender_power / d ** p.alpha
    if len(interferer_pos):
        ix = receiver_pos[:, 0, None] - interferer_pos[None, :, 0]
        iy = receiver_pos[:, 1, None] - interferer_pos[None, :, 1]
        di = np.hypot(ix, iy)
        with np.errstate(divide="ignore"):
            contrib = interferer_power[None, :] / di ** p.alpha
        interference = contrib.sum(axis=1)
    else:
        interference = 0.0
    return signal >= p.beta * (interference + p.noise)


def deliverable_set(receiver: int, receiver_pos, instant: float,
                    in_flight: Sequence[Packet], p: SinrParams) -> Optional[Packet]:
    """Packet that ``receiver`` decodes among those in flight at ``instant``.

    Only packets whose reception window covers ``instant`` are candidates, and
    every packet overlapping a candidate's window interferes with it. A
    candidate is lost if the receiver transmits at any point of its window.
    When several candidates are feasible only the earliest-starting one is
    decoded. With ``beta > 1`` two mutually overlapping packets can never both
    be feasible, so the tie rule only matters for chains of partial overlaps.
    """
    candidates = []
    for q in in_flight:
        if q.origin == receiver or not q.start <= instant < q.end:
            continue
        if _dist(q.origin_pos, receiver_pos) <= range_radius(p, q.range_class):
            candidates.append(q)
    candidates.sort(key=lambda q: q.start)
    for q in candidates:
        window = [w for w in in_flight if w.overlaps(q)]
        if any(w.origin == receiver for w in window):
            continue
        if sinr_feasible(q, receiver_pos, window, p):
            return q
    return None
