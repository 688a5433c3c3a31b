"""Local broadcasting parameters and the priority-draw MIS building block."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


@dataclass(frozen=True)
class CommParams:
    """Timing of (fast) local broadcasting.

    ``duration`` is the number of slots budgeted for a reliable local
    broadcast; correcting variants substitute the shorter ``duration_prime``
    through :meth:`effective`.
    """

    tx_const: float = 0.15
    duration: int = 4600
    factor: float = 0.2
    duration_prime: int | None = None
    delta: int = 1

    def __post_init__(self):
        if not 0 < self.tx_const <= 1:
            raise ValueError(f"tx_const must lie in (0, 1], got {self.tx_const}")
        if self.duration < 1:
            raise ValueError("duration must be >= 1")
        if self.factor <= 0:
            raise ValueError("factor must be positive")
        if self.duration_prime is not None and not 1 <= self.duration_prime <= self.duration:
            raise ValueError("duration_prime must lie in [1, duration]")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    def effective(self) -> "CommParams":
        """Parameters with ``duration_prime`` (if any) in place of ``duration``."""
        if self.duration_prime is None:
            return self
        return replace(self, duration=self.duration_prime, duration_prime=None)


def lb_probability(c: CommParams) -> float:
    if c.delta == 0:
        return 1.0
    return min(1.0, c.tx_const / c.delta)


def flb_probability(c: CommParams) -> float:
    return min(1.0, c.tx_const * c.factor)


def flb_duration(c: CommParams) -> int:
    """Fast-broadcast window; rounds up and never drops below one slot."""
    return max(1, math.ceil(c.duration / (max(c.delta, 1) * c.factor)))


class MisOutcome(str, Enum):
    WON = "won"
    LOST = "lost"
    UNDECIDED = "undecided"


class PriorityMis:
    """One node's side of a Luby-style MIS over local broadcasting.

    A competitor draws a random rank and announces it for ``window`` slots.
    Hearing a larger ``(rank, id)`` pair beats it: the node falls silent and
    waits one more window for the winner's dominance announcement before it
    redraws and competes again.  Finishing a window unbeaten wins.  Decoding a
    dominance announcement loses.  The owning state machine supplies timing
    and transmission; this class only keeps the bookkeeping.
    """

    __slots__ = ("node_id", "window", "rng", "rank", "state", "deadline")

    COMPETE, BEATEN, DONE = "compete", "beaten", "done"

    def __init__(self, node_id: int, window: int, rng):
        self.node_id = node_id
        self.window = max(1, int(window))
        self.rng = rng
        self.rank = 0.0
        self.state = self.DONE
        self.deadline = 0

    def begin(self, k: int) -> None:
        self.rank = self.rng.random()
        self.state = self.COMPETE
        self.deadline = k + self.window

    @property
    def competing(self) -> bool:
        return self.state == self.COMPETE

    @property
    def active(self) -> bool:
        return self.state != self.DONE

    def hear_rank(self, rank: float, sender: int) -> bool:
        """Record a competitor's rank; True if this beats us just now."""
        if self.state == self.COMPETE and (rank, sender) > (self.rank, self.node_id):
            self.state = self.BEATEN
            self.deadline += self.window
            return True
        return False

    def expire(self, k: int) -> MisOutcome:
        """Called when ``deadline`` is reached."""
        if self.state == self.COMPETE:
            self.state = self.DONE
            return MisOutcome.WON
        if self.state == self.BEATEN:
            self.begin(k)
        return MisOutcome.UNDECIDED

    def dominated(self) -> MisOutcome:
        self.state = self.DONE
        return MisOutcome.LOST
