"""Glue between :class:`PriorityMis` bookkeeping and a node's radio."""
from __future__ import annotations

from ..comms import MisOutcome, PriorityMis
from ..sinr import RangeClass
from .messages import Rank


class MisRunner:
    """Runs one MIS competition for ``owner`` using its broadcast helpers.

    Competitors announce ``Rank(tag, rank)`` with ``prob`` each slot; only
    ranks carrying the same ``tag`` are compared.
    """

    def __init__(self, owner, tag, window: int, prob: float,
                 rc: RangeClass = RangeClass.R1, timer: str = "mis"):
        self.owner = owner
        self.tag = tag
        self.prob = prob
        self.rc = rc
        self.timer = timer
        self.mis = PriorityMis(owner.id, window, owner.rng)

    @property
    def active(self) -> bool:
        return self.mis.active

    @property
    def beaten(self) -> bool:
        return self.mis.state == PriorityMis.BEATEN

    def begin(self, k: int) -> None:
        self.mis.begin(k)
        self.owner.broadcast(Rank(self.tag, self.mis.rank), self.prob, None, k, rc=self.rc)
        self.owner.set_timer(self.timer, self.mis.deadline)

    def hear(self, msg: Rank, sender: int) -> bool:
        """Feed a decoded rank; True if it beat us."""
        if msg.tag != self.tag or not self.mis.hear_rank(msg.rank, sender):
            return False
        self.owner.silence()
        self.owner.set_timer(self.timer, self.mis.deadline)
        return True

    def expire(self, k: int) -> MisOutcome:
        out = self.mis.expire(k)
        if out == MisOutcome.WON:
            self.owner.silence()
        elif self.mis.competing:
            self.owner.broadcast(Rank(self.tag, self.mis.rank), self.prob, None, k, rc=self.rc)
            self.owner.set_timer(self.timer, self.mis.deadline)
        return out

    def stop(self) -> MisOutcome:
        """Leave the competition (dominated or otherwise resolved)."""
        self.owner.cancel_timer(self.timer)
        if self.mis.competing:
            self.owner.silence()
        return self.mis.dominated()
