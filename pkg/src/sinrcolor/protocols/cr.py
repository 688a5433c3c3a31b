"""Two-level MIS coloring with leader-scheduled active intervals."""
from __future__ import annotations

from typing import Dict, Optional

from ..comms import MisOutcome
from .base import NodeMachine, ProtocolContext, redraw_color, smallest_free
from .messages import Color, Dominate, Rank
from .mis import MisRunner


class ColorReduction(NodeMachine):
    """Leaders from a slow MIS announce a schedule reference time ``T0``.

    A dominated node with initial color ``ic`` is active during
    ``[T0 + ic*Df + m*S, T0 + (ic+1)*Df + m*S)`` with period
    ``S = init_palette * Df`` and there runs a fast MIS against nodes of the
    same initial color.  Winning it picks the smallest free color.

    With ``correcting`` set, colored nodes keep announcing their color and
    repair conflicts: leaders redraw from their free colors, other nodes drop
    out and retry in their next active interval.
    """

    def __init__(self, node_id: int, ctx: ProtocolContext, rng, *,
                 initial_color: int, init_palette: int, correcting: bool = False):
        super().__init__(node_id, ctx, rng)
        self.ic = initial_color
        self.init_palette = max(1, init_palette)
        self.correcting = correcting
        self.state = "idle"
        self.leader = False
        self.heard: Dict[int, int] = {}
        self.interval_start: Optional[float] = None
        self.mis1 = MisRunner(self, "L1", ctx.duration, ctx.p_lb)
        self.mis2 = MisRunner(self, "L2", ctx.fast_duration, ctx.p_fast, timer="mis2")

    @property
    def period(self) -> float:
        return self.init_palette * self.ctx.fast_duration

    def _free(self):
        return smallest_free(set(self.heard.values()))

    def start(self, k):
        self.state = "l1"
        self.mis1.begin(k)

    def on_timer(self, name, k):
        if name == "mis" and self.state == "l1":
            if self.mis1.expire(k) == MisOutcome.WON:
                self._lead(k)
        elif name == "interval" and self.state == "wait":
            self.state = "l2"
            self.mis2.begin(k)
        elif name == "mis2" and self.state == "l2":
            if self.mis2.expire(k) == MisOutcome.WON:
                self._win(k)

    def _lead(self, k):
        self.state = "leader"
        self.leader = True
        self.set_color(self._free())
        self.set_finished(True)
        t0 = self.time_of(k) + self.ctx.duration
        self.broadcast(Dominate(self.color, t0), self.ctx.p_lb, self.ctx.duration, k,
                       done=self._after_announce)

    def _win(self, k):
        self.state = "done"
        self.set_color(self._free())
        self.set_finished(True)
        self.broadcast(Color(self.color), self.ctx.p_fast, self.ctx.fast_duration, k,
                       done=self._after_announce)

    def _after_announce(self, k):
        if self.correcting:
            self.broadcast(Color(self.color), self.ctx.p_lb, None, k)

    def _schedule(self, k, not_before: float):
        """Wait for the first own active interval starting at or after ``not_before``."""
        s = self.interval_start
        if s < not_before:
            s += self.period * -(-(not_before - s) // self.period)
        self.interval_start = s
        self.state = "wait"
        self.set_timer("interval", max(k, self.slot_at(s)))

    def on_receive(self, sender, msg, k):
        c = getattr(msg, "color", None)
        if c is not None:
            self.heard[sender] = c
        st = self.state
        if isinstance(msg, Rank):
            if st == "l1":
                self.mis1.hear(msg, sender)
            elif st == "l2":
                self.mis2.hear(msg, sender)
            return
        if isinstance(msg, Dominate) and st == "l1":
            self.mis1.stop()
            self.interval_start = msg.schedule_ref + self.ic * self.ctx.fast_duration
            self._schedule(k, self.time_of(k))
            return
        if c is None:
            return
        if st == "l2" and self.mis2.beaten:
            # the node that beat us has most likely just taken its color
            self.mis2.begin(k)
        elif self.correcting and self.finished and c == self.color:
            self._repair(k)

    def _repair(self, k):
        if self.leader:
            self.count_redraw()
            forbidden = set(self.heard.values())
            self.set_color(redraw_color(self.ctx.delta + 1, forbidden, self.rng))
            if self.has_timer("_bcast"):
                self.message = Dominate(self.color, self.message.schedule_ref)
            else:
                self.broadcast(Color(self.color), self.ctx.p_lb, None, k)
            return
        self.count_redraw()
        self.set_finished(False)
        self.silence()
        self._schedule(k, max(self.interval_start + self.period, self.time_of(k)))
