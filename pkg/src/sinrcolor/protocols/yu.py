"""Two-range coloring: r2-MIS leaders block their surroundings and grant
color selection to their r1-neighbors one at a time."""
from __future__ import annotations

from collections import deque
from typing import Dict, Set

from ..comms import MisOutcome
from ..sinr import RangeClass
from .base import NodeMachine, ProtocolContext, redraw_color, smallest_free
from .messages import AskColor, Color, DoNotTransmit, Grant, Rank, StartColoring, StartTransmit
from .mis import MisRunner

R1, R2 = RangeClass.R1, RangeClass.R2


class YuColoring(NodeMachine):
    """States: start, mis, leader, blocked, c1 (asking), done, retired.

    ``p_high`` is the fast-broadcast probability with the fast window;
    ``p_low`` is the local-broadcast probability.  A blocked node that never
    hears every blocker's StartTransmit gives up after a timeout and re-enters
    the MIS; a leader still serving nearby pulls it into C1 again.
    """

    def __init__(self, node_id: int, ctx: ProtocolContext, rng, *, correcting: bool = False):
        super().__init__(node_id, ctx, rng)
        self.correcting = correcting
        self.state = "idle"
        self.leader = False
        self.heard: Dict[int, int] = {}
        self.blockers: Set[int] = set()
        self.my_leader = None
        self.mis = MisRunner(self, "YU", ctx.duration, ctx.p_lb, rc=R2)
        self.queue: deque = deque()
        self.granting = None
        self.idle_since = 0
        df, d = ctx.fast_duration, ctx.duration
        self.block_timeout = (ctx.delta + 2) * df + 2 * d

    def start(self, k):
        self.state = "start"
        self.set_timer("start", k + self.ctx.duration)

    def _enter_mis(self, k):
        self.state = "mis"
        self.blockers.clear()
        self.cancel_timer("block")
        self.mis.begin(k)

    # -- leader ----------------------------------------------------------
    def _lead(self, k):
        self.state = "leader"
        self.leader = True
        self.broadcast(DoNotTransmit(), self.ctx.p_fast, self.ctx.fast_duration, k,
                       done=self._lead_color, rc=R2)

    def _lead_color(self, k):
        self.set_color(0)
        self.set_finished(True)
        self.idle_since = k + self.ctx.fast_duration
        self.broadcast(StartColoring(self.color), self.ctx.p_fast, self.ctx.fast_duration, k,
                       done=self._serve)

    def _serve(self, k):
        self.granting = None
        if self.queue:
            u = self.queue.popleft()
            self.granting = u
            self.broadcast(Grant(u, None, self.color), self.ctx.p_fast, self.ctx.fast_duration,
                           k, done=self._after_grant)
        elif k - self.idle_since >= self.ctx.duration:
            self.broadcast(StartTransmit(), self.ctx.p_fast, self.ctx.fast_duration, k,
                           done=self._retire, rc=R2)
        else:
            self.broadcast(StartColoring(self.color), self.ctx.p_fast, self.ctx.fast_duration,
                           k, done=self._serve)

    def _after_grant(self, k):
        self.idle_since = k
        self._serve(k)

    def _retire(self, k):
        self.state = "retired"
        self._heartbeat(k)

    def _heartbeat(self, k):
        if self.correcting:
            self.broadcast(Color(self.color), self.ctx.p_lb, None, k)
        else:
            self.silence()

    # -- others -------------------------------------------------------------
    def _block(self, u, k):
        if self.state == "mis":
            self.mis.stop()
        elif self.state == "c1":
            self.silence()
        self.state = "blocked"
        self.blockers.add(u)
        self.set_timer("block", k + self.block_timeout)

    def _colored(self, k):
        self.cancel_timer("block")
        self.state = "done"
        self.set_color(smallest_free(set(self.heard.values())))
        self.set_finished(True)
        self.broadcast(Color(self.color), self.ctx.p_fast, self.ctx.fast_duration, k,
                       done=self._heartbeat)

    def on_timer(self, name, k):
        if name == "start" and self.state == "start":
            self._enter_mis(k)
        elif name == "mis" and self.state == "mis":
            if self.mis.expire(k) == MisOutcome.WON:
                self._lead(k)
        elif name == "block" and self.state == "c1":
            self.silence()
            self._enter_mis(k)
        elif name == "block" and self.state == "blocked":
            self._enter_mis(k)

    def on_receive(self, sender, msg, k):
        c = getattr(msg, "color", None)
        if c is not None:
            self.heard[sender] = c
        st = self.state
        if st in ("leader", "retired", "done", "quit"):
            if st == "leader":
                if isinstance(msg, AskColor) and msg.leader == self.id:
                    if sender != self.granting and sender not in self.queue:
                        self.queue.append(sender)
            if self.correcting and c is not None and c == self.color:
                self._repair(k)
            return
        if isinstance(msg, DoNotTransmit):
            self._block(sender, k)
        elif isinstance(msg, Rank):
            if st == "mis":
                self.mis.hear(msg, sender)
        elif isinstance(msg, StartColoring):
            if st == "blocked" or (st == "mis" and self.mis.active):
                if st == "mis":
                    self.mis.stop()
                self.state = "c1"
                self.my_leader = sender
                self.broadcast(AskColor(sender), self.ctx.p_lb, None, k)
                # the leader may resign before serving us
                self.set_timer("block", k + self.block_timeout)
        elif isinstance(msg, StartTransmit):
            if st == "blocked":
                self.blockers.discard(sender)
                if not self.blockers:
                    self._enter_mis(k)
        elif isinstance(msg, Grant):
            if st == "c1" and msg.target == self.id:
                self._colored(k)

    def _repair(self, k):
        self.count_redraw()
        if self.leader:
            self.set_color(redraw_color(max(1, self.ctx.delta), set(self.heard.values()), self.rng))
            m = self.message
            if isinstance(m, Color):
                self.message = Color(self.color)
            elif isinstance(m, StartColoring):
                self.message = StartColoring(self.color)
            elif isinstance(m, Grant):
                self.message = Grant(m.target, m.base, self.color)
            return
        self.set_finished(False)
        self.silence()
        self._enter_mis(k)
