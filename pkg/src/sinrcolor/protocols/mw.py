"""Leader-assigned color blocks with a slow MIS per color."""
from __future__ import annotations

from collections import deque
from typing import Dict, Optional

from ..comms import MisOutcome
from .base import NodeMachine, ProtocolContext, redraw_color
from .messages import Color, Dominate, Grant, Rank, Request
from .mis import MisRunner

BLOCK = 8


class MWColoring(NodeMachine):
    """Leaders take color 0 and hand each requester its own block of
    ``BLOCK`` colors (bases 1, 9, 17, ... in arrival order).  A requester
    then walks its block, competing for each color in a slow MIS against
    same-color contenders of other leaders.
    """

    def __init__(self, node_id: int, ctx: ProtocolContext, rng, *, correcting: bool = False):
        super().__init__(node_id, ctx, rng)
        self.correcting = correcting
        self.state = "idle"
        self.leader = False
        self.heard: Dict[int, int] = {}
        self.mis1 = MisRunner(self, "L1", ctx.duration, ctx.p_lb)
        self.cmis: Optional[MisRunner] = None
        self.my_leader: Optional[int] = None
        self.base: Optional[int] = None
        self.used_base: Optional[int] = None
        self.candidate: Optional[int] = None
        # leader side
        self.queue: deque = deque()
        self.pending: Dict[int, int] = {}
        self.granted: Dict[int, int] = {}
        self.next_base = 1
        self.serving = False

    def start(self, k):
        self.state = "l1"
        self.mis1.begin(k)

    # -- leader ----------------------------------------------------------
    def _lead(self, k):
        self.state = "leader"
        self.leader = True
        self.set_color(0)
        self.set_finished(True)
        self.broadcast(Dominate(self.color), self.ctx.p_lb, self.ctx.duration, k,
                       done=self._serve_next)

    def _serve_next(self, k):
        if self.queue:
            u = self.queue.popleft()
            base = self.pending.pop(u)
            self.granted[u] = base
            self.serving = True
            self.broadcast(Grant(u, base, self.color), self.ctx.p_fast, self.ctx.fast_duration,
                           k, done=self._serve_next)
        else:
            self.serving = False
            self.broadcast(Dominate(self.color), self.ctx.p_lb, None, k)

    def _on_request(self, u, msg: Request, k):
        if u in self.pending:
            return
        b = self.granted.get(u)
        if b is not None and msg.used_base != b:
            base = b  # our grant got lost
        else:
            base = self.next_base
            self.next_base += BLOCK
        self.pending[u] = base
        self.queue.append(u)
        if not self.serving and not self.has_timer("_bcast"):
            self._serve_next(k)

    # -- requester ---------------------------------------------------------
    def _request(self, k):
        self.state = "request"
        self.broadcast(Request(self.my_leader, self.used_base), self.ctx.p_lb, None, k)

    def _compete(self, k, c):
        taken = set(self.heard.values())
        while c < self.base + BLOCK and c in taken:
            c += 1
        if c >= self.base + BLOCK:
            self.used_base = self.base
            self._request(k)
            return
        self.state = "compete"
        self.candidate = c
        self.cmis = MisRunner(self, ("MW", c), self.ctx.duration, self.ctx.p_lb, timer="cmis")
        self.cmis.begin(k)

    def _next_color(self, k):
        self.cmis.stop()
        self._compete(k, self.candidate + 1)

    def _win(self, k):
        self.state = "done"
        self.set_color(self.candidate)
        self.set_finished(True)
        self.broadcast(Color(self.color), self.ctx.p_lb, self.ctx.duration, k,
                       done=self._after_announce)

    def _after_announce(self, k):
        if self.correcting:
            self.broadcast(Color(self.color), self.ctx.p_lb, None, k)

    def on_timer(self, name, k):
        if name == "mis" and self.state == "l1":
            if self.mis1.expire(k) == MisOutcome.WON:
                self._lead(k)
        elif name == "cmis" and self.state == "compete":
            if self.cmis.expire(k) == MisOutcome.WON:
                self._win(k)

    def on_receive(self, sender, msg, k):
        c = getattr(msg, "color", None)
        if c is not None:
            self.heard[sender] = c
        st = self.state
        if isinstance(msg, Rank):
            if st == "l1":
                self.mis1.hear(msg, sender)
            elif st == "compete" and self.cmis.hear(msg, sender):
                self._next_color(k)
            return
        if st == "leader":
            if isinstance(msg, Request) and msg.leader == self.id:
                self._on_request(sender, msg, k)
            elif self.correcting and c == self.color:
                self.count_redraw()
                self.set_color(redraw_color(max(1, self.ctx.delta), set(self.heard.values()), self.rng))
                m = self.message
                self.message = (Grant(m.target, m.base, self.color) if isinstance(m, Grant)
                                else Dominate(self.color))
            return
        if isinstance(msg, Dominate) and st == "l1":
            self.mis1.stop()
            self.my_leader = sender
            self._request(k)
            return
        if isinstance(msg, Grant):
            if st == "request" and sender == self.my_leader and msg.target == self.id:
                self.base = msg.base
                self._compete(k, msg.base)
            return
        if c is None:
            return
        if st == "compete" and c == self.candidate:
            self._next_color(k)
        elif self.correcting and self.finished and c == self.color:
            self.count_redraw()
            self.set_finished(False)
            self.silence()
            self._compete(k, self.base)
