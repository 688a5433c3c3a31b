"""Phase-based random coloring (4Δ and Δ+1 palettes) and its variants."""
from __future__ import annotations

import math
from typing import Dict

from .base import NodeMachine, ProtocolContext, redraw_color
from .messages import Color


class Rand4D(NodeMachine):
    """Keep broadcasting the current color; redraw at the end of any phase
    in which a neighbor was heard announcing the same color.

    ``respect``: listen for one ``duration`` before the first pick and avoid
    colors heard from neighbors.  ``finalize``: fix the color after
    ``duration`` slots without a detected conflict.
    """

    finalizing = False
    palette_per_delta = 4

    def __init__(self, node_id: int, ctx: ProtocolContext, rng, *,
                 respect: bool = False, finalize: bool = False):
        super().__init__(node_id, ctx, rng)
        self.respect = respect
        self.finalize = finalize
        self.finalizing = finalize
        self.palette = self.palette_size(ctx.delta)
        self.phase_len = max(1, math.ceil(ctx.duration * ctx.comm.factor))
        self.phase0 = 0
        self.conflict = False
        self.heard: Dict[int, int] = {}

    @classmethod
    def palette_size(cls, delta: int) -> int:
        return max(1, cls.palette_per_delta * delta)

    def start(self, k):
        if self.respect:
            self.set_timer("listen", k + self.ctx.duration)
        else:
            self._pick(k, self.rng.randrange(self.palette))

    def _pick(self, k, c):
        self.set_color(c)
        self.conflict = False
        self.phase0 = k
        self.broadcast(Color(c), self.ctx.p_lb, None, k)
        if self.finalize:
            self.set_timer("final", k + self.ctx.duration)

    def _forbidden(self):
        return set(self.heard.values()) if self.respect else ()

    def on_timer(self, name, k):
        if name == "listen":
            self._pick(k, redraw_color(self.palette, self._forbidden(), self.rng))
        elif name == "phase":
            self.count_redraw()
            self._pick(k, redraw_color(self.palette, self._forbidden(), self.rng))
        elif name == "final":
            self.set_finished(True)

    def on_receive(self, sender, msg, k):
        c = getattr(msg, "color", None)
        if c is None:
            return
        self.heard[sender] = c
        if c != self.color or self.conflict or self.finished:
            return
        self.conflict = True
        self.cancel_timer("final")
        # the redraw waits for the end of the current phase
        L = self.phase_len
        self.set_timer("phase", self.phase0 + L * max(1, -(-(k - self.phase0) // L)))


class Rand1D(Rand4D):
    """Same as :class:`Rand4D` with the Δ+1 palette."""

    palette_per_delta = 1

    @classmethod
    def palette_size(cls, delta: int) -> int:
        return delta + 1
