"""Per-node protocol state machines and the context the kernel hands them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from ..comms import CommParams, flb_duration, flb_probability, lb_probability
from ..sinr import RangeClass


class PaletteExhausted(RuntimeError):
    pass


def redraw_color(palette_size: int, forbidden, rng, *, strict: bool = False) -> int:
    """Uniform draw from ``range(palette_size)`` minus ``forbidden``.

    If ``forbidden`` covers the whole palette the draw falls back to the full
    palette (or raises :class:`PaletteExhausted` when ``strict``).
    """
    if palette_size < 1:
        raise ValueError("palette must hold at least one color")
    if not forbidden:
        return rng.randrange(palette_size)
    allowed = [c for c in range(palette_size) if c not in forbidden]
    if not allowed:
        if strict:
            raise PaletteExhausted(f"all {palette_size} colors forbidden")
        return rng.randrange(palette_size)
    return allowed[rng.randrange(len(allowed))]


def smallest_free(taken, limit: Optional[int] = None) -> int:
    c = 0
    while c in taken:
        c += 1
    return c


class ProtocolContext:
    """Shared, read-only run parameters plus the kernel's reporting hooks."""

    def __init__(self, comm: CommParams, *, mobile: bool = False,
                 on_color=None, on_finished=None, on_redraw=None):
        self.comm = comm
        eff = comm.effective()
        self.delta = comm.delta
        self.duration = eff.duration
        self.fast_duration = flb_duration(eff)
        self.p_lb = lb_probability(eff)
        self.p_fast = flb_probability(eff)
        self.mobile = mobile
        self._on_color = on_color or (lambda m, c: None)
        self._on_finished = on_finished or (lambda m, f: None)
        self._on_redraw = on_redraw or (lambda m: None)


class NodeMachine:
    """Base class: one node's protocol, stepped only by the kernel.

    The kernel reads ``prob`` (per-slot transmission probability),
    ``message`` and ``range_class`` when deciding to transmit, and
    ``timer`` (the next slot index at which :meth:`on_timer` must run).
    """

    # True: "finished" is an explicit flag.  False: a node counts as finished
    # while its color is valid (never-finalizing protocols).
    finalizing = True

    def __init__(self, node_id: int, ctx: ProtocolContext, rng):
        self.id = node_id
        self.ctx = ctx
        self.rng = rng
        self.wake = 0.0
        self.color: Optional[int] = None
        self.finished = False
        self.prob = 0.0
        self.message = None
        self.range_class = RangeClass.R1
        self.broadcast_id = -1
        self._timers: Dict[str, int] = {}
        self._bcast_done: Optional[Callable[[int], None]] = None

    # -- kernel interface -------------------------------------------------
    def start(self, k: int) -> None:
        raise NotImplementedError

    def on_timer(self, name: str, k: int) -> None:
        pass

    def on_receive(self, sender: int, msg, k: int) -> None:
        pass

    def on_transmit(self, k: int):
        return self.message

    @property
    def timer(self) -> Optional[int]:
        return min(self._timers.values()) if self._timers else None

    def fire_timers(self, k: int) -> None:
        while self._timers:
            name, slot = min(self._timers.items(), key=lambda kv: kv[1])
            if slot > k:
                break
            del self._timers[name]
            if name == "_bcast":
                self._finish_broadcast(k)
            else:
                self.on_timer(name, k)

    # -- helpers for subclasses ------------------------------------------
    def set_timer(self, name: str, k: int) -> None:
        self._timers[name] = k

    def cancel_timer(self, name: str) -> None:
        self._timers.pop(name, None)

    def has_timer(self, name: str) -> bool:
        return name in self._timers

    def slot_at(self, t: float) -> int:
        """First own slot index starting at or after absolute time ``t``."""
        return math.ceil(t - self.wake - 1e-9)

    def time_of(self, k: int) -> float:
        return self.wake + k

    def broadcast(self, msg, prob: float, slots: Optional[int], k: int,
                  done: Optional[Callable[[int], None]] = None,
                  rc: RangeClass = RangeClass.R1) -> None:
        """Local broadcast of ``msg`` for ``slots`` slots (``None``: until replaced)."""
        self.cancel_timer("_bcast")
        self._bcast_done = done
        self.broadcast_id += 1
        if slots is not None and slots <= 0:
            self.silence()
            if done is not None:
                done(k)
            return
        self.message, self.prob, self.range_class = msg, prob, rc
        if slots is not None:
            self.set_timer("_bcast", k + slots)

    def silence(self) -> None:
        self.cancel_timer("_bcast")
        self._bcast_done = None
        self.prob = 0.0
        self.message = None

    def _finish_broadcast(self, k: int) -> None:
        done = self._bcast_done
        self._bcast_done = None
        self.prob = 0.0
        self.message = None
        if done is not None:
            done(k)

    def set_color(self, c: Optional[int]) -> None:
        if c != self.color:
            self.color = c
            self.ctx._on_color(self, c)

    def set_finished(self, flag: bool) -> None:
        if flag != self.finished:
            self.finished = flag
            self.ctx._on_finished(self, flag)

    def count_redraw(self) -> None:
        self.ctx._on_redraw(self)
