"""Protocol registry.

Each entry knows its display label, default ``factor`` and ``duration'`` and
how to build per-node machines for a given topology.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .base import NodeMachine, PaletteExhausted, ProtocolContext, redraw_color, smallest_free
from .cr import ColorReduction
from .messages import Beacon
from .mw import BLOCK, MWColoring
from .rand import Rand1D, Rand4D
from .yu import YuColoring


class LocalBroadcastProbe(NodeMachine):
    """Broadcasts a beacon forever; finished once every neighbor was heard."""

    def __init__(self, node_id, ctx, rng, *, neighbors):
        super().__init__(node_id, ctx, rng)
        self.missing = set(int(u) for u in neighbors)
        self.done_slot = None

    def start(self, k):
        self.broadcast(Beacon(), self.ctx.p_lb, None, k)
        if not self.missing:
            self._done(k)

    def _done(self, k):
        self.done_slot = k
        self.set_finished(True)

    def on_receive(self, sender, msg, k):
        if sender in self.missing:
            self.missing.discard(sender)
            if not self.missing:
                self._done(k)


def random_greedy_coloring(adjacency, seed) -> np.ndarray:
    """Valid coloring: visit nodes in random order, take the smallest free color."""
    n = len(adjacency)
    order = list(range(n))
    random.Random(f"{seed}:greedy").shuffle(order)
    colors = np.full(n, -1, dtype=np.int64)
    for v in order:
        colors[v] = smallest_free({int(colors[u]) for u in adjacency[v]})
    return colors


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    label: str
    factor: float
    duration_prime: Optional[int]
    finalizing: bool
    build: Callable = field(repr=False, compare=False)
    # initial-color palette as a multiple of delta (ColorReduction family)
    init_mult: Optional[float] = None

    def factory(self, topology, seed: int = 0, **kw):
        """Returns ``f(node_id, ctx, rng) -> NodeMachine``."""
        return self.build(self, topology, seed, **kw)


def _rand(cls, **opts):
    def build(spec, topology, seed, **kw):
        return lambda v, ctx, rng: cls(v, ctx, rng, **opts)
    return build


def _cr(correcting: bool, valid: bool):
    def build(spec, topology, seed, init_mult=None, **kw):
        delta = topology.delta
        if valid:
            ic = random_greedy_coloring(topology.adjacency, seed)
            palette = delta + 1
            return lambda v, ctx, rng: ColorReduction(
                v, ctx, rng, initial_color=int(ic[v]), init_palette=palette, correcting=correcting)
        mult = spec.init_mult if init_mult is None else init_mult
        # c=1 means the (Δ+1) palette rather than Δ colors
        palette = max(1, int(round(mult * delta)) if mult != 1 else delta + 1)

        def make(v, ctx, rng):
            return ColorReduction(v, ctx, rng, initial_color=rng.randrange(palette),
                                  init_palette=palette, correcting=correcting)
        return make
    return build


def _simple(cls, correcting: bool):
    def build(spec, topology, seed, **kw):
        return lambda v, ctx, rng: cls(v, ctx, rng, correcting=correcting)
    return build


def _probe(spec, topology, seed, **kw):
    return lambda v, ctx, rng: LocalBroadcastProbe(v, ctx, rng, neighbors=topology.adjacency[v])


PROTOCOLS: Dict[str, ProtocolSpec] = {p.name: p for p in [
    ProtocolSpec("rand4d", "Rand4DColor", 0.001, None, False, _rand(Rand4D)),
    ProtocolSpec("rand4d_resp", "Rand4DRespColor", 0.001, None, False, _rand(Rand4D, respect=True)),
    ProtocolSpec("rand4d_final", "Rand4DFinalColor", 0.001, None, True, _rand(Rand4D, finalize=True)),
    ProtocolSpec("rand1d", "Rand1DColor", 0.001, None, False, _rand(Rand1D)),
    ProtocolSpec("cr", "ColorReduction", 0.6, None, True, _cr(False, True)),
    ProtocolSpec("crrand", "CRRandColor", 0.6, None, True, _cr(False, False), init_mult=2.0),
    ProtocolSpec("crrcor", "CRRCor", 0.6, 575, True, _cr(True, False), init_mult=2.0),
    ProtocolSpec("mw", "MWColor", 0.2, None, True, _simple(MWColoring, False)),
    ProtocolSpec("mwcor", "MWCor", 0.2, 575, True, _simple(MWColoring, True)),
    ProtocolSpec("yu", "YuColor", 0.2, None, True, _simple(YuColoring, False)),
    ProtocolSpec("yucor", "YuCor", 0.2, 287, True, _simple(YuColoring, True)),
    ProtocolSpec("lbprobe", "LocalBroadcast", 1.0, None, True, _probe),
]}

ALIASES = {p.label.lower(): p.name for p in PROTOCOLS.values()}


def get_protocol(name: str) -> ProtocolSpec:
    key = name.strip().lower()
    key = ALIASES.get(key, key)
    try:
        return PROTOCOLS[key]
    except KeyError:
        raise KeyError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None


__all__ = [
    "BLOCK", "ColorReduction", "LocalBroadcastProbe", "MWColoring", "NodeMachine",
    "PROTOCOLS", "PaletteExhausted", "ProtocolContext", "ProtocolSpec", "Rand1D", "Rand4D",
    "YuColoring", "get_protocol", "random_greedy_coloring", "redraw_color", "smallest_free",
]
