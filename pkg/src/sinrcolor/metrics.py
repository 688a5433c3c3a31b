"""Omniscient measurement of colorings.

Nothing in here is visible to the node state machines: the kernel reports
color changes to a :class:`ConflictTracker` and samples a
:class:`MetricsRecorder`, neither of which ever feeds back into a node.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np


def conflicted_nodes(colors: Sequence[Optional[int]], adjacency, present=None) -> np.ndarray:
    """Full O(n^2) recheck: boolean mask of nodes sharing a color with a neighbor.

    ``adjacency`` is a boolean matrix; ``present`` optionally masks out nodes
    that do not exist yet.
    """
    c = np.array([-1 if x is None else x for x in colors], dtype=np.int64)
    adj = np.asarray(adjacency, dtype=bool)
    if present is not None:
        pm = np.asarray(present, dtype=bool)
        adj = adj & pm[:, None] & pm[None, :]
        c = np.where(pm, c, -1)
    same = (c[:, None] == c[None, :]) & (c[:, None] >= 0)
    return (adj & same).any(axis=1)


class ConflictTracker:
    """Incremental per-node conflict status on a static neighbor graph."""

    def __init__(self, adjacency: List[np.ndarray], n: int):
        self.adjacency = adjacency
        self.colors: List[Optional[int]] = [None] * n
        self.present = [False] * n
        # number of present neighbors sharing this node's color
        self.clash = [0] * n
        self.n_conflicted = 0
        self.n_colored = 0
        self.n_present = 0
        self.watch: Optional[Set[int]] = None
        self.disturbed: Set[int] = set()

    def conflicted(self, v: int) -> bool:
        return self.clash[v] > 0

    def _bump(self, v: int, delta: int) -> None:
        before = self.clash[v] > 0
        self.clash[v] += delta
        after = self.clash[v] > 0
        if before != after:
            self.n_conflicted += 1 if after else -1
            if after and self.watch is not None and v in self.watch:
                self.disturbed.add(v)

    def add_node(self, v: int) -> None:
        if not self.present[v]:
            self.present[v] = True
            self.n_present += 1

    def on_color_change(self, v: int, new: Optional[int]) -> None:
        old = self.colors[v]
        if old == new:
            return
        colors, present = self.colors, self.present
        for u in self.adjacency[v]:
            if not present[u]:
                continue
            cu = colors[u]
            if cu is None:
                continue
            if old is not None and cu == old:
                self._bump(u, -1)
                self._bump(v, -1)
            if new is not None and cu == new:
                self._bump(u, +1)
                self._bump(v, +1)
        colors[v] = new
        if old is None:
            self.n_colored += 1
        elif new is None:
            self.n_colored -= 1

    def watch_for_disturbance(self, nodes) -> None:
        """Start recording which of ``nodes`` enter conflict status."""
        self.watch = set(nodes)
        self.disturbed = set()


@dataclass
class RunMetrics:
    runtime_slots: float = 0.0
    final_conflicts: int = 0
    terminated: bool = False
    conflicts_series: List[Tuple[float, int]] = field(default_factory=list)
    finished_series: List[Tuple[float, int]] = field(default_factory=list)
    valid_fraction_series: List[Tuple[float, float]] = field(default_factory=list)
    redraw_total: int = 0
    disturbed_count: int = 0
    transmissions: int = 0
    n_nodes: int = 0
    delta: int = 0

    def copy(self) -> "RunMetrics":
        return replace(self, conflicts_series=list(self.conflicts_series),
                       finished_series=list(self.finished_series),
                       valid_fraction_series=list(self.valid_fraction_series))

    @property
    def mean_valid_fraction(self) -> float:
        if not self.valid_fraction_series:
            return float("nan")
        return float(np.mean([f for _, f in self.valid_fraction_series]))


class MetricsRecorder:
    """Time series bookkeeping for one run; sampling never touches node state."""

    def __init__(self, enabled: bool = True, sample_every: float = 10.0):
        self.enabled = enabled
        self.sample_every = sample_every
        self.metrics = RunMetrics()

    @staticmethod
    def _push(series, t, value):
        # several changes inside one slot collapse into the last one
        if series and int(series[-1][0]) == int(t):
            series[-1] = (t, value)
        else:
            series.append((t, value))

    def record(self, t: float, conflicts: int, finished: int) -> None:
        if not self.enabled:
            return
        self._push(self.metrics.conflicts_series, t, conflicts)
        self._push(self.metrics.finished_series, t, finished)

    def record_valid_fraction(self, t: float, frac: float) -> None:
        if self.enabled:
            self.metrics.valid_fraction_series.append((t, frac))
