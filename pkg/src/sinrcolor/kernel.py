"""Event-driven packet-level simulation kernel.

Time is measured in slots.  Node ``v`` wakes at ``wake_v`` and its slot ``k``
spans ``[wake_v + k, wake_v + k + 1)``; a transmission occupies the first
``transmission_time`` of a slot.  In asynchronous mode wake times are real
numbers, so slots of different nodes overlap partially; in lockstep mode they
are integers and every slot is aligned.

Each slot a node transmits with its current probability.  Rather than
visiting every node in every slot, the kernel draws the gap to a node's next
transmission from the geometric distribution and only wakes the node for that
slot, for its timers, or when it decodes a packet.  Any state change redraws
the gap, which is exact because the per-slot Bernoulli process is memoryless.
"""
from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from .comms import CommParams
from .deployment import build_topology
from .metrics import ConflictTracker, MetricsRecorder, RunMetrics, conflicted_nodes
from .mobility import MobilitySpec, RandomDirection
from .protocols.base import NodeMachine, ProtocolContext
from .sinr import Packet, RangeClass, SinrParams, broadcast_range, feasible_mask

INF = float("inf")

# event kinds, in processing order for equal timestamps
_END, _MOVE, _SLOT, _SAMPLE = 0, 1, 2, 3


class Mode(str, Enum):
    ASYNC = "async"
    SYNC = "sync"


@dataclass(frozen=True)
class KernelConfig:
    mode: Mode = Mode.ASYNC
    transmission_time: float = 0.999
    max_slots: float = 400_000.0
    master_seed: int = 0
    wake_window: float = 10.0
    # "reliable" delivers every packet to every idle in-range node
    channel: str = "sinr"
    sample_every: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.transmission_time < 1.0:
            raise ValueError("transmission_time must lie in (0, 1)")
        if self.channel not in ("sinr", "reliable"):
            raise ValueError(f"unknown channel {self.channel!r}")


def node_rng(master_seed: int, node_id: int, stream: str = "node") -> random.Random:
    """Private stream for one node, stable when the node count changes."""
    return random.Random(f"{master_seed}:{stream}:{node_id}")


class NodeRuntime:
    __slots__ = ("id", "wake", "machine", "rng", "token", "k_tx", "p_sched",
                 "next_slot", "started")

    def __init__(self, node_id: int, machine: NodeMachine, rng):
        self.id = node_id
        self.machine = machine
        self.rng = rng
        self.wake = 0.0
        self.token = 0
        self.k_tx = INF
        self.p_sched = 0.0
        self.next_slot = INF
        self.started = False

    @property
    def color(self):
        return self.machine.color

    @property
    def finished(self):
        return self.machine.finished


class Simulator:
    """One run of one protocol on one deployment.

    ``factory(node_id, ctx, rng)`` builds the per-node state machines.
    ``present`` masks nodes that exist from the start; the rest can be added
    later with :meth:`spawn`.
    """

    def __init__(self, positions, factory: Callable, comm: CommParams,
                 sinr: Optional[SinrParams] = None,
                 config: Optional[KernelConfig] = None, *,
                 mobility: Optional[MobilitySpec] = None,
                 present: Optional[Sequence[bool]] = None,
                 finalizing: Optional[bool] = None,
                 collect_metrics: bool = True,
                 record_packets: bool = False):
        self.sinr = sinr or SinrParams()
        self.config = config or KernelConfig()
        cfg = self.config
        self.pos = np.array(positions, dtype=float).reshape(-1, 2)
        self.n = n = len(self.pos)
        self.mobile = mobility is not None and not mobility.static
        if self.mobile and cfg.mode != Mode.SYNC:
            raise ValueError("mobility requires lockstep (sync) mode")
        self.rb = broadcast_range(self.sinr)
        self.topology = build_topology(self.pos, radius=self.rb)
        self._adj_r2 = None
        self.mobility = (RandomDirection(mobility, self.pos, seed=(cfg.master_seed, 7))
                         if self.mobile else None)
        if self.mobility is not None:
            self.pos = self.mobility.pos

        self.ctx = ProtocolContext(comm, mobile=self.mobile, on_color=self._on_color,
                                   on_finished=self._on_finished, on_redraw=self._on_redraw)
        self.nodes: List[NodeRuntime] = []
        for v in range(n):
            rng = node_rng(cfg.master_seed, v)
            self.nodes.append(NodeRuntime(v, factory(v, self.ctx, rng), rng))
        self.finalizing = (self.nodes[0].machine.finalizing if finalizing is None and n
                           else bool(finalizing))

        self.tracker = ConflictTracker(self.topology.adjacency, n)
        self.recorder = MetricsRecorder(collect_metrics, cfg.sample_every)
        self.metrics: RunMetrics = self.recorder.metrics
        self.metrics.n_nodes = n
        self.metrics.delta = comm.delta
        self.record_packets = record_packets
        self.packet_log: list = []

        self.present = np.zeros(n, dtype=bool)
        self.started = np.zeros(n, dtype=bool)
        self.last_tx = np.full(n, -INF)
        self.prev_tx = np.full(n, -INF)
        self.decoded_until = np.full(n, -INF)
        self.n_finished = 0
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self._recent: deque = deque()
        self._dirty = False
        self._logp = {}
        self._power = {RangeClass.R1: self.sinr.power, RangeClass.R2: self.sinr.r2_power}

        mask = np.ones(n, dtype=bool) if present is None else np.asarray(present, bool)
        for v in np.flatnonzero(mask):
            self._add(int(v), 0.0)
        if self.mobile:
            self._push(1.0, _MOVE, None)
        if collect_metrics:
            self._push(0.0, _SAMPLE, None)

    # -- scheduling ------------------------------------------------------
    def _push(self, t, kind, payload):
        self._seq += 1
        heapq.heappush(self._heap, (t, kind, self._seq, payload))

    def _gap(self, nr: NodeRuntime, p: float) -> float:
        if p <= 0.0:
            return INF
        if p >= 1.0:
            return 0
        lp = self._logp.get(p)
        if lp is None:
            lp = self._logp[p] = math.log1p(-p)
        return int(math.log(1.0 - nr.rng.random()) / lp)

    def _resched(self, nr: NodeRuntime, k_from: int) -> None:
        m = nr.machine
        if m.prob != nr.p_sched:
            nr.p_sched = m.prob
            nr.k_tx = k_from + self._gap(nr, m.prob)
        timer = m.timer
        nxt = nr.k_tx if timer is None else min(nr.k_tx, max(timer, k_from))
        if nxt != nr.next_slot:
            nr.next_slot = nxt
            nr.token += 1
            if nxt < INF:
                self._push(nr.wake + nxt, _SLOT, (nr, nxt, nr.token))

    def _add(self, v: int, at: float) -> None:
        nr = self.nodes[v]
        if self.config.mode == Mode.SYNC:
            offset = float(nr.rng.randrange(int(self.config.wake_window) + 1))
            nr.wake = math.ceil(at) + offset
        else:
            nr.wake = at + nr.rng.uniform(0.0, self.config.wake_window)
        nr.machine.wake = nr.wake
        self.present[v] = True
        self.tracker.add_node(v)
        nr.next_slot = 0
        nr.token += 1
        self._push(nr.wake, _SLOT, (nr, 0, nr.token))
        self._dirty = True

    def spawn(self, nodes: Sequence[int], at: Optional[float] = None) -> None:
        """Bring ``nodes`` into the network; they wake within the wake window after ``at``."""
        at = self.now if at is None else at
        for v in nodes:
            if not self.present[v]:
                self._add(int(v), at)

    # -- machine callbacks ------------------------------------------------
    def _on_color(self, m: NodeMachine, c) -> None:
        if not self.mobile:
            self.tracker.on_color_change(m.id, c)
        else:
            self.tracker.colors[m.id] = c
        self._dirty = True

    def _on_finished(self, m: NodeMachine, flag: bool) -> None:
        self.n_finished += 1 if flag else -1
        self._dirty = True

    def _on_redraw(self, m: NodeMachine) -> None:
        self.metrics.redraw_total += 1

    # -- event handlers ---------------------------------------------------
    def _slot(self, nr: NodeRuntime, k: int) -> None:
        m = nr.machine
        if not nr.started:
            nr.started = True
            self.started[nr.id] = True
            m.start(k)
        timer = m.timer
        if timer is not None and timer <= k:
            m.fire_timers(k)
        if m.prob != nr.p_sched:
            nr.p_sched = m.prob
            nr.k_tx = k + self._gap(nr, m.prob)
        if nr.k_tx == k:
            self._transmit(nr, k)
            nr.k_tx = k + 1 + self._gap(nr, m.prob)
        nr.next_slot = None  # force a fresh event
        self._resched(nr, k + 1)

    def _transmit(self, nr: NodeRuntime, k: int) -> None:
        m = nr.machine
        payload = m.on_transmit(k)
        if payload is None:
            raise RuntimeError(f"node {nr.id} transmits without a message")
        t = nr.wake + k
        v = nr.id
        rc = m.range_class
        pkt = Packet(v, (self.pos[v, 0], self.pos[v, 1]), t,
                     t + self.config.transmission_time, payload,
                     m.broadcast_id, rc, self._power[rc])
        self.prev_tx[v] = self.last_tx[v]
        self.last_tx[v] = t
        self._recent.append(pkt)
        self._push(pkt.end, _END, pkt)
        self.metrics.transmissions += 1
        if self.record_packets:
            self.packet_log.append((v, round(t, 9), type(payload).__name__, rc.value))

    def _receivers(self, pkt: Packet) -> np.ndarray:
        if self.mobile:
            radius = self.rb * (self.sinr.r2_factor if pkt.range_class == RangeClass.R2 else 1)
            d = np.hypot(self.pos[:, 0] - pkt.origin_pos[0], self.pos[:, 1] - pkt.origin_pos[1])
            d[pkt.origin] = INF
            return np.flatnonzero(d <= radius)
        if pkt.range_class == RangeClass.R2:
            if self._adj_r2 is None:
                self._adj_r2 = build_topology(self.pos, radius=self.rb * self.sinr.r2_factor).adjacency
            return self._adj_r2[pkt.origin]
        return self.topology.adjacency[pkt.origin]

    def _deliver(self, pkt: Packet) -> None:
        recent = self._recent
        while recent and recent[0].end <= pkt.start:
            recent.popleft()
        cand = self._receivers(pkt)
        if len(cand) == 0:
            return
        tt = self.config.transmission_time
        ok = self.started[cand] & self.present[cand]
        if self.config.channel == "sinr":
            lt, pt = self.last_tx[cand], self.prev_tx[cand]
            busy = ((lt < pkt.end) & (lt + tt > pkt.start)) | ((pt < pkt.end) & (pt + tt > pkt.start))
            ok &= ~busy & (self.decoded_until[cand] <= pkt.start)
        cand = cand[ok]
        if len(cand) == 0:
            return
        if self.config.channel == "sinr":
            others = [q for q in recent
                      if q is not pkt and q.start < pkt.end and q.end > pkt.start
                      and not pkt.same_broadcast(q)]
            if others:
                ipos = np.array([q.origin_pos for q in others])
                ipow = np.array([q.power for q in others])
            else:
                ipos = np.empty((0, 2))
                ipow = np.empty(0)
            cand = cand[feasible_mask(pkt.origin_pos, pkt.power, self.pos[cand],
                                      ipos, ipow, self.sinr)]
        sender, msg = pkt.origin, pkt.payload
        for v in cand.tolist():
            self.decoded_until[v] = pkt.end
            nr = self.nodes[v]
            k_next = math.floor(pkt.end - nr.wake) + 1
            nr.machine.on_receive(sender, msg, k_next)
            self._resched(nr, k_next)

    def _move(self, t: float) -> None:
        self.mobility.step()
        self._push(t + 1.0, _MOVE, None)

    def _counts(self):
        """(conflicted, finished, valid) counts over present nodes."""
        if self.mobile:
            colors = [nr.machine.color for nr in self.nodes]
            adj = (np.hypot(self.pos[:, None, 0] - self.pos[None, :, 0],
                            self.pos[:, None, 1] - self.pos[None, :, 1]) <= self.rb)
            np.fill_diagonal(adj, False)
            bad = conflicted_nodes(colors, adj, self.present)
            colored = np.array([c is not None for c in colors]) & self.present
            conflicted = int((bad & self.present).sum())
            valid = int((colored & ~bad).sum())
        else:
            conflicted = self.tracker.n_conflicted
            valid = self.tracker.n_colored - conflicted
        finished = self.n_finished if self.finalizing else valid
        return conflicted, finished, valid

    def _sample(self, t: float) -> None:
        conflicted, finished, valid = self._counts()
        self.recorder.record(t, conflicted, finished)
        present = int(self.present.sum())
        self.recorder.record_valid_fraction(t, valid / present if present else 1.0)
        self._push(t + self.config.sample_every, _SAMPLE, None)

    def done(self) -> bool:
        if self.mobile:
            return False
        present = int(self.present.sum())
        if self.finalizing:
            return self.n_finished == present
        tr = self.tracker
        return tr.n_colored == present and tr.n_conflicted == 0

    # -- driver -------------------------------------------------------------
    def run(self, max_slots: Optional[float] = None, *, stop_when_done: bool = True) -> RunMetrics:
        """Advance until every present node is finished (or time runs out).

        ``max_slots`` counts from the current time; without it the absolute
        ``KernelConfig.max_slots`` horizon applies.
        """
        limit = self.config.max_slots if max_slots is None else max_slots
        horizon = self.now + limit if max_slots is not None else limit
        heap = self._heap
        terminated = False
        self._dirty = True
        while heap:
            t, kind, _, payload = heap[0]
            if t > horizon:
                break
            heapq.heappop(heap)
            self.now = t
            if kind == _SLOT:
                nr, k, token = payload
                if token == nr.token:
                    self._slot(nr, k)
            elif kind == _END:
                self._deliver(payload)
            elif kind == _MOVE:
                self._move(t)
            else:
                self._sample(t)
            if self._dirty:
                self._dirty = False
                if self.recorder.enabled and not self.mobile:
                    c, f, _ = self._counts()
                    self.recorder.record(t, c, f)
                if stop_when_done and self.done():
                    terminated = True
                    break
        if not terminated and (not heap or not stop_when_done):
            terminated = self.done()
        if not terminated:
            self.now = max(self.now, horizon) if heap else self.now
        m = self.metrics
        m.runtime_slots = self.now
        m.terminated = terminated
        m.final_conflicts = self._counts()[0]
        if self.recorder.enabled:
            c, f, _ = self._counts()
            self.recorder.record(self.now, c, f)
        if self.tracker.watch is not None:
            m.disturbed_count = len(self.tracker.disturbed)
        # snapshot, so a later run() on the same simulator leaves it alone
        return m.copy()


def run(positions, factory, comm, sinr=None, config=None, **kw) -> RunMetrics:
    return Simulator(positions, factory, comm, sinr, config, **kw).run()
