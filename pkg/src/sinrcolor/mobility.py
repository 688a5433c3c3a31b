"""Random-direction mobility with Gaussian move/wait times and speeds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MobilitySpec:
    mean_speed: float = 1.0       # metres per slot
    speed_variance: float = 2.0
    mean_time: float = 100.0      # slots per move or wait phase
    time_variance: float = 50.0
    area: tuple = (500.0, 500.0)

    @property
    def static(self) -> bool:
        return self.mean_speed == 0.0


class RandomDirection:
    """Vectorized random-direction walk with reflecting borders.

    Nodes alternate between waiting and moving.  Each phase length is drawn
    from N(mean_time, time_variance) clamped to at least one slot; each moving
    phase draws a speed from N(mean_speed, speed_variance) clamped at zero and
    a uniform heading.
    """

    def __init__(self, spec: MobilitySpec, positions: np.ndarray, seed=0):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.pos = np.array(positions, dtype=float)
        n = len(self.pos)
        self.moving = self.rng.random(n) < 0.5
        self.remaining = self._durations(n)
        self.speed = np.zeros(n)
        self.heading = np.zeros((n, 2))
        self._new_legs(np.flatnonzero(self.moving))

    def _durations(self, m: int) -> np.ndarray:
        s = self.spec
        d = self.rng.normal(s.mean_time, math.sqrt(s.time_variance), size=m)
        return np.maximum(1, np.rint(d)).astype(np.int64)

    def _new_legs(self, idx: np.ndarray) -> None:
        if len(idx) == 0:
            return
        s = self.spec
        self.speed[idx] = np.maximum(
            0.0, self.rng.normal(s.mean_speed, math.sqrt(s.speed_variance), size=len(idx)))
        ang = self.rng.uniform(0.0, 2 * math.pi, size=len(idx))
        self.heading[idx, 0] = np.cos(ang)
        self.heading[idx, 1] = np.sin(ang)

    def step(self, dt: float = 1.0) -> np.ndarray:
        """Advance every node by ``dt`` slots; returns the new positions."""
        if self.spec.static:
            return self.pos
        w, h = self.spec.area
        mv = self.moving
        self.pos[mv] += self.heading[mv] * (self.speed[mv] * dt)[:, None]
        for axis, lim in ((0, w), (1, h)):
            lo = self.pos[:, axis] < 0.0
            self.pos[lo, axis] = -self.pos[lo, axis]
            self.heading[lo, axis] = -self.heading[lo, axis]
            hi = self.pos[:, axis] > lim
            self.pos[hi, axis] = 2 * lim - self.pos[hi, axis]
            self.heading[hi, axis] = -self.heading[hi, axis]
        np.clip(self.pos, (0.0, 0.0), (w, h), out=self.pos)
        self.remaining -= 1
        flip = np.flatnonzero(self.remaining <= 0)
        if len(flip):
            self.moving[flip] = ~self.moving[flip]
            self.remaining[flip] = self._durations(len(flip))
            self._new_legs(flip[self.moving[flip]])
        return self.pos
