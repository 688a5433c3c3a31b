"""Node placement strategies, neighborhood graphs and position files."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .sinr import SinrParams, broadcast_range


class Strategy(str, Enum):
    RANDOM = "random"
    GRID = "grid"
    PERTURBED_GRID = "perturbed_grid"
    CLUSTER = "cluster"
    CLUSTER_RANDOM = "cluster_random"
    CLUSTER_GRID = "cluster_grid"
    CLUSTER_PERTURBED_GRID = "cluster_perturbed_grid"


# short labels used in the result tables
STRATEGY_LABELS = {
    Strategy.RANDOM: "R", Strategy.GRID: "G", Strategy.PERTURBED_GRID: "PG",
    Strategy.CLUSTER: "C", Strategy.CLUSTER_RANDOM: "C&R",
    Strategy.CLUSTER_GRID: "C&G", Strategy.CLUSTER_PERTURBED_GRID: "C&PG",
}

_MIXED_REST = {
    Strategy.CLUSTER_RANDOM: Strategy.RANDOM,
    Strategy.CLUSTER_GRID: Strategy.GRID,
    Strategy.CLUSTER_PERTURBED_GRID: Strategy.PERTURBED_GRID,
}

# Cluster spread (per-axis standard deviation, metres).  Tuned once against the
# reported maximum degree of the pure cluster deployment at n=1000.
CLUSTER_SIGMA = 30.0


class PositionFileError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass(frozen=True)
class DeploymentSpec:
    strategy: Strategy = Strategy.RANDOM
    n: int = 1000
    area: tuple = (1000.0, 1000.0)
    clusters: int = 10
    mix_fraction: float = 0.5
    seed: int = 0
    cluster_sigma: float = CLUSTER_SIGMA
    # side length of the square each perturbed grid point is drawn from
    perturbation: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ValueError(f"area must be positive, got {self.area}")
        if self.clusters < 1:
            raise ValueError("clusters must be >= 1")
        if not 0.0 <= self.mix_fraction <= 1.0:
            raise ValueError("mix_fraction must lie in [0, 1]")


@dataclass
class Topology:
    positions: np.ndarray
    radius: float
    adjacency: List[np.ndarray] = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def delta(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[v]


def grid_points(n: int, width: float, height: float) -> np.ndarray:
    """Centered lattice with ceil(sqrt(n)) columns and half-pitch margins."""
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    px, py = width / cols, height / rows
    idx = np.arange(n)
    x = (idx % cols + 0.5) * px
    y = (idx // cols + 0.5) * py
    return np.column_stack([x, y])


def _cluster_points(n, spec: DeploymentSpec, rng) -> np.ndarray:
    w, h = spec.area
    centers = rng.uniform((0.0, 0.0), (w, h), size=(spec.clusters, 2))
    out = np.empty((n, 2))
    for i in range(n):
        c = centers[i % spec.clusters]
        while True:
            pt = rng.normal(c, spec.cluster_sigma)
            if 0.0 <= pt[0] <= w and 0.0 <= pt[1] <= h:
                break
        out[i] = pt
    return out


def _place(strategy: Strategy, n: int, spec: DeploymentSpec, rng) -> np.ndarray:
    w, h = spec.area
    if n == 0:
        return np.empty((0, 2))
    if strategy == Strategy.RANDOM:
        return rng.uniform((0.0, 0.0), (w, h), size=(n, 2))
    if strategy == Strategy.GRID:
        return grid_points(n, w, h)
    if strategy == Strategy.PERTURBED_GRID:
        half = spec.perturbation / 2.0
        pts = grid_points(n, w, h) + rng.uniform(-half, half, size=(n, 2))
        return np.clip(pts, (0.0, 0.0), (w, h))
    if strategy == Strategy.CLUSTER:
        return _cluster_points(n, spec, rng)
    n_cluster = int(math.floor(spec.mix_fraction * n))
    return np.vstack([
        _cluster_points(n_cluster, spec, rng),
        _place(_MIXED_REST[strategy], n - n_cluster, spec, rng),
    ])


def generate(spec: DeploymentSpec) -> np.ndarray:
    """Positions as an (n, 2) array, rounded to micrometres so files round-trip."""
    rng = np.random.default_rng(spec.seed)
    return np.round(_place(spec.strategy, spec.n, spec, rng), 6)


def build_topology(positions, p: Optional[SinrParams] = None, *,
                   radius: Optional[float] = None) -> Topology:
    """Unit-disk neighbor relation under the broadcast range (or ``radius``)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if radius is None:
        radius = broadcast_range(p or SinrParams())
    d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    m = d <= radius
    np.fill_diagonal(m, False)
    adj = [np.flatnonzero(row) for row in m]
    return Topology(positions=pos, radius=radius, adjacency=adj, matrix=m)


def write_positions(path, positions) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("# id x y (metres)\n")
        for i, (x, y) in enumerate(np.asarray(positions).reshape(-1, 2)):
            fh.write(f"{i} {x:.6f} {y:.6f}\n")


def read_positions(path) -> np.ndarray:
    rows = []
    with Path(path).open() as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise PositionFileError(line_no, f"expected 'id x y', got {raw.strip()!r}")
            try:
                int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise PositionFileError(line_no, str(exc)) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise PositionFileError(line_no, "non-finite coordinate")
            rows.append((x, y))
    return np.array(rows, dtype=float).reshape(-1, 2)
