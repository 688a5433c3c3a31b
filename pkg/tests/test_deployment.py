import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinrcolor.deployment import (DeploymentSpec, PositionFileError, Strategy, build_topology,
                                  generate, grid_points, read_positions, write_positions)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(Strategy)), st.integers(1, 400), st.integers(0, 2**32),
       st.floats(10, 2000), st.floats(10, 2000))
def test_positions_in_bounds(strategy, n, seed, w, h):
    pos = generate(DeploymentSpec(strategy, n=n, area=(w, h), seed=seed))
    assert pos.shape == (n, 2)
    assert (pos[:, 0] >= 0).all() and (pos[:, 0] <= w).all()
    assert (pos[:, 1] >= 0).all() and (pos[:, 1] <= h).all()


@pytest.mark.parametrize("strategy", list(Strategy))
def test_deterministic(strategy):
    a = generate(DeploymentSpec(strategy, n=300, seed=11))
    b = generate(DeploymentSpec(strategy, n=300, seed=11))
    c = generate(DeploymentSpec(strategy, n=300, seed=12))
    assert np.array_equal(a, b)
    if strategy != Strategy.GRID:
        assert not np.array_equal(a, c)


def test_grid_pitch_and_margins():
    pos = grid_points(1000, 1000.0, 1000.0)
    xs = np.unique(pos[:, 0])
    assert len(xs) == 32
    pitch = np.diff(xs)
    assert np.allclose(pitch, 31.25)
    assert xs[0] == pytest.approx(pitch[0] / 2)
    assert 1000 - xs[-1] == pytest.approx(pitch[0] / 2)


def test_grid_delta_20():
    pos = generate(DeploymentSpec(Strategy.GRID, n=1000, area=(1000, 1000)))
    assert build_topology(pos).delta == 20


def test_perturbed_grid_zero_offset_is_grid():
    g = generate(DeploymentSpec(Strategy.GRID, n=100, seed=3))
    pg = generate(DeploymentSpec(Strategy.PERTURBED_GRID, n=100, seed=3, perturbation=0.0))
    assert np.array_equal(g, pg)


def test_perturbed_grid_offsets():
    g = generate(DeploymentSpec(Strategy.GRID, n=1000, seed=3))
    pg = generate(DeploymentSpec(Strategy.PERTURBED_GRID, n=1000, seed=3))
    off = pg - g
    assert np.abs(off).max() <= 0.5 + 1e-6
    assert np.abs(off).max() > 0.4


def test_cluster_round_robin():
    spec = DeploymentSpec(Strategy.CLUSTER, n=1000, clusters=10, seed=5, cluster_sigma=1.0)
    pos = generate(spec)
    # with a tiny spread the ten clusters are trivially separable; members are v, v+10, ...
    for c in range(10):
        members = pos[c::10]
        assert len(members) == 100
        assert np.linalg.norm(members - members.mean(axis=0), axis=1).max() < 10


def test_mixed_fraction():
    spec = DeploymentSpec(Strategy.CLUSTER_GRID, n=200, clusters=4, seed=5, cluster_sigma=1.0)
    pos = generate(spec)
    grid_like = generate(DeploymentSpec(Strategy.GRID, n=100, area=spec.area))
    # the second half is exactly the grid model
    assert np.array_equal(pos[100:], grid_like)


def test_single_node_delta_zero():
    assert build_topology(np.array([[5.0, 5.0]])).delta == 0


def test_topology_symmetric_and_radius():
    pos = generate(DeploymentSpec(Strategy.RANDOM, n=300, area=(500, 500), seed=1))
    t = build_topology(pos)
    m = t.matrix
    assert (m == m.T).all() and not m.diagonal().any()
    d = np.hypot(*(pos[:, None, :] - pos[None, :, :]).transpose(2, 0, 1))
    expect = (d <= t.radius) & ~np.eye(300, dtype=bool)
    assert (m == expect).all()
    assert t.delta == m.sum(axis=1).max()
    for v in range(300):
        assert set(t.adjacency[v]) == set(np.flatnonzero(m[v]))


def test_random_degree_statistics():
    deltas, avgs = [], []
    for seed in range(20):
        t = build_topology(generate(DeploymentSpec(Strategy.RANDOM, n=1000, seed=seed)))
        deltas.append(t.delta)
        avgs.append(t.degrees.mean())
    assert abs(np.mean(avgs) - 20.6) <= 0.2 * 20.6
    assert abs(np.mean(deltas) - 36.6) <= 0.15 * 36.6


def test_cluster_delta_near_reported():
    deltas = [build_topology(generate(DeploymentSpec(Strategy.CLUSTER, n=1000, seed=s))).delta
              for s in range(5)]
    assert abs(np.mean(deltas) - 182) <= 0.25 * 182


class TestPositionFiles:
    def test_round_trip(self, tmp_path):
        for strategy in Strategy:
            pos = generate(DeploymentSpec(strategy, n=57, seed=9))
            p = tmp_path / f"{strategy.value}.txt"
            write_positions(p, pos)
            assert np.array_equal(read_positions(p), pos)

    def test_empty(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("")
        assert len(read_positions(p)) == 0

    def test_comments(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("# header\n0 1.5 2.5\n\n1 3 4  # trailing\n")
        assert read_positions(p).tolist() == [[1.5, 2.5], [3.0, 4.0]]

    def test_bad_coordinate(self, tmp_path):
        p = tmp_path / "b.txt"
        p.write_text("# x\n0 1.0 2.0\n1 abc 2.0\n")
        with pytest.raises(PositionFileError) as e:
            read_positions(p)
        assert e.value.line_no == 3

    def test_writer_six_decimals(self, tmp_path):
        p = tmp_path / "w.txt"
        write_positions(p, np.array([[1.0, 2.25]]))
        lines = [l for l in p.read_text().splitlines() if not l.startswith("#")]
        assert lines == ["0 1.000000 2.250000"]


@pytest.mark.parametrize("kw", [dict(n=0), dict(area=(0, 10)), dict(clusters=0),
                                dict(mix_fraction=1.5)])
def test_invalid_spec(kw):
    with pytest.raises(ValueError):
        DeploymentSpec(**kw)
