import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinrcolor.harness import ExperimentSpec, comm_for, deployment_for, run_seed, simulate
from sinrcolor.mobility import MobilitySpec, RandomDirection

AREA = (500.0, 500.0)


def walker(seed=0, n=250, **kw):
    pos = np.random.default_rng(seed).uniform(0, 500, size=(n, 2))
    return RandomDirection(MobilitySpec(area=AREA, **kw), pos, seed=seed)


def test_zero_speed_is_static():
    w = walker(mean_speed=0.0)
    start = w.pos.copy()
    for _ in range(200):
        w.step()
    assert np.array_equal(w.pos, start)


def test_zero_speed_simulation_matches_static():
    spec = ExperimentSpec(n=80, area=(300.0, 300.0))
    pos = deployment_for(spec, 0)
    comm = comm_for(spec, "rand4d", 10)
    a = simulate(pos, "rand4d", comm, 5).run()
    b = simulate(pos, "rand4d", comm, 5, mobility=MobilitySpec(mean_speed=0.0)).run()
    assert a == b


def test_reflection_at_wall():
    w = RandomDirection(MobilitySpec(mean_speed=1.0, area=AREA), np.array([[499.5, 250.0]]), seed=1)
    w.moving[:] = True
    w.remaining[:] = 50
    w.speed[:] = 2.0
    w.heading[:] = (1.0, 0.0)
    w.step()
    assert w.pos[0, 0] == pytest.approx(498.5)
    assert w.heading[0, 0] == -1.0
    w.pos[0] = (0.5, 250.0)
    w.step()
    assert w.pos[0, 0] == pytest.approx(1.5)
    assert w.heading[0, 0] == 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 20.0))
def test_positions_stay_in_bounds(seed, speed):
    w = walker(seed, n=50, mean_speed=speed)
    for _ in range(300):
        p = w.step()
        assert (p >= 0).all() and (p[:, 0] <= AREA[0]).all() and (p[:, 1] <= AREA[1]).all()


def test_density_near_uniform():
    w = walker(3)
    hist = np.zeros((4, 4))
    for t in range(10_000):
        p = w.step()
        if t % 10 == 0:
            h, _, _ = np.histogram2d(p[:, 0], p[:, 1], bins=4, range=[[0, 500], [0, 500]])
            hist += h
    assert hist.max() / hist.min() < 2


def test_deterministic():
    a, b = walker(7), walker(7)
    for _ in range(500):
        a.step()
        b.step()
    assert np.array_equal(a.pos, b.pos)
    c = walker(7)
    c.rng = np.random.default_rng(8)
    for _ in range(500):
        c.step()
    assert not np.array_equal(a.pos, c.pos)


def test_mobile_run_samples_valid_fraction():
    spec = ExperimentSpec(n=60, area=(250.0, 250.0))
    pos = deployment_for(spec, 1)
    sim = simulate(pos, "rand4d", comm_for(spec, "rand4d", 12), run_seed(0, 1),
                   mobility=MobilitySpec(mean_speed=1.0, area=(250.0, 250.0)), max_slots=2000)
    m = sim.run()
    assert not m.terminated
    assert len(m.valid_fraction_series) >= 190
    assert 0.0 <= m.mean_valid_fraction <= 1.0
    # nodes really moved
    assert not np.allclose(sim.pos, pos)
