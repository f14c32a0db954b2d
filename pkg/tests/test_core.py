import numpy as np
import pytest

from scdsim.core import (
    ClusterSpec,
    Job,
    RandomStreams,
    ServerQueue,
    as_probability_vector,
    draw_geometric_capacity,
    draw_poisson,
    offered_load,
)

N = 10**6


def test_poisson_zero_rate():
    assert draw_poisson(np.random.default_rng(0), 0.0) == 0


def test_poisson_moments():
    x = np.random.default_rng(11).poisson(4.0, N)
    assert 3.98 <= x.mean() <= 4.02
    assert 3.9 <= x.var() <= 4.1
    s = np.random.default_rng(3)
    assert isinstance(draw_poisson(s, 4.0), int)


def test_poisson_negative_rate():
    with pytest.raises(ValueError):
        draw_poisson(np.random.default_rng(0), -1.0)


def test_geometric_capacity_moments():
    # same parameterisation as draw_geometric_capacity, vectorised
    x = np.random.default_rng(5).geometric(1 / 6, N) - 1
    assert x.min() >= 0
    assert 4.95 <= x.mean() <= 5.05
    y = np.random.default_rng(6).geometric(0.5, N) - 1
    assert abs((y == 0).mean() - 0.5) <= 0.005


def test_geometric_capacity_scalar():
    s = np.random.default_rng(1)
    draws = [draw_geometric_capacity(s, 2.5) for _ in range(2000)]
    assert min(draws) >= 0 and all(isinstance(d, int) for d in draws)
    assert abs(np.mean(draws) - 2.5) < 0.3
    with pytest.raises(ValueError):
        draw_geometric_capacity(s, 0.0)


def test_offered_load_examples():
    assert offered_load(ClusterSpec((4.0,), (1.0, 1.0))) == 0.5
    assert offered_load(ClusterSpec((1.0,), (0.0,))) == 0.0
    rates = np.random.default_rng(2).uniform(1, 10, 37)
    spec = ClusterSpec.with_load(rates, 10, 0.99)
    assert abs(offered_load(spec) - 0.99) < 1e-12


def test_cluster_validation():
    with pytest.raises(ValueError):
        ClusterSpec((), (1.0,))
    with pytest.raises(ValueError):
        ClusterSpec((1.0, 0.0), (1.0,))
    with pytest.raises(ValueError):
        ClusterSpec((1.0,), (-1.0,))
    with pytest.raises(ValueError):
        ClusterSpec((1.0,), (2.0,)).require_admissible()
    ClusterSpec((3.0,), (2.0,)).require_admissible()


def test_server_queue_fifo():
    sq = ServerQueue(1.0)
    for i in range(3):
        sq.push(Job(0, i))
    assert [j.seq for j in sq.serve(5)] == [0, 1, 2]
    assert len(sq) == 0


def test_probability_vector():
    p = as_probability_vector([0.5, 0.5 - 1e-13, 1e-13])
    assert p.min() >= 0
    with pytest.raises(ValueError):
        as_probability_vector([0.6, 0.6])
    with pytest.raises(ValueError):
        as_probability_vector([1.1, -0.1])
    with pytest.raises(ValueError):
        as_probability_vector([])


def test_streams_replay_bit_identical():
    spec = ClusterSpec.with_load([1.0, 2.0, 3.0], 2, 0.8)
    a1, c1 = RandomStreams(42).traffic_chunk(spec, 500)
    a2, c2 = RandomStreams(42).traffic_chunk(spec, 500)
    assert np.array_equal(a1, a2) and np.array_equal(c1, c2)
    a3, _ = RandomStreams(43).traffic_chunk(spec, 500)
    assert not np.array_equal(a1, a3)


def test_streams_chunking_invariant():
    spec = ClusterSpec.with_load([1.0, 5.0], 3, 0.5)
    whole = RandomStreams(9).traffic_chunk(spec, 300)
    rs = RandomStreams(9)
    parts = [rs.traffic_chunk(spec, k) for k in (100, 150, 50)]
    assert np.array_equal(whole[0], np.vstack([p[0] for p in parts]))
    assert np.array_equal(whole[1], np.vstack([p[1] for p in parts]))


def test_policy_streams_do_not_touch_traffic():
    spec = ClusterSpec.with_load([1.0, 2.0], 2, 0.9)
    rs = RandomStreams(7)
    rs.policy("scd", 0).random(1000)
    rs.scratch().random(10)
    a, c = rs.traffic_chunk(spec, 50)
    b, d = RandomStreams(7).traffic_chunk(spec, 50)
    assert np.array_equal(a, b) and np.array_equal(c, d)
    x = RandomStreams(7).policy("scd", 0).random(4)
    y = RandomStreams(7).policy("jsq", 0).random(4)
    z = RandomStreams(7).policy("scd", 1).random(4)
    assert not np.array_equal(x, y) and not np.array_equal(x, z)


def test_draw_rates_reproducible():
    assert np.array_equal(RandomStreams(3).draw_rates(5, 1, 10), RandomStreams(3).draw_rates(5, 1, 10))
    r = RandomStreams(3).draw_rates(1000, 1, 10)
    assert r.min() >= 1 and r.max() <= 10
