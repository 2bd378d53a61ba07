import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from turret_evasion import tsp
from turret_evasion.errors import InstanceTooLarge
from oracles import brute_force_shp


def _random_metric(rng, n):
    pts = rng.uniform(-1, 1, (n, 2))
    return np.linalg.norm(pts[:, None] - pts[None, :], axis=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_held_karp_path_is_optimal(n, seed):
    dist = _random_metric(np.random.default_rng(seed), n + 1)
    order, total = tsp.held_karp_path(dist)
    _, best = brute_force_shp(dist)
    assert sorted(order) == list(range(1, n + 1))
    assert total == pytest.approx(best, abs=1e-12)
    assert tsp.path_length(dist, order) == pytest.approx(total, abs=1e-12)


def test_held_karp_tour_is_optimal():
    rng = np.random.default_rng(1)
    for _ in range(10):
        dist = _random_metric(rng, 7)
        order, total = tsp.held_karp_tour(dist)
        best = min(
            sum(dist[a, b] for a, b in zip((0, *p), (*p, 0)))
            for p in itertools.permutations(range(1, 7))
        )
        assert total == pytest.approx(best, abs=1e-12)


def test_trivial_instances():
    assert tsp.held_karp_path(np.zeros((1, 1))) == ([], 0.0)
    with pytest.raises(InstanceTooLarge):
        tsp.held_karp_path(np.zeros((tsp.MAX_EXACT + 2, tsp.MAX_EXACT + 2)))


def test_local_search_never_worsens():
    rng = np.random.default_rng(2)
    for _ in range(10):
        dist = _random_metric(rng, 40)
        order, nn_total = tsp.nearest_neighbor_path(dist)
        assert tsp.path_length(dist, order) == pytest.approx(nn_total)
        o2, t2 = tsp.two_opt_path(dist, order)
        o3, t3 = tsp.or_opt_path(dist, o2)
        assert sorted(o3) == list(range(1, 40))
        assert t3 <= t2 + 1e-12 <= nn_total + 2e-12


def test_two_opt_reaches_optimum_on_collinear_points():
    x = np.array([0.0, 3.0, 1.0, 2.0, 4.0])
    dist = np.abs(x[:, None] - x[None, :])
    order, total = tsp.two_opt_path(dist, [1, 2, 3, 4])
    assert total == pytest.approx(4.0)
