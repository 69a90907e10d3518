import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nndensity.core import (
    Instance,
    InvalidInputError,
    InvalidTourError,
    Metric,
    Tour,
    aggregate_gaps,
    distance,
    distance_matrix,
    nint,
    optimality_gap,
    tour_length,
)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


def test_distance_examples():
    assert distance((0, 0), (3, 4)) == 5.0
    assert distance((0, 0), (1.4, 0), Metric.TSPLIB) == 1
    assert distance((0.05, 0.5), (0.95, 0.5), "torus") == pytest.approx(0.10)


def test_distance_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        distance((0, math.nan), (1, 1))
    with pytest.raises(InvalidInputError):
        distance((0, 0), (math.inf, 1))


def test_nint_rounds_half_up():
    assert nint(2.5) == 3
    assert nint(2.4999) == 2


def test_metric_parse():
    assert Metric.parse("EXACT") is Metric.EXACT
    assert Metric.parse(Metric.TORUS) is Metric.TORUS
    with pytest.raises(InvalidInputError):
        Metric.parse("manhattan")


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(0)
    for metric in (Metric.EXACT, Metric.TORUS):
        p = rng.random((100_000, 3, 2))
        d = lambda a, b: distance_matrix(np.stack([a, b]), metric)[0, 1]  # noqa: E731
        # vectorized check over all triples
        def pair(a, b):
            dx = np.abs(a - b)
            if metric is Metric.TORUS:
                dx = np.minimum(dx, 1 - dx)
            return np.hypot(dx[:, 0], dx[:, 1])
        ab, bc, ac = pair(p[:, 0], p[:, 1]), pair(p[:, 1], p[:, 2]), pair(p[:, 0], p[:, 2])
        assert np.all(ac <= ab + bc + 1e-12)
        assert d(p[0, 0], p[0, 1]) == d(p[0, 1], p[0, 0])


def test_tsplib_matrix_is_rounded_exact():
    rng = np.random.default_rng(1)
    pts = rng.integers(0, 1000, size=(30, 2)).astype(float)
    assert np.array_equal(distance_matrix(pts, Metric.TSPLIB), np.floor(distance_matrix(pts) + 0.5))


def test_instance_validation():
    with pytest.raises(InvalidInputError):
        Instance("x", np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        Instance("x", np.zeros((3, 3)))
    with pytest.raises(InvalidInputError):
        Instance("x", [[0, 0], [1, np.nan], [2, 2]])
    with pytest.raises(InvalidInputError):
        Instance("x", [[0, 0], [1, 2], [0.5, 0.5]], Metric.TORUS)
    inst = Instance("x", SQUARE)
    with pytest.raises(ValueError):
        inst.coords[0, 0] = 5.0


def test_tour_length_examples():
    sq = Instance("sq", SQUARE)
    assert tour_length(sq, [0, 1, 2, 3]) == 4.0
    tri = Instance("tri", [[0, 0], [3, 0], [0, 4]])
    for perm in itertools.permutations(range(3)):
        assert tour_length(tri, perm) == 12.0


def test_tour_length_matches_independent_loop():
    rng = np.random.default_rng(7)
    pts = rng.random((7, 2))
    inst = Instance("r7", pts)
    order = rng.permutation(7)
    ref = sum(math.dist(pts[order[i]], pts[order[(i + 1) % 7]]) for i in range(7))
    assert tour_length(inst, order) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("order", [[0, 1, 2], [0, 1, 1, 2], [0, 1, 2, 4], [0, 1, 2, -1]])
def test_tour_length_rejects_non_permutations(order):
    with pytest.raises(InvalidTourError):
        tour_length(Instance("sq", SQUARE), order)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**32 - 1), st.integers(0, 39))
def test_tour_length_rotation_and_reversal_invariant(n, seed, shift):
    rng = np.random.default_rng(seed)
    inst = Instance("r", rng.random((n, 2)))
    order = rng.permutation(n)
    base = tour_length(inst, order)
    assert tour_length(inst, np.roll(order, shift % n)) == base
    assert tour_length(inst, order[::-1]) == base


def test_tour_canonical_and_neighbors():
    sq = Instance("sq", SQUARE)
    t = Tour.from_order(sq, [2, 1, 0, 3])
    c = t.canonical()
    assert list(c.order) == [0, 1, 2, 3]
    assert c.length == t.length
    nb = c.neighbors()
    assert set(nb[0]) == {1, 3}


def test_optimality_gap():
    assert optimality_gap(5.928, 5.688) == pytest.approx(0.04219, abs=1e-5)
    assert optimality_gap(3.0, 3.0) == 0.0
    assert optimality_gap(6.0, 3.0) == 1.0
    with pytest.raises(InvalidInputError):
        optimality_gap(1.0, 0.0)
    with pytest.warns(RuntimeWarning):
        optimality_gap(0.9, 1.0)


def test_aggregate_gaps_reports_both_conventions():
    agg = aggregate_gaps([2.0, 3.0], [1.0, 3.0])
    assert agg["mean_of_gaps"] == pytest.approx(0.5)
    assert agg["ratio_of_means"] == pytest.approx(0.25)
    with pytest.raises(InvalidInputError):
        aggregate_gaps([], [])
