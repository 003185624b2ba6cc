import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowdim_coreset.core import (CenterSet, CostParams, WeightedPointSet, as_points, assign, cost,
                                 fast_cost, point_costs, read_points_csv, relative_error,
                                 write_points_csv)

coords = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30)


def loop_cost(points, weights, centers, z):
    total = 0.0
    for p, w in zip(points, weights):
        total += w * min(math.dist(p, c) ** z for c in centers)
    return total


def test_weights_default_to_one():
    P = WeightedPointSet([[1.0], [2.0]])
    assert P.total_weight == 2.0
    assert P.dim == 1 and len(P) == 2


def test_rejects_negative_and_nonfinite():
    with pytest.raises(ValueError):
        WeightedPointSet([[1.0]], [-1.0])
    with pytest.raises(ValueError):
        WeightedPointSet([[np.nan]])


def test_zero_rows_keep_dim():
    P = WeightedPointSet(np.zeros((0, 3)))
    assert P.dim == 3 and P.total_weight == 0.0


def test_costparams_positive():
    with pytest.raises(ValueError):
        CostParams(0)


def test_cost_matches_loop_2d():
    rng = np.random.default_rng(1)
    pts, w, C = rng.normal(size=(50, 2)), rng.random(50), rng.normal(size=(3, 2))
    for z in (1, 2, 3):
        ref = loop_cost(pts, w, C, z)
        assert cost(WeightedPointSet(pts, w), CenterSet(C), z) == pytest.approx(ref, rel=1e-12)
        assert fast_cost(pts, w, C, z) == pytest.approx(ref, rel=1e-12)


def test_assign_picks_nearest():
    P = as_points([0.0, 4.0, 10.0])
    assert assign(P, CenterSet([[1.0], [9.0]])).tolist() == [0, 0, 1]


def test_large_offsets_do_not_lose_precision():
    P = as_points([1e12, 1e12 + 1])
    assert cost(P, CenterSet([[1e12]])) == 1.0


def test_relative_error_conventions():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(0.0, 1.0) == math.inf
    assert relative_error(2.0, 1.0) == 0.5


def test_csv_roundtrip(tmp_path):
    P = WeightedPointSet([[0.1, 1 / 3], [2.0, -5.0]], [0.5, 1e-17])
    f = tmp_path / "p.csv"
    write_points_csv(f, P)
    Q = read_points_csv(f)
    assert np.array_equal(Q.points, P.points) and np.array_equal(Q.weights, P.weights)


def test_csv_without_weights(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("x0\n1\n2\n")
    assert read_points_csv(f).weights.tolist() == [1.0, 1.0]


@pytest.mark.parametrize("text", ["", "a,b\n1,2\n", "x0,w\n1\n", "x0\nfoo\n"])
def test_csv_errors(tmp_path, text):
    f = tmp_path / "bad.csv"
    f.write_text(text)
    with pytest.raises(ValueError):
        read_points_csv(f)


@settings(max_examples=60, deadline=None)
@given(coords, st.floats(-100, 100), st.floats(0.1, 10))
def test_translation_and_scaling(xs, t, s):
    P = as_points(xs)
    C = CenterSet([[0.5], [-2.0]])
    base = cost(P, C)
    moved = cost(P.translated([t]), CenterSet(C.centers + t))
    assert moved == pytest.approx(base, rel=1e-9, abs=1e-6)
    assert cost(P.scaled(s), CenterSet(C.centers * s)) == pytest.approx(s * base, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(coords)
def test_point_costs_sum_to_cost(xs):
    P = as_points(xs)
    C = CenterSet([[1.0]])
    assert math.fsum(point_costs(P, C) * P.weights) == pytest.approx(cost(P, C), rel=1e-12, abs=1e-12)


def test_cost_examples():
    P = as_points([0.0, 1.0])
    assert cost(P, CenterSet([[0.0], [1.0]])) == 0.0
    assert cost(P, CenterSet([[0.5]])) == 1.0
    assert cost(WeightedPointSet(np.zeros((0, 1))), CenterSet([[0.0]])) == 0.0


def test_assign_ties_lowest_index():
    assert assign(as_points([0.0]), CenterSet([[0.0]])).tolist() == [0]
    assert assign(as_points([0.5]), CenterSet([[0.0], [1.0]])).tolist() == [0]
    rng = np.random.default_rng(9)
    pts, C = rng.integers(0, 4, size=(40, 2)).astype(float), rng.integers(0, 4, size=(5, 2)).astype(float)
    ref = [int(np.argmin([math.dist(p, c) for c in C])) for p in pts]
    assert assign(WeightedPointSet(pts), CenterSet(C)).tolist() == ref


def test_relative_error_examples():
    assert relative_error(10.0, 10.0) == 0.0
    assert relative_error(10.0, 9.0) == pytest.approx(0.1)


@settings(max_examples=60, deadline=None)
@given(coords, st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=4), st.floats(-1e3, 1e3),
       st.floats(0.01, 100))
def test_cost_invariants(xs, cs, extra, alpha):
    P = as_points(xs)
    C = CenterSet(np.array(cs).reshape(-1, 1))
    base = cost(P, C)
    assert base >= 0
    assert cost(P, CenterSet(np.append(cs, extra).reshape(-1, 1))) <= base * (1 + 1e-12) + 1e-12
    assert cost(P.reweighted(P.weights * alpha), C) == pytest.approx(alpha * base, rel=1e-9, abs=1e-12)
    assert (cost(P, CenterSet(np.array(xs).reshape(-1, 1))) == 0.0)
