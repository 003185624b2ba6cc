import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowdim_coreset import disc
from lowdim_coreset.core import WeightedPointSet
from lowdim_coreset.datasets import unit_ball_points


def unit_vec(d):
    return st.lists(st.floats(-1, 1), min_size=d, max_size=d).map(np.array).filter(
        lambda v: np.linalg.norm(v) <= 1)


@settings(max_examples=200, deadline=None)
@given(unit_vec(3), st.lists(st.floats(-0.14, 0.14), min_size=3, max_size=3), st.floats(1, 64))
def test_lifting_identity(p, cp, r):
    cp = np.array(cp)
    c = cp * 4 * r
    lhs = np.dot(disc.lift_phi(p).lifted, disc.lift_psi(cp, r))
    rhs = np.sum((p - c) ** 2) / (16 * r * r)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


def test_lift_roundtrip_and_norms():
    X = unit_ball_points(20, 4, seed=1)
    L = disc.lift_phi_many(X)
    assert np.allclose(disc.unlift(L), X)
    assert np.all(np.linalg.norm(L, axis=1) <= 1 + 1e-12)
    with pytest.raises(ValueError):
        disc.lift_phi_many([[2.0, 0.0]])
    with pytest.raises(ValueError):
        disc.lift_psi([0.5, 0.0], 1.0)
    with pytest.raises(ValueError):
        disc.lift_psi([0.1, 0.0], 0.5)


def test_tensor_estimate_exact_orders():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(30, 3))
    s = disc.random_balanced_signs(30, rng)
    assert disc.tensor_disc_estimate(V, s, 1) == pytest.approx(np.linalg.norm(s @ V))
    # brute force over many directions never exceeds the exact value
    Q = rng.normal(size=(5000, 3))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    brute = np.max(np.abs(((V @ Q.T) ** 2).T @ s))
    assert disc.tensor_disc_estimate(V, s, 2) >= brute - 1e-9
    assert disc.tensor_disc_estimate(V, s, 3) >= 0.95 * np.max(np.abs(((V @ Q.T) ** 3).T @ s))


@pytest.mark.parametrize("n", [1, 2, 7, 64])
def test_random_balanced_signs(n):
    s = disc.random_balanced_signs(n, np.random.default_rng(n))
    assert abs(s.sum()) <= 1 and set(np.unique(s)) <= {-1.0, 1.0}


def test_color_is_balanced_and_beats_random():
    L = disc.lift_phi_many(unit_ball_points(257, 3, seed=2))
    col = disc.color(L, seed=0)
    assert col.balance <= 1
    assert col.potential <= col.initial_potential
    assert col.achieved_norms[1] <= disc.random_order1_median(L, 32, seed=1)


def test_color_is_seeded():
    L = disc.lift_phi_many(unit_ball_points(64, 2, seed=3))
    assert np.array_equal(disc.color(L, seed=5).signs, disc.color(L, seed=5).signs)


def test_halve_preserves_weight():
    P = WeightedPointSet(unit_ball_points(11, 2, seed=4))
    s = disc.random_balanced_signs(11, np.random.default_rng(0))
    Q, keep = disc.halve(P, s)
    assert len(Q) == 5 and Q.total_weight == pytest.approx(11.0)
    with pytest.raises(ValueError):
        disc.halve(P, np.ones(11))


def test_mixed_coreset_small_run():
    P = WeightedPointSet(unit_ball_points(512, 2, seed=5))
    mc = disc.mixed_coreset(P, 0.2, z=1, seed=0, samples=1100)
    assert mc.size <= disc.target_size(2, 0.2)
    assert mc.subset.total_weight == pytest.approx(512.0)
    assert mc.rounds == len(mc.log)
    assert all(r.drift <= r.drift_bound * (1 + 1e-9) + 1e-12 for r in mc.log)
    assert np.array_equal(mc.subset.points, P.points[mc.indices])


def test_target_size():
    assert disc.target_size(4, 0.1) == 160


def test_class_discrepancy_estimate_zero_for_symmetric():
    X = np.array([[0.5, 0.0], [0.5, 0.0]])
    assert disc.class_discrepancy_estimate(X, np.array([1.0, -1.0]), 2.0, samples=50) == 0.0


def test_lift_examples():
    L = disc.lift_phi(np.zeros(3))
    assert np.array_equal(L.lifted, [0, 0, 0, 0, 0.5]) and L.norm == 0.5
    rng = np.random.default_rng(1)
    for _ in range(200):
        c = rng.normal(size=3)
        c *= 0.25 * rng.random() / np.linalg.norm(c)
        assert np.linalg.norm(disc.lift_psi(c, 1 + 10 * rng.random())) <= 1 / 3


def test_color_trivial_cases():
    L = disc.lift_phi_many(np.array([[0.3, 0.1], [0.3, 0.1]]))
    col = disc.color(L)
    assert sorted(col.signs) == [-1.0, 1.0]
    assert all(v == pytest.approx(0.0, abs=1e-15) for v in col.achieved_norms.values())
    p = np.array([0.4, -0.2])
    A = disc.lift_phi_many(np.array([p, -p]))
    raw = (np.ones(2) @ A)[1:-1]
    assert np.allclose(raw, 0.0)


def test_color_n1024_d8_beats_random_median():
    L = disc.lift_phi_many(unit_ball_points(1024, 8, seed=6))
    col = disc.color(L, seed=0)
    assert col.achieved_norms[1] <= disc.random_order1_median(L, 32, seed=0)


def test_tensor_estimate_trivial_and_small_dense():
    V = disc.lift_phi_many(np.array([[0.5, 0.5]] * 3))
    n = np.linalg.norm(V[0])
    assert disc.tensor_disc_estimate(V, np.ones(3), 3) == pytest.approx(3 * n ** 3, rel=1e-9)
    rng = np.random.default_rng(2)
    V = rng.normal(size=(6, 4))
    s = np.array([1.0, -1, 1, -1, 1, -1])
    Q = rng.normal(size=(100_000, 4))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    brute = np.max(np.abs(((V @ Q.T) ** 2).T @ s))
    assert disc.tensor_disc_estimate(V, s, 2) == pytest.approx(brute, rel=0.01)


def test_halve_examples_and_drift():
    P = WeightedPointSet(np.array([[0.2, 0.2], [0.2, 0.2]]))
    Q, _ = disc.halve(P, np.array([1.0, -1.0]))
    assert len(Q) == 1 and Q.weights[0] == 2.0
    cur = WeightedPointSet(unit_ball_points(1024, 3, seed=7))
    r = 0
    while len(cur) > 16:
        L = disc.lift_phi_many(cur.points)
        col = disc.color(L, seed=r)
        new, _ = disc.halve(cur, col.signs)
        drift = np.linalg.norm(cur.weights @ cur.points - new.weights @ new.points)
        assert drift <= cur.weights.max() * math.sqrt(2) * col.achieved_norms[1] * (1 + 1e-9) + 1e-12
        assert new.total_weight == pytest.approx(1024, rel=1e-12)
        cur, r = new, r + 1


def test_mixed_coreset_small_input_and_weights():
    P = WeightedPointSet(unit_ball_points(50, 2, seed=8))
    mc = disc.mixed_coreset(P, 0.2, samples=220)
    assert mc.size == 50 and mc.rounds == 0 and mc.empirical_violation == 0.0
    P = WeightedPointSet(unit_ball_points(4096, 4, seed=9))
    mc = disc.mixed_coreset(P, 0.1, samples=1100)
    assert mc.size <= 160
    assert np.allclose(mc.subset.weights, 2.0 ** mc.rounds)
    assert np.all(mc.subset.weights > 0)
    with pytest.raises(ValueError):
        disc.mixed_coreset(WeightedPointSet([[1.5, 0.0]]), 0.1)


@pytest.mark.parametrize("z", [1.0, 2.0, 3.0])
def test_signed_cost_scale_identity(z):
    # for a fixed coloring: sum s |p - c|^z = (4r)^z sum s |p/(4r) - c/(4r)|^z
    from lowdim_coreset.core import CenterSet, cost
    X = unit_ball_points(64, 3, seed=10)
    s = disc.random_balanced_signs(64, np.random.default_rng(0))
    r = 3.0
    plus, minus = WeightedPointSet(X[s > 0]), WeightedPointSet(X[s < 0])
    sp, sm = plus.scaled(1 / (4 * r)), minus.scaled(1 / (4 * r))
    for c in np.random.default_rng(1).normal(size=(20, 3)) * r:
        lhs = cost(plus, CenterSet([c]), z) - cost(minus, CenterSet([c]), z)
        C2 = CenterSet([c / (4 * r)])
        rhs = (4 * r) ** z * (cost(sp, C2, z) - cost(sm, C2, z))
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * cost(plus, CenterSet([c]), z))


def test_class_discrepancy_examples():
    X = unit_ball_points(40, 2, seed=11)
    est = disc.class_discrepancy_estimate(X, np.ones(40), 1.0, samples=500)
    from lowdim_coreset.core import CenterSet, cost
    G = np.linspace(-1, 1, 41)
    grid = np.array([[a, b] for a in G for b in G if a * a + b * b <= 1])
    min_mean = min(cost(WeightedPointSet(X), CenterSet([c])) for c in grid) / 40
    assert est >= min_mean * (1 - 1e-2)
    Y = np.repeat(X[:10], 2, axis=0)
    s = np.tile([1.0, -1.0], 10)
    assert disc.class_discrepancy_estimate(Y, s, 1.0, samples=200) == pytest.approx(0.0, abs=1e-12)
    s = disc.random_balanced_signs(40, np.random.default_rng(3))
    for z in (1.0, 2.0):
        a = disc.class_discrepancy_estimate(X, s, 2.0, z, samples=1000, seed=4)
        b = disc.class_discrepancy_estimate(X / 8, s, 0.25, z, samples=1000, seed=4) * 8 ** z
        assert 0.5 <= a / b <= 2.0
