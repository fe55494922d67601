import math

import cvxpy as cp
import mpmath
import numpy as np
import pytest

from dicluster.core import Ensemble, RunParams
from dicluster.packing import (CalibrationError, calibrate_n_max, check_condition_4,
                               current_components, hull_distance, hulls_separated, is_r_densely_packed,
                               r_threshold_simplified, rigidity_factor)

from oracles import brute_packed


def qp_hull_distance(P, Q):
    a = cp.Variable(len(P), nonneg=True)
    b = cp.Variable(len(Q), nonneg=True)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(P.T @ a - Q.T @ b)), [cp.sum(a) == 1, cp.sum(b) == 1])
    prob.solve()
    return math.sqrt(max(prob.value, 0.0))


@pytest.mark.parametrize("seed", range(12))
def test_hull_distance_against_qp(seed):
    rng = np.random.default_rng(seed)
    d = [2, 3, 5][seed % 3]
    P = rng.random((rng.integers(1, 12), d))
    Q = rng.random((rng.integers(1, 12), d)) + rng.uniform(-0.5, 1.5, d)
    assert hull_distance(P, Q) == pytest.approx(qp_hull_distance(P, Q), abs=1e-6)


def test_hull_distance_simple_cases():
    sq = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
    assert hull_distance(sq, sq + [3, 0]) == pytest.approx(2.0)
    assert hull_distance(sq, sq + [0.5, 0.5]) == pytest.approx(0.0, abs=1e-9)  # overlapping
    assert hull_distance(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(5.0)
    # point against a segment, foot in the interior
    assert hull_distance(np.array([[0.5, 1.0]]), np.array([[0, 0], [1, 0]], float)) == pytest.approx(1.0)


def test_hulls_separated():
    pos = np.array([[0.1, 0.1], [0.15, 0.1], [0.5, 0.1], [0.55, 0.1], [0.9, 0.9]])
    ens = Ensemble(pos)
    rep = hulls_separated([[0, 1], [2, 3]], ens, 0.3)
    assert rep.pairwise_min_hull_distance == pytest.approx(0.35)
    assert rep.separated and rep.closest_pair == (0, 1)
    assert not hulls_separated([[0, 1], [2, 3]], ens, 0.4).separated
    lone = hulls_separated([[0, 1]], ens, 0.3)
    assert lone.separated and math.isinf(lone.pairwise_min_hull_distance)
    with pytest.raises(ValueError):
        hulls_separated([[0, 1], [1, 2]], ens, 0.1)


@pytest.mark.parametrize("seed", range(5))
def test_dense_packing_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    pos = np.clip(rng.normal(0.5, 0.05, size=(200, 2)), 0, 1)
    ens = Ensemble(pos)
    members = np.arange(0, 200, 2) if seed % 2 else np.arange(200)
    for r, m in [(0.02, 2), (0.05, 5), (0.1, 30)]:
        rep = is_r_densely_packed(members, ens, r, m)
        connected, cmin = brute_packed(members, pos, r, m)
        assert rep.connected == connected and rep.ball_count_min == cmin
        assert rep.is_packed == (connected and cmin > m)
        assert is_r_densely_packed(members, ens, r, m, saturate=True).is_packed == rep.is_packed


def test_dense_packing_rejects_bad_input():
    ens = Ensemble(np.full((3, 2), 0.5))
    with pytest.raises(ValueError):
        is_r_densely_packed([], ens, 0.1, 1)
    with pytest.raises(ValueError):
        is_r_densely_packed([0], ens, 0.0, 1)


def test_simplified_threshold():
    assert r_threshold_simplified(1000, 0.15, 40) == pytest.approx(0.15 * 40 / 6000)
    with pytest.raises(ValueError):
        r_threshold_simplified(0, 0.1, 1)


def _exact_ratio(m, size):
    """Largest r/delta admitted by the rigidity inequality, solved at 50 digits."""
    mpmath.mp.dps = 50
    z = mpmath.e ** (mpmath.mpf(2 * m) / (3 * mpmath.mpf(size) ** 3))
    rhs = mpmath.mpf(m) / (6 * size) * z
    return mpmath.findroot(lambda q: q * z**q - rhs, mpmath.mpf(m) / (6 * size))


@pytest.mark.parametrize("m, size", [(40, 1000), (1, 2), (3, 2), (10, 5), (50, 20), (2, 1)])
def test_condition_4_boundary_against_mpmath(m, size):
    q = float(_exact_ratio(m, size))
    if q > 1:
        pytest.skip("the whole range r <= delta is admissible")
    delta = 0.2
    assert check_condition_4(0.99 * q * delta, delta, m, size)
    if 1.01 * q <= 1:
        assert not check_condition_4(1.01 * q * delta, delta, m, size)


def test_condition_4_holds_at_simplified_radius():
    for m, size in [(40, 1000), (5, 50), (1, 1), (308, 2000)]:
        delta = 0.15
        r = r_threshold_simplified(size, delta, m)
        if r <= delta:
            assert check_condition_4(r, delta, m, size)


def test_rigidity_factor_near_one():
    assert rigidity_factor(40, 1000) - 1 < 3e-8
    with pytest.raises(ValueError):
        check_condition_4(0.3, 0.2, 1, 10)


def _two_blobs(n=80, seed=0):
    rng = np.random.default_rng(seed)
    a = np.clip(rng.normal([0.2, 0.2], 0.02, (n, 2)), 0, 1)
    b = np.clip(rng.normal([0.8, 0.8], 0.02, (n, 2)), 0, 1)
    return Ensemble(np.vstack([a, b]))


def test_components_drop_nothing_and_sort():
    ens = _two_blobs()
    comps = current_components(ens, RunParams(delta=0.1, m=2))
    sizes = sorted(c.size for c in comps if c.size > 1)
    assert sizes == [80, 80]
    firsts = [c.min() for c in comps]
    assert firsts == sorted(firsts)


def test_calibrate_collapsed_input_is_zero():
    pos = np.vstack([np.full((30, 2), 0.2), np.full((30, 2), 0.8)])
    assert calibrate_n_max(Ensemble(pos), RunParams(delta=0.1, m=3)) == 0


def test_calibrate_noise_only_is_zero():
    pos = np.random.default_rng(0).random((50, 2))
    assert calibrate_n_max(Ensemble(pos), RunParams(delta=0.01, m=1)) == 0


def test_calibrate_two_blobs_small_and_stable():
    ens = _two_blobs()
    before = ens.positions.copy()
    seen = []
    n = calibrate_n_max(ens, RunParams(delta=0.1, m=2), on_step=seen.append)
    assert 0 < n < 50
    assert calibrate_n_max(ens, RunParams(delta=0.1, m=2)) == n
    np.testing.assert_array_equal(ens.positions, before)
    assert [d.step for d in seen] == list(range(n + 1))
    assert seen[-1].all_packed and seen[-1].separated


def test_calibrate_cap():
    ens = _two_blobs()
    with pytest.raises(CalibrationError) as info:
        calibrate_n_max(ens, RunParams(delta=0.1, m=2), cap=0)
    assert len(info.value.diagnostics) == 1
    assert info.value.diagnostics[0].as_dict()["step"] == 0
