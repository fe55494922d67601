import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dicluster.core import Ensemble, RunParams
from dicluster.dynamics import compute_neighbors, euler_step, evolve, step
from dicluster.lattice import build_lattice

from oracles import brute_euler, brute_neighbors


def _table(pos, delta, m):
    ens = Ensemble(pos)
    return ens, compute_neighbors(ens, build_lattice(ens, delta), RunParams(delta=delta, m=m))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 5]), st.sampled_from([0.05, 0.1, 0.2]), st.sampled_from([1, 4, 40]))
def test_neighbours_match_brute_force(seed, d, delta, m):
    pos = np.random.default_rng(seed).random((300, d))
    _, table = _table(pos, delta, m)
    counts, core, nbrs = brute_neighbors(pos, delta, m)
    np.testing.assert_array_equal(table.ball_count, counts)
    np.testing.assert_array_equal(table.is_core, core)
    for i in range(pos.shape[0]):
        np.testing.assert_array_equal(table.neighbors_of(i), nbrs[i])


def test_isolated_and_noncore_agents_have_no_neighbours():
    pos = np.array([[0.1, 0.1], [0.12, 0.1], [0.9, 0.9]])
    _, table = _table(pos, 0.05, 2)
    # two agents in the ball, threshold needs more than 2
    assert not table.is_core.any()
    assert table.degree.sum() == 0
    assert table.k_n == 2


def test_k_n_is_max_degree_or_m():
    pos = np.vstack([np.full((6, 2), 0.3), np.full((3, 2), 0.8)])
    _, table = _table(pos, 0.1, 1)
    assert table.k_n == 5
    _, table = _table(pos, 0.1, 8)
    assert table.k_n == 8


def test_lattice_must_cover_delta():
    ens = Ensemble(np.random.default_rng(0).random((10, 2)))
    with pytest.raises(ValueError):
        compute_neighbors(ens, build_lattice(ens, 0.05), RunParams(delta=0.1, m=1))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 5]), st.sampled_from([1, 3]))
def test_euler_step_matches_formula(seed, d, m):
    pos = np.random.default_rng(seed).random((200, d))
    ens, table = _table(pos, 0.2, m)
    _, _, nbrs = brute_neighbors(pos, 0.2, m)
    want, k = brute_euler(pos, nbrs, m)
    assert table.k_n == k
    euler_step(ens, table)
    np.testing.assert_allclose(ens.positions, want, rtol=0, atol=1e-15)


def test_pair_moves_towards_midpoint():
    ens = Ensemble(np.array([[0.4, 0.5], [0.6, 0.5]]))
    step(ens, RunParams(delta=0.3, m=1))
    np.testing.assert_allclose(ens.positions, [[0.6, 0.5], [0.4, 0.5]])  # K_n = 1 swaps them
    ens = Ensemble(np.array([[0.4, 0.5], [0.6, 0.5]]))
    step(ens, RunParams(delta=0.3, m=2))
    # below threshold: count 2 is not more than 2
    np.testing.assert_allclose(ens.positions, [[0.4, 0.5], [0.6, 0.5]])


def test_evolve_observer_and_zero_steps():
    pos = np.random.default_rng(3).random((100, 2))
    ens = Ensemble(pos)
    assert evolve(ens, RunParams(delta=0.2, m=2, n_max=0)) == 0
    np.testing.assert_array_equal(ens.positions, pos)
    seen = []
    evolve(ens, RunParams(delta=0.2, m=2, n_max=4), observer=lambda n, x: seen.append((n, x.copy(), x.flags.writeable)))
    assert [s[0] for s in seen] == [1, 2, 3, 4]
    assert not any(s[2] for s in seen)
    np.testing.assert_array_equal(seen[-1][1], ens.positions)


def test_evolve_is_deterministic():
    pos = np.random.default_rng(4).random((2000, 5))
    a, b = Ensemble(pos), Ensemble(pos)
    p = RunParams(delta=0.3, m=10, n_max=5)
    evolve(a, p)
    evolve(b, p)
    assert a.positions.tobytes() == b.positions.tobytes()
