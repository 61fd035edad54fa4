import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robcons.arcp import (
    ArcpConfig,
    arcp_rhs,
    as_network_dynamics,
    kth_largest,
    kth_smallest,
    trimmed_sum_bottom,
    trimmed_sum_top,
)
from robcons.dynamics import probe_cooperativity, probe_joint_influence
from robcons.errors import InvalidArgument
from robcons.petri import check_robust_consensuability, exhaustive_consensuability_oracle

vectors = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=9)


def test_rank_examples():
    x = [3, 1, 2]
    assert kth_largest(x, 1) == 3
    assert kth_largest(x, 3) == 1
    assert kth_smallest(x, 1) == 1
    assert kth_smallest(x, 2) == 2


@pytest.mark.parametrize("k", [0, 4])
def test_rank_out_of_range(k):
    with pytest.raises(InvalidArgument):
        kth_largest([3, 1, 2], k)
    with pytest.raises(InvalidArgument):
        kth_smallest([3, 1, 2], k)


def test_config_bounds():
    with pytest.raises(InvalidArgument):
        ArcpConfig(4, 2)
    with pytest.raises(InvalidArgument):
        ArcpConfig(5, 0)
    assert ArcpConfig(5, 2).kept == 1


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_rank_duality_and_maxmin(x):
    n = len(x)
    for k in range(1, n + 1):
        assert kth_largest(x, k) == kth_smallest(x, n + 1 - k)
        if n <= 6:
            assert kth_largest(x, k) == max(min(x[j] for j in J) for J in itertools.combinations(range(n), k))


def test_rhs_consensus_zero():
    cfg = ArcpConfig(5, 1)
    for c in (-3.7, 0.1, 1e5):
        assert np.array_equal(arcp_rhs(cfg, np.full(5, c)), np.zeros(5))


def test_rhs_pair_and_single_formulas():
    cfg = ArcpConfig(5, 1)
    rng = np.random.default_rng(11)
    for _ in range(500):
        xj, xi = rng.uniform(-50, 50, 2)
        for J in itertools.combinations(range(5), 2):
            x = np.full(5, xi)
            x[list(J)] = xj
            dx = arcp_rhs(cfg, x)
            for i in set(range(5)) - set(J):
                assert dx[i] == (xj - xi) / (cfg.n - 2 * cfg.trim)
        x = np.full(5, xi)
        x[0] = xj
        assert np.all(arcp_rhs(cfg, x)[1:] == 0.0)


def test_rhs_length_mismatch():
    with pytest.raises(InvalidArgument):
        arcp_rhs(ArcpConfig(5, 1), np.zeros(4))


def test_trim_identity_random_vectors():
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        n = int(rng.integers(3, 10))
        trim = int(rng.integers(1, (n - 1) // 2 + 1))
        x = rng.normal(0, 10, n)
        assert trimmed_sum_top(x, trim) == trimmed_sum_bottom(x, trim)


@settings(max_examples=200, deadline=None)
@given(vectors, st.randoms(use_true_random=False))
def test_permutation_equivariance(x, rnd):
    n = len(x)
    cfg = ArcpConfig(n, 1)
    x = np.array(x)
    perm = list(range(n))
    rnd.shuffle(perm)
    assert np.array_equal(arcp_rhs(cfg, x[perm]), arcp_rhs(cfg, x)[perm])


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(-1e3, 1e3, allow_nan=False))
def test_translation(x, c):
    cfg = ArcpConfig(len(x), 1)
    x = np.array(x)
    assert np.allclose(arcp_rhs(cfg, x + c), arcp_rhs(cfg, x), atol=1e-6)


def test_batch_matches_single():
    cfg = ArcpConfig(7, 2)
    xs = np.random.default_rng(2).uniform(-5, 5, (20, 7))
    assert np.allclose(arcp_rhs(cfg, xs), np.stack([arcp_rhs(cfg, x) for x in xs]), atol=1e-14)


def test_network_topology_and_checker():
    dyn = as_network_dynamics(ArcpConfig(5, 1))
    net = dyn.to_petri_net()
    assert len(net.transitions) == 30
    assert all(sum(1 for t in net.transitions if t.output == i) == 6 for i in range(5))
    for f in range(5):
        assert check_robust_consensuability(net, {f}).verdict
        assert exhaustive_consensuability_oracle(net, {f})


def test_probe_confirms_pairs_minimal():
    dyn = as_network_dynamics(ArcpConfig(5, 1))
    for J in itertools.combinations(range(5), 2):
        for i in set(range(5)) - set(J):
            res = probe_joint_influence(dyn, J, i, grid_points=9)
            assert res.holds and res.minimal


def test_cooperative():
    assert probe_cooperativity(as_network_dynamics(ArcpConfig(6, 2)), samples=100)
