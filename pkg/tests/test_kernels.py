"""The compiled kernels and their numpy twins must agree."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmchange import _core, _fallback

kernels = pytest.importorskip("sbmchange._kernels", reason="compiled extension not built")


def test_backend_flag_is_consistent():
    assert _core.BACKEND in ("cython", "numpy")
    assert _core.HAVE_EXTENSION == (_core.BACKEND == "cython")


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 100, 2500])
def test_binomial_complexity(n):
    assert kernels.log_binomial_complexity(n) == pytest.approx(
        _fallback.log_binomial_complexity(n), abs=1e-10
    )


def _problem(seed, W, n, k, directed):
    rng = np.random.default_rng(seed)
    adj = (rng.random((W, n, n)) < 0.3).astype(np.uint8)
    for w in range(W):
        np.fill_diagonal(adj[w], 0)
        if not directed:
            adj[w] = np.triu(adj[w], 1)
            adj[w] = adj[w] + adj[w].T
    labels = rng.integers(k, size=(W, n)).astype(np.int64)
    theta = rng.uniform(0.05, 0.95, size=(k, k))
    if not directed:
        theta = (theta + theta.T) / 2
    pi = rng.dirichlet(np.ones(k))
    return adj, labels, np.log(theta), np.log1p(-theta), np.log(pi)


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(3, 14), st.integers(1, 4), st.booleans())
@settings(max_examples=50, deadline=None)
def test_neighbor_counts_and_sweep(seed, W, n, k, directed):
    adj, labels, log_t, log_f, log_pi = _problem(seed, W, n, k, directed)
    for incoming in (False, True):
        assert np.array_equal(
            kernels.neighbor_block_counts(adj, labels, k, incoming),
            _fallback.neighbor_block_counts(adj, labels, k, incoming),
        )
    state = {}
    for name, mod in (("c", kernels), ("py", _fallback)):
        lab = labels.copy()
        out_cnt = _fallback.neighbor_block_counts(adj, lab, k, False)
        in_cnt = _fallback.neighbor_block_counts(adj, lab, k, True) if directed else out_cnt
        sizes = np.stack([np.bincount(r, minlength=k) for r in lab]).astype(np.int64)
        moves = mod.cem_sweep(adj, lab, out_cnt, in_cnt, sizes, log_t, log_f, log_pi, directed)
        state[name] = (moves, lab, out_cnt, in_cnt, sizes)
    for a, b in zip(state["c"], state["py"]):
        assert np.array_equal(a, b)
    # counts stay consistent with the new labels
    _, lab, out_cnt, in_cnt, _ = state["c"]
    assert np.array_equal(out_cnt, _fallback.neighbor_block_counts(adj, lab, k, False))


@given(st.integers(0, 2**31), st.integers(2, 6))
@settings(max_examples=50, deadline=None)
def test_permutation_hill_climb(seed, k):
    rng = np.random.default_rng(seed)
    links = rng.integers(0, 20, size=(k, k)).astype(np.float64)
    non = rng.integers(0, 20, size=(k, k)).astype(np.float64)
    sizes = rng.integers(1, 10, size=k).astype(np.float64)
    theta = rng.uniform(0.05, 0.95, size=(k, k))
    pi = rng.dirichlet(np.ones(k))
    args = (links, non, sizes, np.log(theta), np.log1p(-theta), np.log(pi))
    start = rng.permutation(k)
    pc, llc = kernels.permutation_hill_climb(*args, start)
    pp, llp = _fallback.permutation_hill_climb(*args, start)
    assert np.array_equal(pc, pp)
    assert llc == pytest.approx(llp, abs=1e-9)
    assert sorted(pc.tolist()) == list(range(k))
