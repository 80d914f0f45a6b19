"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Every function here has the same signature and semantics as its compiled
twin; ``sbmchange._core`` picks one set at import time.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy


def log_binomial_complexity(n: int) -> float:
    n = int(n)
    if n <= 0:
        return 0.0
    k = np.arange(n + 1, dtype=np.float64)
    terms = (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + xlogy(k, k / n)
        + xlogy(n - k, (n - k) / n)
    )
    return float(logsumexp(terms))


def neighbor_block_counts(adj: np.ndarray, labels: np.ndarray, k: int, incoming: bool = False) -> np.ndarray:
    """``out[w, i, l]`` = number of linked neighbours of node ``i`` in block ``l``."""
    W, n = labels.shape
    onehot = np.zeros((W, n, k), dtype=np.int64)
    np.put_along_axis(onehot, labels[..., None], 1, axis=-1)
    a = adj.astype(np.int64)
    if incoming:
        a = np.swapaxes(a, 1, 2)
    return a @ onehot


def _score(w, i, q, a, out_cnt, in_cnt, sizes, log_t, log_f, directed):
    others = sizes[w].copy()
    others[a] -= 1
    linked = out_cnt[w, i]
    s = float(np.dot(linked, log_t[q]) + np.dot(others - linked, log_f[q]))
    if directed:
        linked = in_cnt[w, i]
        s += float(np.dot(linked, log_t[:, q]) + np.dot(others - linked, log_f[:, q]))
    return s


def cem_sweep(adj, labels, out_cnt, in_cnt, sizes, log_t, log_f, log_pi, directed) -> int:
    W, n = labels.shape
    k = log_pi.shape[0]
    moves = 0
    for w in range(W):
        for i in range(n):
            a = int(labels[w, i])
            b = a
            best = log_pi[a] + _score(w, i, a, a, out_cnt, in_cnt, sizes, log_t, log_f, directed)
            for q in range(k):
                if q == a:
                    continue
                s = log_pi[q] + _score(w, i, q, a, out_cnt, in_cnt, sizes, log_t, log_f, directed)
                if s > best + 1e-12:
                    best = s
                    b = q
            if b == a:
                continue
            moves += 1
            labels[w, i] = b
            sizes[w, a] -= 1
            sizes[w, b] += 1
            if directed:
                src = np.flatnonzero(adj[w, :, i])
                out_cnt[w, src, a] -= 1
                out_cnt[w, src, b] += 1
                dst = np.flatnonzero(adj[w, i, :])
                in_cnt[w, dst, a] -= 1
                in_cnt[w, dst, b] += 1
            else:
                nbr = np.flatnonzero(adj[w, i, :])
                out_cnt[w, nbr, a] -= 1
                out_cnt[w, nbr, b] += 1
    return moves


def _perm_loglik(perm, links, non, sizes, log_t, log_f, log_pi) -> float:
    sub = np.ix_(perm, perm)
    return float(np.sum(links * log_t[sub] + non * log_f[sub]) + np.dot(sizes, log_pi[perm]))


def permutation_hill_climb(links, non, sizes, log_t, log_f, log_pi, start):
    perm = np.array(start, dtype=np.int64)
    k = perm.shape[0]
    ll = _perm_loglik(perm, links, non, sizes, log_t, log_f, log_pi)
    improved = True
    while improved:
        improved = False
        for a in range(k - 1):
            for b in range(a + 1, k):
                perm[a], perm[b] = perm[b], perm[a]
                cand = _perm_loglik(perm, links, non, sizes, log_t, log_f, log_pi)
                if cand > ll + 1e-9:
                    ll, improved = cand, True
                else:
                    perm[a], perm[b] = perm[b], perm[a]
    return perm, ll
