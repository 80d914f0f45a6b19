# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for block-model fitting.

Semantics mirror ``sbmchange._fallback`` exactly; see that module for the
reference implementation.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, lgamma, log

cnp.import_array()


def log_binomial_complexity(Py_ssize_t n):
    cdef Py_ssize_t k
    cdef double lg_n, term, peak, acc, nn
    if n <= 0:
        return 0.0
    nn = <double>n
    lg_n = lgamma(nn + 1.0)
    # the k = 0 and k = n terms are both exactly 1 and are the largest
    peak = 0.0
    acc = 0.0
    for k in range(n + 1):
        term = lg_n - lgamma(k + 1.0) - lgamma(nn - k + 1.0)
        if k > 0:
            term += k * log(k / nn)
        if k < n:
            term += (nn - k) * log((nn - k) / nn)
        acc += exp(term - peak)
    return peak + log(acc)


def neighbor_block_counts(
    const cnp.uint8_t[:, :, ::1] adj,
    const cnp.int64_t[:, ::1] labels,
    Py_ssize_t k,
    bint incoming=False,
):
    cdef Py_ssize_t W = adj.shape[0], n = adj.shape[1]
    cdef Py_ssize_t w, i, j
    out = np.zeros((W, n, k), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] cnt = out
    for w in range(W):
        for i in range(n):
            for j in range(n):
                if incoming:
                    if adj[w, j, i]:
                        cnt[w, i, labels[w, j]] += 1
                elif adj[w, i, j]:
                    cnt[w, i, labels[w, j]] += 1
    return out


cdef inline double _score(
    Py_ssize_t w, Py_ssize_t i, Py_ssize_t q, Py_ssize_t a, Py_ssize_t k,
    const cnp.int64_t[:, :, ::1] out_cnt,
    const cnp.int64_t[:, :, ::1] in_cnt,
    const cnp.int64_t[:, ::1] sizes,
    const double[:, ::1] log_t,
    const double[:, ::1] log_f,
    bint directed,
) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t l
    cdef long others, linked
    for l in range(k):
        others = sizes[w, l] - (1 if l == a else 0)
        linked = out_cnt[w, i, l]
        s += linked * log_t[q, l] + (others - linked) * log_f[q, l]
        if directed:
            linked = in_cnt[w, i, l]
            s += linked * log_t[l, q] + (others - linked) * log_f[l, q]
    return s


def cem_sweep(
    const cnp.uint8_t[:, :, ::1] adj,
    cnp.int64_t[:, ::1] labels,
    cnp.int64_t[:, :, ::1] out_cnt,
    cnp.int64_t[:, :, ::1] in_cnt,
    cnp.int64_t[:, ::1] sizes,
    const double[:, ::1] log_t,
    const double[:, ::1] log_f,
    const double[::1] log_pi,
    bint directed,
):
    """One sequential pass of hard reassignments; updates arrays in place.

    Returns the number of nodes that changed block.
    """
    cdef Py_ssize_t W = adj.shape[0], n = adj.shape[1], k = log_pi.shape[0]
    cdef Py_ssize_t w, i, j, q, a, b
    cdef double best, s
    cdef long moves = 0
    with nogil:
        for w in range(W):
            for i in range(n):
                a = labels[w, i]
                b = a
                best = log_pi[a] + _score(w, i, a, a, k, out_cnt, in_cnt, sizes, log_t, log_f, directed)
                for q in range(k):
                    if q == a:
                        continue
                    s = log_pi[q] + _score(w, i, q, a, k, out_cnt, in_cnt, sizes, log_t, log_f, directed)
                    if s > best + 1e-12:
                        best = s
                        b = q
                if b == a:
                    continue
                moves += 1
                labels[w, i] = b
                sizes[w, a] -= 1
                sizes[w, b] += 1
                for j in range(n):
                    if directed:
                        if adj[w, j, i]:
                            out_cnt[w, j, a] -= 1
                            out_cnt[w, j, b] += 1
                        if adj[w, i, j]:
                            in_cnt[w, j, a] -= 1
                            in_cnt[w, j, b] += 1
                    elif adj[w, i, j]:
                        out_cnt[w, j, a] -= 1
                        out_cnt[w, j, b] += 1
    return moves


cdef double _perm_loglik(
    const cnp.int64_t[::1] perm,
    const double[:, ::1] links,
    const double[:, ::1] non,
    const double[::1] sizes,
    const double[:, ::1] log_t,
    const double[:, ::1] log_f,
    const double[::1] log_pi,
) noexcept nogil:
    cdef Py_ssize_t k = perm.shape[0], q, l
    cdef double s = 0.0
    for q in range(k):
        s += sizes[q] * log_pi[perm[q]]
        for l in range(k):
            s += links[q, l] * log_t[perm[q], perm[l]] + non[q, l] * log_f[perm[q], perm[l]]
    return s


def permutation_hill_climb(
    const double[:, ::1] links,
    const double[:, ::1] non,
    const double[::1] sizes,
    const double[:, ::1] log_t,
    const double[:, ::1] log_f,
    const double[::1] log_pi,
    start,
):
    """Transposition hill climbing of a block relabeling; returns (perm, loglik)."""
    perm_arr = np.array(start, dtype=np.int64)
    cdef cnp.int64_t[::1] perm = perm_arr
    cdef Py_ssize_t k = perm.shape[0], a, b
    cdef cnp.int64_t tmp
    cdef double ll, cand
    cdef bint improved = True
    ll = _perm_loglik(perm, links, non, sizes, log_t, log_f, log_pi)
    while improved:
        improved = False
        for a in range(k - 1):
            for b in range(a + 1, k):
                tmp = perm[a]
                perm[a] = perm[b]
                perm[b] = tmp
                cand = _perm_loglik(perm, links, non, sizes, log_t, log_f, log_pi)
                if cand > ll + 1e-9:
                    ll = cand
                    improved = True
                else:
                    perm[b] = perm[a]
                    perm[a] = tmp
    return perm_arr, ll
