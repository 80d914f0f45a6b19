"""Bernoulli stochastic block models over windows of snapshots.

A window shares one link-probability matrix and one block distribution, while
every snapshot keeps its own node-to-block assignment.  Code lengths follow
the decomposed NML construction: an NML code for the links given the blocks
plus an NML code for the blocks, each with an exact multinomial normalizer.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.optimize import linear_sum_assignment
from scipy.special import xlogy

from sbmchange import _core
from sbmchange.complexity import LogComplexityTable
from sbmchange.graphs import BlockAssignment, GraphSnapshot, spectral_embedding
from sbmchange.modelcode import model_code_len

logger = logging.getLogger(__name__)

__all__ = [
    "DnmlCodeLength",
    "ModelSelection",
    "SbmSufficientStats",
    "WindowFit",
    "align_labels",
    "alignment_mapping",
    "dnml_code_length",
    "fit_window",
    "infer_assignments",
    "log_complexities",
    "pool_stats",
    "select_model",
    "snapshot_stats",
]

WINDOW_MODES = ("pooled", "per-snapshot")


@dataclass(frozen=True, eq=False)
class SbmSufficientStats:
    """Link / no-link counts per block pair and block-membership counts.

    For undirected graphs only the upper triangle ``k1 <= k2`` is populated.
    """

    k: int
    n_plus: np.ndarray
    n_minus: np.ndarray
    block_sizes: np.ndarray
    n_total: int
    directed: bool = False

    @property
    def n_pairs(self) -> np.ndarray:
        return self.n_plus + self.n_minus

    def theta_hat(self) -> np.ndarray:
        """ML link probabilities; block pairs without dyads get NaN."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.n_plus / self.n_pairs

    def pi_hat(self) -> np.ndarray:
        return self.block_sizes / max(self.n_total, 1)

    def __add__(self, other: "SbmSufficientStats") -> "SbmSufficientStats":
        if self.k != other.k or self.directed != other.directed:
            raise ValueError("cannot pool statistics with different k or directedness")
        return SbmSufficientStats(
            self.k,
            self.n_plus + other.n_plus,
            self.n_minus + other.n_minus,
            self.block_sizes + other.block_sizes,
            self.n_total + other.n_total,
            self.directed,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SbmSufficientStats):
            return NotImplemented
        return (
            self.k == other.k
            and self.directed == other.directed
            and self.n_total == other.n_total
            and np.array_equal(self.n_plus, other.n_plus)
            and np.array_equal(self.n_minus, other.n_minus)
            and np.array_equal(self.block_sizes, other.block_sizes)
        )

    __hash__ = None  # type: ignore[assignment]


class DnmlCodeLength(NamedTuple):
    total: float
    x_given_z: float
    z: float


def _dyad_counts(sizes: np.ndarray, directed: bool) -> np.ndarray:
    outer = np.outer(sizes, sizes)
    if directed:
        return outer - np.diag(sizes)
    dyads = np.triu(outer, 1)
    dyads[np.diag_indices_from(dyads)] = sizes * (sizes - 1) // 2
    return dyads


def snapshot_stats(
    snapshot: GraphSnapshot, assignment: BlockAssignment, k: int | None = None
) -> SbmSufficientStats:
    k = assignment.k if k is None else k
    labels = assignment.labels
    if labels.shape[0] != snapshot.n_nodes:
        raise ValueError(
            f"assignment covers {labels.shape[0]} nodes, snapshot has {snapshot.n_nodes}"
        )
    if labels.size and labels.max() >= k:
        raise ValueError(f"label {labels.max()} outside [0, {k})")
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    links = np.zeros((k, k), dtype=np.int64)
    if snapshot.n_edges:
        a = labels[snapshot.edges[:, 0]]
        b = labels[snapshot.edges[:, 1]]
        if not snapshot.directed:
            a, b = np.minimum(a, b), np.maximum(a, b)
        np.add.at(links, (a, b), 1)
    dyads = _dyad_counts(sizes, snapshot.directed)
    return SbmSufficientStats(
        k, links, dyads - links, sizes, int(snapshot.n_nodes), snapshot.directed
    )


def pool_stats(
    snapshots: Sequence[GraphSnapshot],
    assignments: Sequence[BlockAssignment],
    k: int,
) -> SbmSufficientStats:
    """Sum sufficient statistics over a window of snapshots."""
    if len(snapshots) == 0:
        raise ValueError("window is empty")
    if len(snapshots) != len(assignments):
        raise ValueError(
            f"{len(snapshots)} snapshots but {len(assignments)} assignments"
        )
    first = snapshots[0]
    for s in snapshots[1:]:
        if s.n_nodes != first.n_nodes or s.directed != first.directed:
            raise ValueError("snapshots in a window must share node count and directedness")
    pooled = snapshot_stats(first, assignments[0], k)
    for s, z in zip(snapshots[1:], assignments[1:]):
        pooled = pooled + snapshot_stats(s, z, k)
    return pooled


def _likelihood_terms(stats: SbmSufficientStats) -> tuple[float, float]:
    n = stats.n_pairs.astype(np.float64)
    lx = float(
        np.sum(xlogy(n, n) - xlogy(stats.n_plus, stats.n_plus) - xlogy(stats.n_minus, stats.n_minus))
    )
    nk = stats.block_sizes.astype(np.float64)
    lz = float(xlogy(stats.n_total, stats.n_total) - np.sum(xlogy(nk, nk)))
    return lx, lz


def log_complexities(
    stats: SbmSufficientStats | Sequence[SbmSufficientStats],
    table: LogComplexityTable,
) -> tuple[float, float]:
    """``(ln C_X|Z, ln C_Z)`` at the given counts.

    Passing a sequence of per-snapshot statistics sums the per-snapshot
    normalizers instead of evaluating one normalizer at pooled counts.
    """
    if isinstance(stats, SbmSufficientStats):
        return table.binomial_sum(stats.n_pairs), table.entry(stats.n_total, stats.k)
    cx = cz = 0.0
    for s in stats:
        a, b = log_complexities(s, table)
        cx += a
        cz += b
    return cx, cz


def dnml_code_length(
    stats: SbmSufficientStats, table: LogComplexityTable
) -> DnmlCodeLength:
    """Decomposed NML code length (nats) of links-given-blocks plus blocks."""
    lx, lz = _likelihood_terms(stats)
    cx, cz = log_complexities(stats, table)
    xz = lx + cx
    z = lz + cz
    return DnmlCodeLength(xz + z, xz, z)


# ---------------------------------------------------------------------------
# inference

_PROB_FLOOR = 1e-10
_ALIGN_FLOOR = 1e-3


@dataclass
class _Counts:
    """Hard-assignment counts kept in sync with the sweep kernel."""

    out_cnt: np.ndarray  # (W, n, k) linked neighbours per block
    in_cnt: np.ndarray  # (W, n, k) incoming, directed only (else aliases out_cnt)
    sizes: np.ndarray  # (W, k)

    @classmethod
    def build(cls, adj: np.ndarray, labels: np.ndarray, k: int, directed: bool) -> "_Counts":
        out_cnt = _core.neighbor_block_counts(adj, labels, k, False)
        in_cnt = _core.neighbor_block_counts(adj, labels, k, True) if directed else out_cnt
        sizes = np.stack([np.bincount(row, minlength=k) for row in labels]).astype(np.int64)
        return cls(out_cnt, in_cnt, sizes)

    def ordered(self, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Ordered-pair link and dyad counts per block pair, window total."""
        idx = (labels[..., None] * k + np.arange(k)).ravel()
        links = np.bincount(idx, weights=self.out_cnt.ravel(), minlength=k * k).reshape(k, k)
        tot = self.sizes.sum(axis=0).astype(np.float64)
        dyads = np.einsum("wq,wl->ql", self.sizes, self.sizes).astype(np.float64) - np.diag(tot)
        return links, dyads


def _estimate(links: np.ndarray, dyads: np.ndarray, sizes: np.ndarray, floor: float):
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(dyads > 0, links / np.where(dyads > 0, dyads, 1.0), 0.5)
    theta = np.clip(theta, floor, 1.0 - floor)
    tot = sizes.sum(axis=0).astype(np.float64)
    pi = np.clip(tot / max(tot.sum(), 1.0), floor, None)
    return theta, pi


def _fold_upper(ordered: np.ndarray) -> np.ndarray:
    """Ordered-pair block counts of a symmetric graph -> unordered, upper triangle."""
    out = np.triu(ordered)
    out[np.diag_indices_from(out)] *= 0.5
    return out


def _profile_loglik(links, dyads, sizes, directed: bool) -> float:
    """Maximized complete-data log-likelihood (nats) from ordered counts."""
    if not directed:
        links, dyads = _fold_upper(links), _fold_upper(dyads)
    non = dyads - links
    ll = float(np.sum(xlogy(links, links) + xlogy(non, non) - xlogy(dyads, dyads)))
    nk = sizes.sum(axis=0).astype(np.float64)
    return ll + float(np.sum(xlogy(nk, nk)) - xlogy(nk.sum(), nk.sum()))


def _kmeans_labels(
    basis: np.ndarray, k: int, directed: bool, rng: np.random.Generator
) -> np.ndarray:
    n = basis.shape[0]
    if directed:
        feats = np.hstack([basis[:, :k], basis[:, n : n + k]])
    else:
        feats = basis[:, :k]
    if not np.any(feats):
        return rng.integers(k, size=n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, labels = kmeans2(feats, k, minit="++", rng=rng)
    return labels.astype(np.int64)


def _spectral_labels(snapshot: GraphSnapshot, k: int, rng: np.random.Generator) -> np.ndarray:
    return _kmeans_labels(snapshot.spectral_basis, k, snapshot.directed, rng)


def _best_permutation(links, dyads, sizes, theta, pi, starts) -> np.ndarray:
    """Relabeling of one snapshot most likely under a reference fit.

    Transposition hill climbing from each start; the best end point wins.
    """
    args = (
        np.ascontiguousarray(links, dtype=np.float64),
        np.ascontiguousarray(dyads - links, dtype=np.float64),
        np.ascontiguousarray(sizes, dtype=np.float64),
        np.log(theta),
        np.log1p(-theta),
        np.log(pi),
    )
    best_perm, best_ll = None, -math.inf
    for start in starts:
        perm, ll = _core.permutation_hill_climb(*args, start)
        if ll > best_ll:
            best_perm, best_ll = perm, ll
    return best_perm


def _initial_labels(
    snapshots: Sequence[GraphSnapshot], adj: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    """Spectral k-means per snapshot, relabeled to agree across the window.

    Snapshot labels are matched one at a time against the fit pooled from the
    snapshots already placed, starting from the node-overlap matching with
    the previous snapshot and from the identity.
    """
    directed = snapshots[0].directed
    labels = np.stack([_spectral_labels(s, k, rng) for s in snapshots])
    return _align_window_labels(adj, labels, k, directed)


def _pooled_labels(
    snapshots: Sequence[GraphSnapshot], adj: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    """Spectral k-means on the summed window adjacency, shared by every snapshot."""
    directed = snapshots[0].directed
    basis = spectral_embedding(adj.sum(axis=0, dtype=np.float64), directed)
    row = _kmeans_labels(basis, k, directed, rng)
    return np.ascontiguousarray(np.tile(row, (adj.shape[0], 1)))


def _align_window_labels(adj: np.ndarray, labels: np.ndarray, k: int, directed: bool) -> np.ndarray:
    W = labels.shape[0]
    counts = _Counts.build(adj, labels, k, directed)
    ref_links, ref_dyads = counts.ordered(labels[:1], k) if W == 1 else _single(counts, labels, 0, k)
    ref_sizes = counts.sizes[:1].copy()
    for w in range(1, W):
        links, dyads = _single(counts, labels, w, k)
        theta, pi = _estimate(ref_links, ref_dyads, ref_sizes, _ALIGN_FLOOR)
        prev = BlockAssignment(labels[w - 1], k)
        overlap = align_labels(prev, BlockAssignment(labels[w], k))
        starts = [np.arange(k)]
        if overlap.k == k:
            mapping = np.empty(k, dtype=np.int64)
            mapping[labels[w]] = overlap.labels
            starts.append(mapping)
        perm = _best_permutation(links, dyads, counts.sizes[w], theta, pi, starts)
        labels[w] = perm[labels[w]]
        ref_links = ref_links + links[np.ix_(np.argsort(perm), np.argsort(perm))]
        ref_dyads = ref_dyads + dyads[np.ix_(np.argsort(perm), np.argsort(perm))]
        ref_sizes = ref_sizes + counts.sizes[w][np.argsort(perm)][None]
    return np.ascontiguousarray(labels)


def _single(counts: _Counts, labels: np.ndarray, w: int, k: int):
    one = _Counts(counts.out_cnt[w : w + 1], counts.in_cnt[w : w + 1], counts.sizes[w : w + 1])
    return one.ordered(labels[w : w + 1], k)


def _cem(
    adj: np.ndarray, labels: np.ndarray, k: int, directed: bool, max_sweeps: int
) -> tuple[np.ndarray, float]:
    """Classification EM: alternate ML estimates and sequential hard moves."""
    counts = _Counts.build(adj, labels, k, directed)
    for _ in range(max_sweeps):
        links, dyads = counts.ordered(labels, k)
        theta, pi = _estimate(links, dyads, counts.sizes, _PROB_FLOOR)
        moves = _core.cem_sweep(
            adj, labels, counts.out_cnt, counts.in_cnt, counts.sizes,
            np.log(theta), np.log1p(-theta), np.log(pi), directed,
        )
        if moves == 0:
            break
    links, dyads = counts.ordered(labels, k)
    return labels, _profile_loglik(links, dyads, counts.sizes, directed)


@dataclass
class _Restart:
    labels: np.ndarray
    loglik: float
    n_used: int


def _restart_rng(seed: int, k: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, k, restart]))


def _split_block(
    adj: np.ndarray, labels: np.ndarray, block: int, k_new: int, rng: np.random.Generator
) -> np.ndarray | None:
    """Bisect ``block`` by spectral 2-means on the pooled subgraph of its nodes."""
    members = np.flatnonzero((labels == block).any(axis=0))
    if members.size < 2:
        return None
    sub = adj[:, members][:, :, members].sum(axis=0, dtype=np.float64)
    directed = not np.array_equal(sub, sub.T)
    halves = _kmeans_labels(spectral_embedding(sub, directed), 2, directed, rng)
    if np.unique(halves).size < 2:
        return None
    node_side = np.zeros(labels.shape[1], dtype=bool)
    node_side[members[halves == 1]] = True
    out = labels.copy()
    out[(labels == block) & node_side[None, :]] = k_new - 1
    return out


def _fit_labels(
    snapshots: Sequence[GraphSnapshot],
    k: int,
    restarts: int,
    seed: int,
    max_sweeps: int = 50,
    starts: Sequence[np.ndarray] = (),
) -> _Restart:
    """Best classification-EM fit over random restarts and given start labels.

    ``starts`` are ``(W, n)`` label arrays (values in ``range(k)``) refined
    alongside the spectral restarts, e.g. a neighbouring window's fit.
    """
    directed = snapshots[0].directed
    adj = np.ascontiguousarray(np.stack([s.adjacency_u8 for s in snapshots]))
    W, n = adj.shape[0], adj.shape[1]
    if k == 1:
        labels = np.zeros((W, n), dtype=np.int64)
        counts = _Counts.build(adj, labels, 1, directed)
        links, dyads = counts.ordered(labels, 1)
        return _Restart(labels, _profile_loglik(links, dyads, counts.sizes, directed), 1)
    candidates: list[np.ndarray] = []
    for start in starts:
        start = np.asarray(start, dtype=np.int64)
        if start.shape != (W, n) or start.min() < 0 or start.max() >= k:
            raise ValueError(f"start labels must be a ({W}, {n}) array with values in [0, {k})")
        candidates.append(np.ascontiguousarray(start.copy()))
    for r in range(restarts):
        rng = _restart_rng(seed, k, r)
        # alternate starts: the pooled window first, then per-snapshot ones
        init = _pooled_labels if r % 2 == 0 else _initial_labels
        candidates.append(init(snapshots, adj, k, rng))
    best: _Restart | None = None
    for labels in candidates:
        labels, ll = _cem(adj, labels, k, directed, max_sweeps)
        cand = _Restart(labels, ll, int(np.unique(labels).size))
        # a fit that keeps every block beats one that emptied a block
        if best is None or (cand.n_used == k, cand.loglik) > (best.n_used == k, best.loglik):
            best = cand
    assert best is not None
    return best


def _split_starts(
    snapshots: Sequence[GraphSnapshot], parent: np.ndarray, k: int, seed: int
) -> list[np.ndarray]:
    """Starts for ``k`` blocks made by bisecting each block of a ``k-1`` fit."""
    adj = np.stack([s.adjacency_u8 for s in snapshots])
    rng = _restart_rng(seed, k, -1 & 0xFFFF)
    out = []
    for block in range(k - 1):
        split = _split_block(adj, parent, block, k, rng)
        if split is not None:
            out.append(split)
    return out


def _validate_window(snapshots: Sequence[GraphSnapshot]) -> None:
    if len(snapshots) == 0:
        raise ValueError("window is empty")
    n, d = snapshots[0].n_nodes, snapshots[0].directed
    for s in snapshots:
        if s.n_nodes != n or s.directed != d:
            raise ValueError("snapshots in a window must share node count and directedness")


def infer_assignments(
    snapshots: Sequence[GraphSnapshot],
    k: int,
    restarts: int = 10,
    seed: int = 0,
) -> list[BlockAssignment]:
    """Hard block assignments per snapshot under an SBM shared by the window.

    Each restart seeds labels by spectral k-means per snapshot, aligns them
    across the window and refines them by classification EM with link
    probabilities and block weights shared by the window.  Fits that keep
    all ``k`` blocks are preferred, then higher profile log-likelihood.
    """
    _validate_window(snapshots)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > snapshots[0].n_nodes:
        raise ValueError(f"k={k} exceeds the node count {snapshots[0].n_nodes}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    fit = _fit_labels(snapshots, k, restarts, seed)
    return [BlockAssignment(row, k) for row in fit.labels]


@dataclass
class WindowFit:
    """One candidate block count fitted to a window."""

    k: int
    assignments: list[BlockAssignment]
    per_snapshot: list[SbmSufficientStats] = field(repr=False)
    stats: SbmSufficientStats = field(repr=False)
    code: DnmlCodeLength
    log_cx: float
    log_cz: float
    complete: bool

    @property
    def total(self) -> float:
        """DNML plus the integer code for ``k``; +inf if a block emptied."""
        if not self.complete:
            return math.inf
        return self.code.total + model_code_len(self.k)


def window_code_length(
    per_snapshot: Sequence[SbmSufficientStats],
    table: LogComplexityTable,
    mode: str = "pooled",
) -> tuple[DnmlCodeLength, float, float]:
    """Window DNML and the complexities it used.

    ``pooled`` evaluates one normalizer at the summed counts; ``per-snapshot``
    keeps the window ML estimates but sums one normalizer per snapshot.
    """
    if mode not in WINDOW_MODES:
        raise ValueError(f"window mode must be one of {WINDOW_MODES}, got {mode!r}")
    pooled = per_snapshot[0]
    for s in per_snapshot[1:]:
        pooled = pooled + s
    lx, lz = _likelihood_terms(pooled)
    cx, cz = log_complexities(pooled if mode == "pooled" else per_snapshot, table)
    return DnmlCodeLength(lx + cx + lz + cz, lx + cx, lz + cz), cx, cz


def fit_window(
    snapshots: Sequence[GraphSnapshot],
    k: int,
    table: LogComplexityTable,
    restarts: int = 10,
    seed: int = 0,
    mode: str = "pooled",
    starts: Sequence[np.ndarray] = (),
) -> WindowFit:
    """Fit ``k`` blocks and code the window; ``starts`` are extra start labels."""
    _validate_window(snapshots)
    fit = _fit_labels(snapshots, k, restarts, seed, starts=starts)
    assignments = [BlockAssignment(row, k) for row in fit.labels]
    per = [snapshot_stats(s, z, k) for s, z in zip(snapshots, assignments)]
    code, cx, cz = window_code_length(per, table, mode)
    pooled = per[0]
    for s in per[1:]:
        pooled = pooled + s
    return WindowFit(k, assignments, per, pooled, code, cx, cz, fit.n_used == k)


@dataclass
class ModelSelection:
    k_hat: int
    assignments: list[BlockAssignment]
    code_length: float
    best: WindowFit
    fits: dict[int, WindowFit] = field(repr=False)


def select_model(
    snapshots: Sequence[GraphSnapshot],
    k_max: int,
    restarts: int = 10,
    seed: int = 0,
    table: LogComplexityTable | None = None,
    mode: str = "pooled",
    warm_starts: Mapping[int, Sequence[np.ndarray]] | None = None,
) -> ModelSelection:
    """Block count minimizing window DNML plus the integer code for ``k``.

    Block counts are fitted in increasing order and each fit also starts
    from bisections of the previous one.  ``warm_starts`` maps ``k`` to extra
    ``(W, n)`` start labels.  Ties go to the smaller ``k``; ``code_length`` is
    the minimum in nats.
    """
    _validate_window(snapshots)
    n_nodes = snapshots[0].n_nodes
    if not 1 <= k_max <= n_nodes:
        raise ValueError(f"k_max must lie in [1, {n_nodes}], got {k_max}")
    table = LogComplexityTable(max(k_max, 2)) if table is None else table
    warm_starts = warm_starts or {}
    fits: dict[int, WindowFit] = {}
    best: WindowFit | None = None
    parent: np.ndarray | None = None
    for k in range(1, k_max + 1):
        starts = list(warm_starts.get(k, ()))
        if parent is not None:
            starts.extend(_split_starts(snapshots, parent, k, seed))
        fit = fit_window(snapshots, k, table, restarts, seed, mode, starts)
        fits[k] = fit
        parent = np.stack([z.labels for z in fit.assignments])
        if best is None or fit.total < best.total:
            best = fit
    assert best is not None
    return ModelSelection(best.k, best.assignments, best.total, best, fits)


def alignment_mapping(reference: BlockAssignment, target: BlockAssignment) -> np.ndarray:
    """Permutation of ``range(max(k_ref, k_target))`` used by :func:`align_labels`."""
    if reference.n_nodes != target.n_nodes:
        raise ValueError(
            f"node counts differ: {reference.n_nodes} vs {target.n_nodes}"
        )
    m = max(reference.k, target.k)
    overlap = np.zeros((m, m))
    np.add.at(overlap, (target.labels, reference.labels), 1.0)
    # bonus < 1 in total, so it only breaks ties between maximal matchings
    score = overlap + np.eye(m) / (2.0 * m)
    rows, cols = linear_sum_assignment(score, maximize=True)
    mapping = np.empty(m, dtype=np.int64)
    mapping[rows] = cols
    return mapping


def align_labels(reference: BlockAssignment, target: BlockAssignment) -> BlockAssignment:
    """Relabel ``target`` to agree with ``reference`` on as many nodes as possible.

    Optimal assignment on the label contingency table; among equally good
    matchings the one fixing the most labels wins, which makes re-alignment
    of an aligned assignment the identity.  Target labels left over when
    ``target.k > reference.k`` receive fresh indices ``>= reference.k``.
    """
    mapping = alignment_mapping(reference, target)
    new_labels = mapping[target.labels]
    k_out = max(target.k, int(new_labels.max()) + 1 if new_labels.size else 1)
    return BlockAssignment(new_labels, k_out)
