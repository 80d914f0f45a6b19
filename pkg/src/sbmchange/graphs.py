"""Network snapshots and block assignments.

Node indices and block labels are 0-based in memory.  The on-disk snapshot
format (see :mod:`sbmchange.io`) is 1-based, and conversion happens only at
that boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = ["BlockAssignment", "GraphSnapshot", "spectral_embedding", "stack_adjacency"]


def spectral_embedding(adj: np.ndarray, directed: bool = False) -> np.ndarray:
    """Columns scaled by sqrt(|eigenvalue|), largest magnitude first.

    Directed graphs use left and right singular vectors side by side, so the
    column count doubles.
    """
    if directed:
        u, s, vt = np.linalg.svd(adj)
        root = np.sqrt(s)
        return np.hstack([u * root, vt.T * root])
    vals, vecs = np.linalg.eigh(adj)
    order = np.argsort(-np.abs(vals), kind="stable")
    return vecs[:, order] * np.sqrt(np.abs(vals[order]))


def _canonical_edges(n_nodes: int, edges, directed: bool) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"edges must have shape (m, 2), got {arr.shape}")
    if arr.min() < 0 or arr.max() >= n_nodes:
        raise ValueError(f"edge endpoint outside [0, {n_nodes})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    if not directed:
        arr = np.sort(arr, axis=1)
    return np.unique(arr, axis=0)


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """One time-indexed network.

    ``edges`` is an ``(m, 2)`` array of 0-based endpoint pairs, sorted and
    de-duplicated; undirected edges are stored once with ``u < v``.
    """

    n_nodes: int
    edges: np.ndarray = field(repr=False)
    directed: bool = False
    timestamp: int = 0

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be positive, got {self.n_nodes}")
        canon = _canonical_edges(self.n_nodes, self.edges, self.directed)
        canon.setflags(write=False)
        object.__setattr__(self, "edges", canon)

    @classmethod
    def from_adjacency(
        cls, adj: np.ndarray, directed: bool = False, timestamp: int = 0
    ) -> "GraphSnapshot":
        adj = np.asarray(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not directed:
            adj = np.triu(adj, 1)
        else:
            adj = adj.copy()
            np.fill_diagonal(adj, 0)
        edges = np.argwhere(adj != 0)
        return cls(adj.shape[0], edges, directed, timestamp)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_dyads(self) -> int:
        n = self.n_nodes
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency as float64 (symmetric when undirected)."""
        adj = np.zeros((self.n_nodes, self.n_nodes))
        if self.n_edges:
            u, v = self.edges[:, 0], self.edges[:, 1]
            adj[u, v] = 1.0
            if not self.directed:
                adj[v, u] = 1.0
        adj.setflags(write=False)
        return adj

    @cached_property
    def adjacency_u8(self) -> np.ndarray:
        out = np.ascontiguousarray(self.adjacency, dtype=np.uint8)
        out.setflags(write=False)
        return out

    @cached_property
    def spectral_basis(self) -> np.ndarray:
        return spectral_embedding(self.adjacency, self.directed)

    def with_timestamp(self, timestamp: int) -> "GraphSnapshot":
        return GraphSnapshot(self.n_nodes, self.edges, self.directed, timestamp)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSnapshot):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and self.directed == other.directed
            and self.timestamp == other.timestamp
            and np.array_equal(self.edges, other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.n_nodes, self.directed, self.timestamp, self.edges.tobytes()))


@dataclass(frozen=True, eq=False)
class BlockAssignment:
    """Per-node block labels in ``range(k)``."""

    labels: np.ndarray
    k: int

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"label outside [0, {self.k})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_nodes(self) -> int:
        return int(self.labels.shape[0])

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.n_nodes, self.k))
        out[np.arange(self.n_nodes), self.labels] = 1.0
        return out

    def relabel(self, mapping: Sequence[int], k: int | None = None) -> "BlockAssignment":
        mapping = np.asarray(mapping, dtype=np.int64)
        k = int(mapping.max()) + 1 if k is None else k
        return BlockAssignment(mapping[self.labels], max(k, 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockAssignment):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash((self.k, self.labels.tobytes()))


def stack_adjacency(snapshots: Iterable[GraphSnapshot]) -> np.ndarray:
    """``(W, n, n)`` float stack of dense adjacencies."""
    return np.stack([s.adjacency for s in snapshots])
