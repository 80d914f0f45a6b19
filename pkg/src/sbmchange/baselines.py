"""Comparison detectors: fixed-share expert tracking and DeltaCon similarity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from sbmchange.graphs import GraphSnapshot

__all__ = [
    "ExpertState",
    "deltacon_affinity",
    "deltacon_score",
    "deltacon_series",
    "tbe_series",
    "tbe_update",
]


@dataclass(frozen=True)
class ExpertState:
    """Fixed-share weights over candidate block counts ``1..K``."""

    weights: np.ndarray
    eta: float = 1.0
    alpha: float = 0.2

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
            raise ValueError("weights must be finite, non-negative and not all zero")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        w /= w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_experts: int, eta: float = 1.0, alpha: float = 0.2) -> "ExpertState":
        return cls(np.full(n_experts, 1.0 / n_experts), eta, alpha)

    @property
    def best(self) -> int:
        """1-based index (block count) of the heaviest expert."""
        return int(np.argmax(self.weights)) + 1


def tbe_update(state: ExpertState, losses) -> ExpertState:
    """Loss update followed by the fixed-share mixing step."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.shape != state.weights.shape:
        raise ValueError(f"expected {state.weights.size} losses, got {losses.shape}")
    if not np.isfinite(losses).all():
        raise ValueError("losses must be finite")
    w_m = state.weights * np.exp(-state.eta * np.abs(losses))
    if not w_m.sum() > 0:
        # every expert underflowed; restart from the loss ranking alone
        w_m = np.exp(-state.eta * (np.abs(losses) - np.abs(losses).min()))
    k = w_m.size
    if k == 1:
        return ExpertState(w_m, state.eta, state.alpha)
    pool = state.alpha * w_m.sum()
    shared = (1.0 - state.alpha) * w_m + (pool - state.alpha * w_m) / (k - 1)
    return ExpertState(shared, state.eta, state.alpha)


def tbe_series(loss_rows: Sequence[Sequence[float]], eta: float = 1.0, alpha: float = 0.2) -> np.ndarray:
    """Change score per time step: 1 where the best expert switches, else 0.

    ``loss_rows[t]`` holds one loss per expert; the score at ``t`` compares the
    best expert after the update at ``t`` with the one after ``t-1`` (the
    first score is 0).
    """
    rows = [np.asarray(r, dtype=np.float64) for r in loss_rows]
    if not rows:
        return np.zeros(0)
    state = ExpertState.uniform(rows[0].size, eta, alpha)
    prev = None
    out = np.zeros(len(rows))
    for t, row in enumerate(rows):
        state = tbe_update(state, row)
        if prev is not None and state.best != prev:
            out[t] = 1.0
        prev = state.best
    return out


def deltacon_affinity(g: GraphSnapshot, eps_fabp: float = 0.1) -> np.ndarray:
    """Fast belief propagation affinities ``(I + eps^2 D - eps A)^-1``."""
    a = g.adjacency
    if g.directed:
        a = np.maximum(a, a.T)
    d = np.diag(a.sum(axis=1))
    m = np.eye(g.n_nodes) + eps_fabp**2 * d - eps_fabp * a
    return scipy.linalg.solve(m, np.eye(g.n_nodes), assume_a="sym")


def _matusita(s1: np.ndarray, s2: np.ndarray) -> float:
    # affinities can dip below zero by rounding; clip before the square root
    r1 = np.sqrt(np.clip(s1, 0.0, None))
    r2 = np.sqrt(np.clip(s2, 0.0, None))
    return float(np.sqrt(np.sum((r1 - r2) ** 2)))


def deltacon_score(g1: GraphSnapshot, g2: GraphSnapshot, eps_fabp: float = 0.1) -> float:
    """``1 - 1/(1 + d)`` with ``d`` the root-Euclidean distance of affinities."""
    if g1.n_nodes != g2.n_nodes:
        raise ValueError(f"node counts differ: {g1.n_nodes} vs {g2.n_nodes}")
    if not 0.0 < eps_fabp < 1.0:
        raise ValueError(f"eps_fabp must lie in (0, 1), got {eps_fabp}")
    d = _matusita(deltacon_affinity(g1, eps_fabp), deltacon_affinity(g2, eps_fabp))
    return 1.0 - 1.0 / (1.0 + d)


def deltacon_series(stream: Sequence[GraphSnapshot], eps_fabp: float = 0.1) -> np.ndarray:
    """Score of each snapshot against its predecessor; the first entry is 0."""
    aff = [deltacon_affinity(g, eps_fabp) for g in stream]
    out = np.zeros(len(stream))
    for t in range(1, len(stream)):
        out[t] = 1.0 - 1.0 / (1.0 + _matusita(aff[t - 1], aff[t]))
    return out
