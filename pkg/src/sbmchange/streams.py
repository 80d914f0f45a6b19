"""Synthetic dynamic-SBM streams with planted changes at three levels.

Level 1 perturbs link probabilities, level 2 shifts block proportions and
level 3 splits the largest block.  Snapshots are undirected, timestamps run
from 1, and between regeneration points links persist through
:func:`link_trans`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from sbmchange.graphs import BlockAssignment, GraphSnapshot

__all__ = [
    "ChangeAnnotation",
    "Segment",
    "StreamScenario",
    "gen_abrupt",
    "gen_gradual",
    "link_trans",
    "sample_sbm",
]

CLIP_EPS = 1e-6
DEFAULT_BETA = 0.02


@dataclass(frozen=True)
class Segment:
    """Parameters in force for timestamps ``start..stop`` (inclusive)."""

    start: int
    stop: int
    pi: np.ndarray
    theta: np.ndarray
    k: int


@dataclass(frozen=True)
class ChangeAnnotation:
    """A planted change; ``start == stop`` for an abrupt one."""

    start: int
    stop: int
    level: int


@dataclass
class StreamScenario:
    name: str
    length: int
    n_nodes: int
    segments: list[Segment]
    transitions: list[ChangeAnnotation]
    beta: float
    seed: int
    assignments: list[BlockAssignment] = field(default_factory=list, repr=False)

    def true_k(self, t: int) -> int:
        for seg in self.segments:
            if seg.start <= t <= seg.stop:
                return seg.k
        raise KeyError(t)

    def change_time(self, level: int) -> int:
        """Onset of the planted change at ``level``."""
        for c in self.transitions:
            if c.level == level:
                return c.start
        raise KeyError(level)

    def annotation_dict(self) -> dict:
        return {
            "scenario": self.name,
            "length": self.length,
            "n_nodes": self.n_nodes,
            "beta": self.beta,
            "seed": self.seed,
            "changes": [
                {"start": c.start, "stop": c.stop, "level": c.level} for c in self.transitions
            ],
            "segments": [
                {
                    "start": s.start,
                    "stop": s.stop,
                    "k": s.k,
                    "pi": s.pi.tolist(),
                    "theta": s.theta.tolist(),
                }
                for s in self.segments
            ],
        }


def _check_pi(pi: np.ndarray) -> None:
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError(f"pi is not on the simplex: {pi}")


def _check_theta(theta: np.ndarray, k: int) -> None:
    if theta.shape != (k, k):
        raise ValueError(f"theta must be {k}x{k}, got {theta.shape}")
    if np.any(theta < 0) or np.any(theta > 1):
        raise ValueError("theta entries must lie in [0, 1]")


def _draw_links(z: np.ndarray, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Upper-triangular 0/1 matrix with independent Bernoulli(theta[z_i, z_j]) dyads."""
    n = z.shape[0]
    probs = theta[np.ix_(z, z)]
    return np.triu(rng.random((n, n)) < probs, 1)


def sample_sbm(
    pi,
    theta,
    n_nodes: int,
    rng: np.random.Generator,
    timestamp: int = 0,
) -> tuple[GraphSnapshot, BlockAssignment]:
    """Draw blocks from ``Multinomial(pi)`` and links from ``theta``."""
    pi = np.asarray(pi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    _check_pi(pi)
    _check_theta(theta, pi.shape[0])
    if not np.allclose(theta, theta.T):
        raise ValueError("theta must be symmetric for undirected snapshots")
    z = rng.choice(pi.shape[0], size=n_nodes, p=pi)
    upper = _draw_links(z, theta, rng)
    return (
        GraphSnapshot(n_nodes, np.argwhere(upper), False, timestamp),
        BlockAssignment(z, pi.shape[0]),
    )


def link_trans(
    prev: GraphSnapshot,
    z: BlockAssignment,
    theta,
    beta: float,
    rng: np.random.Generator,
    timestamp: int | None = None,
) -> GraphSnapshot:
    """Resample each dyad from ``theta`` with probability ``beta``, else keep it."""
    theta = np.asarray(theta, dtype=np.float64)
    if z.n_nodes != prev.n_nodes:
        raise ValueError(f"assignment covers {z.n_nodes} nodes, snapshot has {prev.n_nodes}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    _check_theta(theta, z.k)
    n = prev.n_nodes
    redo = np.triu(rng.random((n, n)) < beta, 1)
    fresh = _draw_links(z.labels, theta, rng)
    upper = np.where(redo, fresh, np.triu(prev.adjacency, 1) > 0)
    ts = prev.timestamp + 1 if timestamp is None else timestamp
    return GraphSnapshot(n, np.argwhere(upper), False, ts)


def _symmetric_beta(k: int, rng: np.random.Generator, a: float = 1.0, b: float = 1.0) -> np.ndarray:
    upper = np.triu(rng.beta(a, b, size=(k, k)))
    return upper + np.triu(upper, 1).T


def _perturb(theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    k = theta.shape[0]
    u = np.triu(rng.uniform(-0.1, 0.1, size=(k, k)))
    u = u + np.triu(u, 1).T
    return np.clip(theta + u, CLIP_EPS, 1.0 - CLIP_EPS)


def _extend(theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Add a block whose links to every block, itself included, are Beta(1, 1)."""
    k = theta.shape[0]
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = theta
    new = rng.beta(1.0, 1.0, size=k + 1)
    out[k, :] = new
    out[:, k] = new
    return out


def _split_largest(pi: np.ndarray, frac: float) -> np.ndarray:
    """Move ``frac`` of the last (largest) block into a new block."""
    return np.concatenate([pi[:-1], [pi[-1] * (1.0 - frac), pi[-1] * frac]])


def _mass_shift(pi: np.ndarray) -> np.ndarray:
    """Move a third of the gap between blocks 2 and 3 from block 3 to block 2."""
    gap = (pi[2] - pi[1]) / 3.0
    return np.array([pi[0], pi[1] + gap, pi[2] - gap])


class _Builder:
    """Accumulates snapshots, true labels and per-timestamp parameters."""

    def __init__(self, n_nodes: int, beta: float, rng: np.random.Generator) -> None:
        self.n_nodes = n_nodes
        self.beta = beta
        self.rng = rng
        self.stream: list[GraphSnapshot] = []
        self.labels: list[BlockAssignment] = []
        self.params: list[tuple[np.ndarray, np.ndarray]] = []

    @property
    def t(self) -> int:
        return len(self.stream) + 1

    def regenerate(self, pi: np.ndarray, theta: np.ndarray) -> None:
        g, z = sample_sbm(pi, theta, self.n_nodes, self.rng, self.t)
        self.stream.append(g)
        self.labels.append(z)
        self.params.append((pi, theta))

    def persist(self, pi: np.ndarray, theta: np.ndarray, until: int) -> None:
        while self.t <= until:
            z = self.labels[-1]
            g = link_trans(self.stream[-1], z, theta, self.beta, self.rng, self.t)
            self.stream.append(g)
            self.labels.append(z)
            self.params.append((pi, theta))

    def segments(self) -> list[Segment]:
        segs: list[Segment] = []
        for t, (pi, theta) in enumerate(self.params, start=1):
            last = segs[-1] if segs else None
            if last and np.array_equal(last.pi, pi) and np.array_equal(last.theta, theta):
                segs[-1] = Segment(last.start, t, last.pi, last.theta, last.k)
            else:
                segs.append(Segment(t, t, pi, theta, pi.shape[0]))
        return segs


def _base_parameters(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    pi1 = np.sort(rng.dirichlet(np.ones(3)))
    theta1 = _symmetric_beta(3, rng)
    return pi1, theta1


def _check_nodes(n_nodes: int) -> None:
    if n_nodes < 20:
        raise ValueError(f"n_nodes must be >= 20, got {n_nodes}")


def gen_abrupt(
    n_nodes: int = 100, seed: int = 0, beta: float = DEFAULT_BETA
) -> tuple[list[GraphSnapshot], StreamScenario]:
    """80 snapshots with abrupt level-1/2/3 changes at t = 20, 40, 60."""
    _check_nodes(n_nodes)
    rng = np.random.default_rng(seed)
    pi1, theta1 = _base_parameters(rng)
    theta2 = _perturb(theta1, rng)
    pi2 = _mass_shift(pi1)
    pi3 = _split_largest(pi2, 0.25)
    theta3 = _extend(theta2, rng)

    b = _Builder(n_nodes, beta, rng)
    b.regenerate(pi1, theta1)
    b.persist(pi1, theta1, 19)
    b.regenerate(pi1, theta2)
    b.persist(pi1, theta2, 39)
    b.regenerate(pi2, theta2)
    b.persist(pi2, theta2, 59)
    b.regenerate(pi3, theta3)
    b.persist(pi3, theta3, 80)
    scenario = StreamScenario(
        "abrupt",
        len(b.stream),
        n_nodes,
        b.segments(),
        [ChangeAnnotation(20, 20, 1), ChangeAnnotation(40, 40, 2), ChangeAnnotation(60, 60, 3)],
        beta,
        seed,
        b.labels,
    )
    return b.stream, scenario


def theta_ramp(theta1: np.ndarray, theta2: np.ndarray, t: int) -> np.ndarray:
    """Linear move from ``theta1`` at t=10 to ``theta2`` at t=15."""
    return theta1 + (t - 10) * (theta2 - theta1) / 5.0


def pi_ramp(pi1: np.ndarray, t: int) -> np.ndarray:
    """Blocks 2 and 3 converge to equal mass between t=35 and t=40."""
    step = (t - 35) * (pi1[2] - pi1[1]) / 10.0
    return np.array([pi1[0], pi1[1] + step, pi1[2] - step])


def split_ramp(pi2: np.ndarray, t: int) -> np.ndarray:
    """A fourth block grows out of block 3 between t=60 and t=70."""
    moved = (t - 60) * pi2[2] / 40.0
    return np.array([pi2[0], pi2[1], pi2[2] - moved, moved])


def gen_gradual(
    n_nodes: int = 100, seed: int = 0, beta: float = DEFAULT_BETA
) -> tuple[list[GraphSnapshot], StreamScenario]:
    """90 snapshots with gradual changes over [10,15], [35,40] and [60,70]."""
    _check_nodes(n_nodes)
    rng = np.random.default_rng(seed)
    pi1, theta1 = _base_parameters(rng)
    theta2 = _perturb(theta1, rng)
    pi2 = np.array([pi1[0], (pi1[1] + pi1[2]) / 2.0, (pi1[1] + pi1[2]) / 2.0])
    pi3 = split_ramp(pi2, 70)
    theta3 = _extend(theta2, rng)

    b = _Builder(n_nodes, beta, rng)
    b.regenerate(pi1, theta1)
    b.persist(pi1, theta1, 9)
    for t in range(10, 16):
        b.regenerate(pi1, theta_ramp(theta1, theta2, t))
    b.persist(pi1, theta2, 34)
    for t in range(35, 41):
        b.regenerate(pi_ramp(pi1, t), theta2)
    b.persist(pi2, theta2, 59)
    for t in range(60, 71):
        b.regenerate(split_ramp(pi2, t), theta3)
    b.persist(pi3, theta3, 90)
    scenario = StreamScenario(
        "gradual",
        len(b.stream),
        n_nodes,
        b.segments(),
        [ChangeAnnotation(10, 15, 1), ChangeAnnotation(35, 40, 2), ChangeAnnotation(60, 70, 3)],
        beta,
        seed,
        b.labels,
    )
    return b.stream, scenario


SCENARIOS: dict[str, Callable[..., tuple[list[GraphSnapshot], StreamScenario]]] = {
    "abrupt": gen_abrupt,
    "gradual": gen_gradual,
}
