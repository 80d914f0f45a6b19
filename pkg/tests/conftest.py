"""Shared oracles and small fixtures."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from sbmchange.graphs import BlockAssignment, GraphSnapshot


def compositions(n: int, k: int):
    """All count vectors of length k summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first, *rest)


def brute_multinomial_complexity(n: int, k: int) -> float:
    """ln of the sum over count vectors of the ML probability of that vector."""
    if n == 0:
        return 0.0
    total = 0.0
    for counts in compositions(n, k):
        coef = math.factorial(n)
        for c in counts:
            coef //= math.factorial(c)
        p = 1.0
        for c in counts:
            if c:
                p *= (c / n) ** c
        total += coef * p
    return math.log(total)


def brute_dnml(adj: np.ndarray, labels, k: int, directed: bool = False) -> float:
    """Term-by-term DNML of one snapshot with brute-force complexities."""
    labels = np.asarray(labels)
    n = adj.shape[0]
    pairs = {}
    for i, j in itertools.permutations(range(n), 2):
        if not directed and i > j:
            continue
        a, b = labels[i], labels[j]
        if not directed:
            a, b = min(a, b), max(a, b)
        plus, tot = pairs.get((a, b), (0, 0))
        pairs[(a, b)] = (plus + int(adj[i, j]), tot + 1)

    def xlx(x):
        return x * math.log(x) if x > 0 else 0.0

    lx = 0.0
    for plus, tot in pairs.values():
        lx += xlx(tot) - xlx(plus) - xlx(tot - plus) + brute_multinomial_complexity(tot, 2)
    sizes = np.bincount(labels, minlength=k)
    lz = xlx(n) - sum(xlx(s) for s in sizes) + brute_multinomial_complexity(n, k)
    return lx + lz


def planted_snapshot(rng, sizes, p_in, p_out, timestamp=0):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < probs, 1)
    return GraphSnapshot(n, np.argwhere(upper), False, timestamp), BlockAssignment(labels, len(sizes))


def random_snapshot(rng, n, p, directed=False, timestamp=0):
    a = rng.random((n, n)) < p
    return GraphSnapshot.from_adjacency(a.astype(int), directed, timestamp)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
