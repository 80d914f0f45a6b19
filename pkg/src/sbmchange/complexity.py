"""Parametric complexities of multinomial NML codes, in nats.

``C(n, K)`` is the sum, over every count vector of ``n`` draws from ``K``
categories, of the maximized multinomial likelihood of that vector.  The
binomial case is an exact O(n) sum; larger ``K`` follow from the linear
recurrence ``C(n, K+1) = C(n, K) + n / (K - 1) * C(n, K - 1)``.
"""
from __future__ import annotations

import math
import threading

import numpy as np

from sbmchange._core import log_binomial_complexity

__all__ = [
    "LogComplexityTable",
    "build_table",
    "log_multinomial_complexity",
]


def _check(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"number of categories must be >= 1, got {k}")
    if n < 0:
        raise ValueError(f"sample size must be >= 0, got {n}")


def _log_row(n: int, max_k: int) -> np.ndarray:
    """ln C(n, K) for K = 0..max_k (index 0 is unused and holds -inf)."""
    row = np.full(max_k + 1, -np.inf)
    row[1] = 0.0
    if max_k >= 2:
        row[2] = log_binomial_complexity(n)
    if n == 0:
        row[1:] = 0.0
        return row
    log_n = math.log(n)
    for k in range(2, max_k):
        row[k + 1] = np.logaddexp(row[k], log_n - math.log(k - 1) + row[k - 1])
    return row


def log_multinomial_complexity(n: int, k: int) -> float:
    """Return ``ln C(n, k)`` for a ``k``-category multinomial and ``n`` draws.

    >>> round(log_multinomial_complexity(1, 4), 6) == round(math.log(4), 6)
    True
    """
    n, k = int(n), int(k)
    _check(n, k)
    if k == 1 or n == 0:
        return 0.0
    return float(_log_row(n, k)[k])


class LogComplexityTable:
    """Memoized ``ln C(n, K)`` lookups.

    Rows are computed on first use and never change afterwards, so a table
    can be shared between readers once populated.  ``max_n`` records the
    largest sample size requested so far; lookups beyond it extend the cache
    rather than fail, because window counts are only known at fit time.
    """

    def __init__(self, max_k: int = 2) -> None:
        if max_k < 1:
            raise ValueError(f"max_k must be >= 1, got {max_k}")
        self.max_k = int(max_k)
        self.max_n = 0
        self._rows: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def _row(self, n: int, k: int) -> np.ndarray:
        row = self._rows.get(n)
        if row is not None and row.shape[0] > k:
            return row
        with self._lock:
            width = max(self.max_k, k)
            row = _log_row(n, width)
            self._rows[n] = row
            self.max_k = width
            self.max_n = max(self.max_n, n)
        return row

    def entry(self, n: int, k: int) -> float:
        n, k = int(n), int(k)
        _check(n, k)
        if k == 1 or n == 0:
            return 0.0
        return float(self._row(n, k)[k])

    __call__ = entry

    def binomial_sum(self, counts: np.ndarray) -> float:
        """Sum of ``ln C(n, 2)`` over an array of dyad counts."""
        total = 0.0
        for n in np.asarray(counts, dtype=np.int64).ravel():
            if n > 0:
                total += self.entry(int(n), 2)
        return total

    def __contains__(self, n: int) -> bool:
        return int(n) in self._rows

    def __len__(self) -> int:
        return len(self._rows)


def build_table(max_n: int, max_k: int) -> LogComplexityTable:
    """Eagerly populate a table for every ``n <= max_n`` and ``K <= max_k``."""
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    table = LogComplexityTable(max_k)
    for n in range(max_n + 1):
        table._row(n, max_k)
    return table
