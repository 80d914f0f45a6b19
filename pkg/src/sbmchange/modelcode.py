"""Code lengths for the block count itself, in nats."""
from __future__ import annotations

import math

__all__ = ["model_code_len", "model_pair_code_len", "transition_probability"]

_RISSANEN_CONST = math.log(2.865)


def model_code_len(k: int) -> float:
    """Rissanen's universal integer code: ln 2.865 + ln k + ln ln k + ...

    Only strictly positive terms of the iterated-log series are summed.
    """
    if k < 1:
        raise ValueError(f"block count must be >= 1, got {k}")
    total = _RISSANEN_CONST
    term = math.log(k)
    while term > 0.0:
        total += term
        term = math.log(term)
    return total


def transition_probability(n_changes: int, t: int) -> float:
    """Krichevsky-Trofimov estimate (N + 1/2) / (t + 1) of a model switch."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if not 0 <= n_changes <= t:
        raise ValueError(f"need 0 <= n_changes <= t, got {n_changes} and {t}")
    return (n_changes + 0.5) / (t + 1.0)


def model_pair_code_len(k1: int, k2: int, n_changes: int, t: int, k_max: int) -> float:
    """L(k1) + L(k2 | k1) with the switch probability from :func:`transition_probability`."""
    alpha = transition_probability(n_changes, t)
    head = model_code_len(k1)
    if k1 == k2:
        return head - math.log1p(-alpha)
    if k_max < 2:
        raise ValueError("a model change needs k_max >= 2")
    return head - math.log(alpha / (k_max - 1))
