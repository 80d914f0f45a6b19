import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmchange.complexity import LogComplexityTable, build_table, log_multinomial_complexity

from conftest import brute_multinomial_complexity

# frozen brute-force values (ln C(n, 2))
BINOMIAL_ORACLE = {4: math.log(3.21875), 5: math.log(1 + 0.4096 + 0.3456 + 0.3456 + 0.4096 + 1)}


def test_single_category_is_zero():
    assert log_multinomial_complexity(7, 1) == 0.0


def test_one_draw_gives_k():
    assert log_multinomial_complexity(1, 4) == pytest.approx(math.log(4), abs=1e-12)


@pytest.mark.parametrize("n", sorted(BINOMIAL_ORACLE))
def test_binomial_hand_values(n):
    assert log_multinomial_complexity(n, 2) == pytest.approx(BINOMIAL_ORACLE[n], abs=1e-12)
    assert log_multinomial_complexity(5, 2) == pytest.approx(1.2557, abs=1e-4)


def test_zero_draws_is_zero():
    for k in range(1, 8):
        assert log_multinomial_complexity(0, k) == 0.0


@pytest.mark.parametrize("n", range(0, 13))
@pytest.mark.parametrize("k", range(1, 6))
def test_matches_enumeration(n, k):
    assert abs(log_multinomial_complexity(n, k) - brute_multinomial_complexity(n, k)) < 1e-9


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        log_multinomial_complexity(3, 0)
    with pytest.raises(ValueError):
        log_multinomial_complexity(-1, 2)


@given(st.integers(1, 400), st.integers(2, 9))
@settings(max_examples=60, deadline=None)
def test_recurrence_holds(n, k):
    lhs = math.exp(log_multinomial_complexity(n, k + 1))
    rhs = math.exp(log_multinomial_complexity(n, k)) + n / (k - 1) * math.exp(
        log_multinomial_complexity(n, k - 1)
    )
    assert lhs == pytest.approx(rhs, rel=1e-9)


@given(st.integers(0, 300), st.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_monotone_in_n_and_k(n, k):
    c = log_multinomial_complexity(n, k)
    assert log_multinomial_complexity(n, k + 1) >= c
    assert log_multinomial_complexity(n + 1, k) >= c


def test_large_n_is_finite():
    v = log_multinomial_complexity(200_000, 10)
    assert np.isfinite(v) and v > 0


def test_build_table_examples():
    t = build_table(10, 3)
    assert t.entry(10, 1) == 0.0
    assert t.entry(1, 3) == pytest.approx(math.log(3), abs=1e-12)
    assert t.entry(5, 2) == pytest.approx(math.log(3.5104), abs=1e-4)
    assert t.max_n == 10 and len(t) == 11


def test_table_matches_function_and_extends_lazily():
    t = LogComplexityTable(2)
    assert 50 not in t
    assert t(50, 6) == log_multinomial_complexity(50, 6)
    assert 50 in t and t.max_n == 50
    assert t.entry(50, 2) == log_multinomial_complexity(50, 2)


def test_binomial_sum_skips_empty_pairs():
    t = LogComplexityTable()
    counts = np.array([[0, 4], [5, 0]])
    assert t.binomial_sum(counts) == pytest.approx(BINOMIAL_ORACLE[4] + BINOMIAL_ORACLE[5])


def test_build_table_validates():
    with pytest.raises(ValueError):
        build_table(0, 2)
    with pytest.raises(ValueError):
        build_table(3, 0)
