import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmchange.detector import DetectorConfig
from sbmchange.evaluation import (
    LEVEL_TARGETS,
    benefit,
    detection_time,
    far,
    run_experiment,
    tune_threshold,
)


@pytest.mark.parametrize("t_hat, expected", [(60, 1.0), (62, 0.6), (66, 0.0), (65, 0.0), (None, 0.0), (59, 0.0)])
def test_benefit_examples(t_hat, expected):
    assert benefit(t_hat, 60, 5) == pytest.approx(expected)


def test_benefit_rejects_bad_horizon():
    with pytest.raises(ValueError):
        benefit(60, 60, 0)


def test_far_examples():
    times = np.arange(1, 81)
    assert far(times, np.zeros(80), 1.0, 60, 10) == 0.0
    assert far(times, np.ones(80) * 2, 1.0, 60, 10) == 1.0
    # open guard window (50, 60) holds t = 51..59
    scores = np.zeros(80)
    scores[[51 - 1, 55 - 1]] = 5.0
    assert far(times, scores, 1.0, 60, 10) == pytest.approx(2 / 9)
    # 2 exceedances over a 10-point guard window
    guard = np.arange(51, 61)
    s = np.zeros(10)
    s[[2, 7]] = 5.0
    assert far(guard, s, 1.0, 61, 11) == pytest.approx(0.2)


def test_far_points_outside_guard_ignored():
    times = np.arange(1, 81)
    scores = np.zeros(80)
    scores[[49, 59, 69]] = 5.0  # t = 50, 60, 70
    assert far(times, scores, 1.0, 60, 10) == 0.0


def test_far_errors():
    with pytest.raises(ValueError):
        far([1, 2, 3], [0, 0, 0], 1.0, 60, 10)
    with pytest.raises(ValueError):
        far([1, 2, 3], [0, 0, 0], 1.0, 3, 0)


def test_far_per_point_threshold():
    times = np.arange(51, 60)
    scores = np.ones(9)
    thr = np.where(times < 55, 0.5, 2.0)
    assert far(times, scores, thr, 60, 10) == pytest.approx(4 / 9)


def test_detection_time():
    times = np.arange(1, 11)
    scores = np.array([0, 9, 0, 0, 0, 1, 3, 0, 4, 0], float)
    assert detection_time(times, scores, 2.0, 5) == 7
    assert detection_time(times, scores, 2.0, 2) == 2
    assert detection_time(times, scores, 10.0, 1) is None


@given(st.lists(st.floats(0, 1), min_size=30, max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_lower_threshold_weakly_increases_far_and_benefit(scores, a, b):
    lo, hi = sorted((a, b))
    times = np.arange(1, 31)
    s = np.array(scores)
    assert far(times, s, lo, 20, 10) >= far(times, s, hi, 20, 10)
    b_lo = benefit(detection_time(times, s, lo, 20), 20)
    b_hi = benefit(detection_time(times, s, hi, 20), 20)
    assert b_lo >= b_hi


def test_tune_threshold_maximizes_harmonic_mean():
    times = np.arange(1, 31)
    s = np.zeros(30)
    s[19] = 0.6  # at t* = 20
    s[[12, 15]] = 0.3  # two guard-window spikes
    rows = [(times, s)]
    # 0.2: benefit 1, FAR 2/9; 0.5: benefit 1, FAR 0; 0.8: benefit 0
    assert tune_threshold(rows, (0.2, 0.5, 0.8), 20) == 0.5
    with pytest.raises(ValueError):
        tune_threshold(rows, (), 20)


def test_run_experiment_validation():
    cfg = DetectorConfig()
    with pytest.raises(ValueError):
        run_experiment("abrupt", 0, [2], cfg)
    with pytest.raises(ValueError):
        run_experiment("nope", 1, [2], cfg)
    with pytest.raises(ValueError):
        run_experiment("abrupt", 1, [2], cfg, methods=("nml",))


def test_run_experiment_baselines_structure_and_determinism():
    cfg = DetectorConfig(k_max=4, restarts=1, seed=3)
    a = run_experiment("abrupt", 1, [2], cfg, n_nodes=20, methods=("deltacon",))
    b = run_experiment("abrupt", 1, [2], cfg, n_nodes=20, methods=("deltacon",))
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    assert {r["level"] for r in a.rows} == {1, 2, 3}
    for r in a.rows:
        assert 0 <= r["benefit_mean"] <= 1 and 0 <= r["far_mean"] <= 1
        assert r["t_star"] == LEVEL_TARGETS["abrupt"][r["level"]]
    assert a.row("deltacon", 3)["threshold"] in (0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05)
    doc = json.loads(a.to_json())
    assert doc["per_trial"][0]["seed"] == 3 and len(doc["per_trial"][0]["deltacon"]) == 80
    assert a.to_csv().splitlines()[0] == (
        "method,h,level,t_star,benefit_mean,benefit_std,far_mean,far_std,threshold"
    )
