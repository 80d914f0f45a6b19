"""Benefit / false-alarm metrics and the synthetic-scenario experiment runner."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from sbmchange.baselines import deltacon_series, tbe_series
from sbmchange.complexity import LogComplexityTable
from sbmchange.detector import ChangeReport, DetectorConfig, run_hcdl
from sbmchange.graphs import GraphSnapshot
from sbmchange.sbm import select_model
from sbmchange.streams import SCENARIOS, StreamScenario

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentResult",
    "LEVEL_TARGETS",
    "benefit",
    "detection_time",
    "far",
    "run_experiment",
    "tune_threshold",
]

DEFAULT_T = 5
DEFAULT_U = 10
TBE_GRID = (0.2, 0.5, 0.8)
DELTACON_GRID = (0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05)

# change onset per level for each scenario
LEVEL_TARGETS = {
    "abrupt": {3: 60, 2: 40, 1: 20},
    "gradual": {3: 60, 2: 35, 1: 10},
}

# which statistic and threshold each level is scored on
_HCDL_SERIES = {3: ("phi", "eps"), 2: ("phi_z", "eps_z"), 1: ("phi_xz", "eps_xz")}


def benefit(t_hat: float | None, t_star: float, T: float = DEFAULT_T) -> float:
    """``max(1 - |t_hat - t_star| / T, 0)``; a missing or early detection scores 0."""
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if t_hat is None or t_hat < t_star:
        return 0.0
    return max(1.0 - abs(t_hat - t_star) / T, 0.0)


def _as_threshold(threshold, n: int) -> np.ndarray:
    thr = np.asarray(threshold, dtype=np.float64)
    return np.broadcast_to(thr, (n,))


def far(times, scores, threshold, t_star: float, U: float = DEFAULT_U) -> float:
    """Share of points with ``t_star - U < t < t_star`` whose score exceeds the threshold.

    ``threshold`` is a scalar or one value per point.
    """
    if U < 1:
        raise ValueError(f"U must be >= 1, got {U}")
    times = np.asarray(times, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    thr = _as_threshold(threshold, times.size)
    guard = (times > t_star - U) & (times < t_star)
    if not guard.any():
        raise ValueError(f"no points in the guard window ({t_star - U}, {t_star})")
    return float(np.mean(scores[guard] > thr[guard]))


def detection_time(times, scores, threshold, t_star: float) -> float | None:
    """First ``t >= t_star`` whose score exceeds the threshold, else None."""
    times = np.asarray(times, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    thr = _as_threshold(threshold, times.size)
    hits = np.flatnonzero((times >= t_star) & (scores > thr))
    return float(times[hits[0]]) if hits.size else None


@dataclass
class _Series:
    """One score series with its threshold (scalar or per point)."""

    times: np.ndarray
    scores: np.ndarray
    threshold: np.ndarray | float

    def metrics(self, t_star: float, T: float, U: float) -> tuple[float, float]:
        t_hat = detection_time(self.times, self.scores, self.threshold, t_star)
        return benefit(t_hat, t_star, T), far(self.times, self.scores, self.threshold, t_star, U)


def hcdl_series(reports: Sequence[ChangeReport], level: int) -> _Series:
    score, thr = _HCDL_SERIES[level]
    times = np.array([r.t for r in reports], dtype=np.float64)
    return _Series(
        times,
        np.array([getattr(r, score) for r in reports]),
        np.array([getattr(r, thr) for r in reports]),
    )


def tune_threshold(
    score_rows: Sequence[tuple[np.ndarray, np.ndarray]],
    grid: Iterable[float],
    t_star: float,
    T: float = DEFAULT_T,
    U: float = DEFAULT_U,
) -> float:
    """Grid value maximizing the harmonic mean of mean benefit and 1 - mean FAR.

    ``score_rows`` holds one ``(times, scores)`` pair per trial.  Ties go to
    the first grid value.
    """
    best_thr, best_val = None, -math.inf
    for thr in grid:
        b = np.mean([benefit(detection_time(t, s, thr, t_star), t_star, T) for t, s in score_rows])
        f = np.mean([far(t, s, thr, t_star, U) for t, s in score_rows])
        hm = 0.0 if b + (1 - f) == 0 else 2 * b * (1 - f) / (b + (1 - f))
        if hm > best_val:
            best_thr, best_val = thr, hm
    if best_thr is None:
        raise ValueError("threshold grid is empty")
    return float(best_thr)


@dataclass
class ExperimentResult:
    scenario: str
    trials: int
    rows: list[dict]
    per_trial: list[dict] = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict)

    def row(self, method: str, level: int, h: int | None = None) -> dict:
        for r in self.rows:
            if r["method"] == method and r["level"] == level and (h is None or r["h"] == h):
                return r
        raise KeyError((method, level, h))

    def to_csv(self) -> str:
        cols = ["method", "h", "level", "t_star", "benefit_mean", "benefit_std",
                "far_mean", "far_std", "threshold"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: _fmt(r[c]) for c in cols})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "scenario": self.scenario,
                "trials": self.trials,
                "config": self.config,
                "rows": self.rows,
                "per_trial": self.per_trial,
            },
            indent=2,
            sort_keys=True,
        )


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return "" if v is None else v


def _tbe_losses(
    stream: Sequence[GraphSnapshot],
    scenario: StreamScenario,
    k_max: int,
    restarts: int,
    seed: int,
    table: LogComplexityTable,
) -> list[np.ndarray]:
    """Per snapshot, |DNML of the fit at the true K - DNML of the fit with k blocks| for each k."""
    rows = []
    for i, g in enumerate(stream):
        sel = select_model([g], k_max, restarts=restarts, seed=seed + i, table=table)
        fitted = np.array([sel.fits[k].code.total for k in range(1, k_max + 1)])
        rows.append(np.abs(fitted[scenario.true_k(g.timestamp) - 1] - fitted))
    return rows


def _aggregate(method: str, h, level: int, t_star: int, values: list[tuple[float, float]], thr) -> dict:
    b = np.array([v[0] for v in values])
    f = np.array([v[1] for v in values])
    return {
        "method": method,
        "h": h,
        "level": level,
        "t_star": t_star,
        "benefit_mean": float(b.mean()),
        "benefit_std": float(b.std()),
        "far_mean": float(f.mean()),
        "far_std": float(f.std()),
        "threshold": thr,
    }


def run_experiment(
    scenario: str,
    n_trials: int,
    h_values: Sequence[int],
    config: DetectorConfig,
    n_nodes: int = 100,
    methods: Sequence[str] = ("hcdl", "tbe", "deltacon"),
    T: float = DEFAULT_T,
    U: float = DEFAULT_U,
    tbe_eta: float = 1.0,
    tbe_alpha: float = 0.2,
    eps_fabp: float = 0.1,
    progress: Callable[[str], None] | None = None,
) -> ExperimentResult:
    """Repeat generation and detection ``n_trials`` times and tabulate metrics.

    Trial ``i`` uses stream seed and detector seed ``config.seed + i``.
    Baseline thresholds are chosen on the level-3 change and reused for the
    other levels.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    unknown = set(methods) - {"hcdl", "tbe", "deltacon"}
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    targets = LEVEL_TARGETS[scenario]
    table = LogComplexityTable(max(config.k_max, 2))
    hcdl: dict[int, dict[int, list[_Series]]] = {h: {lvl: [] for lvl in targets} for h in h_values}
    baseline_rows: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {"tbe": [], "deltacon": []}
    per_trial: list[dict] = []
    for trial in range(n_trials):
        seed = config.seed + trial
        stream, truth = SCENARIOS[scenario](n_nodes=n_nodes, seed=seed)
        times = np.array([g.timestamp for g in stream], dtype=np.float64)
        record: dict = {"trial": trial, "seed": seed}
        if "hcdl" in methods:
            for h in h_values:
                cfg = replace(config, h=h, seed=seed)
                reports = run_hcdl(stream, cfg, table)
                record[f"hcdl_h{h}"] = [r.as_record() for r in reports]
                for lvl in targets:
                    hcdl[h][lvl].append(hcdl_series(reports, lvl))
        if "tbe" in methods:
            k_max = min(config.k_max, n_nodes)
            losses = _tbe_losses(stream, truth, k_max, config.restarts, seed, table)
            scores = tbe_series(losses, tbe_eta, tbe_alpha)
            baseline_rows["tbe"].append((times, scores))
            record["tbe"] = scores.tolist()
        if "deltacon" in methods:
            scores = deltacon_series(stream, eps_fabp)
            baseline_rows["deltacon"].append((times, scores))
            record["deltacon"] = scores.tolist()
        per_trial.append(record)
        if progress is not None:
            progress(f"{scenario} trial {trial + 1}/{n_trials} done")

    rows: list[dict] = []
    for h in h_values if "hcdl" in methods else ():
        for lvl in sorted(targets, reverse=True):
            vals = [s.metrics(targets[lvl], T, U) for s in hcdl[h][lvl]]
            rows.append(_aggregate("hcdl", h, lvl, targets[lvl], vals, None))
    for name, grid in (("tbe", TBE_GRID), ("deltacon", DELTACON_GRID)):
        if name not in methods:
            continue
        data = baseline_rows[name]
        thr = tune_threshold(data, grid, targets[3], T, U)
        for lvl in sorted(targets, reverse=True):
            vals = [_Series(t, s, thr).metrics(targets[lvl], T, U) for t, s in data]
            rows.append(_aggregate(name, None, lvl, targets[lvl], vals, thr))
    cfg = {
        "h_values": list(h_values),
        "delta": config.delta,
        "delta_xz": config.delta_xz,
        "delta_z": config.delta_z,
        "k_max": config.k_max,
        "restarts": config.restarts,
        "seed": config.seed,
        "window_mode": config.window_mode,
        "n_nodes": n_nodes,
        "T": T,
        "U": U,
    }
    return ExperimentResult(scenario, n_trials, rows, per_trial, cfg)
