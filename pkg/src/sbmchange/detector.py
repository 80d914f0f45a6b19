"""Sliding-window MDL change statistics with a hierarchical decomposition.

At each time point the window of ``2h`` snapshots is coded once with a single
block model and once as two halves with separate models.  The per-snapshot
saving splits exactly into a links-given-blocks part, a blocks part and a
model-code part, and each part is tested against its own threshold:

* level 3: the whole statistic, i.e. a change of the block count;
* level 2: the blocks part, i.e. a change in block membership;
* level 1: the links-given-blocks part, i.e. a change in link probabilities.

Reports are indexed by the timestamp of the first snapshot of the right half,
so a change that starts at snapshot ``t`` is reported at ``t``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from sbmchange.complexity import LogComplexityTable
from sbmchange.graphs import BlockAssignment, GraphSnapshot
from sbmchange.modelcode import model_code_len, model_pair_code_len
from sbmchange.sbm import (
    WINDOW_MODES,
    ModelSelection,
    SbmSufficientStats,
    alignment_mapping,
    log_complexities,
    select_model,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ChangeReport",
    "DetectorConfig",
    "mdl_change_statistic",
    "model_code_len",
    "model_pair_code_len",
    "run_hcdl",
    "thresholds",
    "weights",
]


@dataclass(frozen=True)
class DetectorConfig:
    h: int = 2
    delta: float = 0.05
    delta_xz: float = 0.05
    delta_z: float = 0.05
    k_max: int = 10
    restarts: int = 10
    seed: int = 0
    window_mode: str = "pooled"

    def __post_init__(self) -> None:
        if self.h < 1:
            raise ValueError(f"h must be >= 1, got {self.h}")
        for name in ("delta", "delta_xz", "delta_z"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.window_mode not in WINDOW_MODES:
            raise ValueError(f"window_mode must be one of {WINDOW_MODES}, got {self.window_mode!r}")


@dataclass
class ChangeReport:
    """Scores, thresholds and alarms at one time point (all in nats per snapshot)."""

    t: int
    phi: float
    phi_xz: float
    phi_z: float
    delta_l: float
    k_hat: int
    k_hat1: int
    k_hat2: int
    eps: float = math.nan
    eps_xz: float = math.nan
    eps_z: float = math.nan
    alarm_level3: bool = False
    alarm_level2: bool = False
    alarm_level1: bool = False
    w_xz: float | None = None
    w_z: float | None = None
    assignments: list[BlockAssignment] = field(default_factory=list, repr=False, compare=False)

    def alarm_levels(self) -> list[int]:
        return [lvl for lvl, on in ((3, self.alarm_level3), (2, self.alarm_level2),
                                    (1, self.alarm_level1)) if on]

    def as_record(self) -> dict:
        """Flat, JSON-friendly view without the assignments."""
        return {
            "t": self.t,
            "phi": self.phi,
            "phi_xz": self.phi_xz,
            "phi_z": self.phi_z,
            "delta_l": self.delta_l,
            "eps": self.eps,
            "eps_xz": self.eps_xz,
            "eps_z": self.eps_z,
            "k_hat": self.k_hat,
            "k_hat1": self.k_hat1,
            "k_hat2": self.k_hat2,
            "alarm_level3": self.alarm_level3,
            "alarm_level2": self.alarm_level2,
            "alarm_level1": self.alarm_level1,
            "w_xz": self.w_xz,
            "w_z": self.w_z,
        }


def _window_seed(seed: int, start: int, length: int) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, start, length])
    return int(ss.generate_state(1)[0])


class _WindowSelector:
    """Model selection on sub-windows of one stream, cached by position.

    The same sub-window is fitted once and reused whether it appears as a left
    half, a right half or (for h=1 and neighbouring points) elsewhere, so all
    statistics that share a sub-window see the same fit.
    """

    def __init__(
        self, stream: Sequence[GraphSnapshot], config: DetectorConfig, table: LogComplexityTable
    ) -> None:
        self.stream = stream
        self.config = config
        self.table = table
        self._cache: dict[tuple[int, int], ModelSelection] = {}

    def __call__(self, start: int, length: int) -> ModelSelection:
        key = (start, length)
        hit = self._cache.get(key)
        if hit is None:
            cfg = self.config
            k_max = min(cfg.k_max, self.stream[start].n_nodes)
            hit = select_model(
                self.stream[start : start + length],
                k_max,
                restarts=cfg.restarts,
                seed=_window_seed(cfg.seed, start, length),
                table=self.table,
                mode=cfg.window_mode,
                warm_starts=self._warm_starts(start, length),
            )
            self._cache[key] = hit
        return hit

    def _warm_starts(self, start: int, length: int, n_sources: int = 2) -> dict[int, list[np.ndarray]]:
        """Labels of the most-overlapping cached fits, carried onto this window.

        Snapshots outside a source window copy the labels of the nearest
        snapshot it covers.
        """
        def overlap(key):
            s0, l0 = key
            return min(start + length, s0 + l0) - max(start, s0)

        sources = sorted((k for k in self._cache if overlap(k) > 0), key=lambda k: (-overlap(k), k))
        out: dict[int, list[np.ndarray]] = {}
        for s0, l0 in sources[:n_sources]:
            rows = np.clip(np.arange(start, start + length) - s0, 0, l0 - 1)
            for k, fit in self._cache[(s0, l0)].fits.items():
                if k > 1 and fit.complete:
                    labels = np.stack([z.labels for z in fit.assignments])
                    out.setdefault(k, []).append(labels[rows])
        return out

    def forget_before(self, start: int) -> None:
        for key in [k for k in self._cache if k[0] < start]:
            del self._cache[key]


def _best_split(
    left: ModelSelection, right: ModelSelection, n_changes: int, t: int, k_max: int
) -> tuple[int, int, float]:
    """Jointly minimize left code + right code + pair code over (k1, k2)."""
    best = (left.k_hat, right.k_hat, math.inf)
    for k1, f1 in left.fits.items():
        if not f1.complete:
            continue
        for k2, f2 in right.fits.items():
            if not f2.complete:
                continue
            total = f1.code.total + f2.code.total + model_pair_code_len(k1, k2, n_changes, t, k_max)
            if total < best[2]:
                best = (k1, k2, total)
    return best


def _statistic(
    full: ModelSelection,
    left: ModelSelection,
    right: ModelSelection,
    h: int,
    n_changes: int,
    t: int,
    k_max: int,
) -> ChangeReport:
    k1, k2, _ = _best_split(left, right, n_changes, t, k_max)
    fl, fr, ff = left.fits[k1].code, right.fits[k2].code, full.best.code
    lm = model_code_len(full.k_hat)
    lpair = model_pair_code_len(k1, k2, n_changes, t, k_max)
    scale = 1.0 / (2 * h)
    phi_xz = scale * (ff.x_given_z - fl.x_given_z - fr.x_given_z)
    phi_z = scale * (ff.z - fl.z - fr.z)
    delta_l = scale * (lm - lpair)
    phi = scale * ((ff.total + lm) - (fl.total + fr.total + lpair))
    return ChangeReport(t, phi, phi_xz, phi_z, delta_l, full.k_hat, k1, k2)


def _check_halves(left: Sequence[GraphSnapshot], right: Sequence[GraphSnapshot], h: int) -> None:
    if len(left) != h or len(right) != h:
        raise ValueError(f"both halves need exactly h={h} snapshots, got {len(left)} and {len(right)}")
    n = left[0].n_nodes
    if any(s.n_nodes != n for s in (*left, *right)):
        raise ValueError("all snapshots in a window must share the node count")


def mdl_change_statistic(
    left: Sequence[GraphSnapshot],
    right: Sequence[GraphSnapshot],
    config: DetectorConfig,
    n_changes_so_far: int,
    t: int,
    table: LogComplexityTable | None = None,
) -> ChangeReport:
    """Scores and selected models for one split; thresholds are left unset."""
    h = config.h
    _check_halves(left, right, h)
    table = table or LogComplexityTable(max(config.k_max, 2))
    select = _WindowSelector([*left, *right], config, table)
    k_max = min(config.k_max, left[0].n_nodes)
    report = _statistic(select(0, 2 * h), select(0, h), select(h, h), h, n_changes_so_far, t, k_max)
    report.assignments = select(0, 2 * h).assignments
    return report


def thresholds(
    k_hat: int,
    stats_full: SbmSufficientStats | Sequence[SbmSufficientStats],
    config: DetectorConfig,
    table: LogComplexityTable | None = None,
) -> tuple[float, float, float]:
    """``(eps, eps_xz, eps_z)`` from plug-in complexities of the full-window fit.

    ``stats_full`` is the pooled statistics of the window, or the per-snapshot
    list when the window is coded with one normalizer per snapshot.
    """
    table = table or LogComplexityTable(max(k_hat, 2))
    cx, cz = log_complexities(stats_full, table)
    two_h = 2.0 * config.h
    eps = (cx + cz + model_code_len(k_hat) - math.log(config.delta)) / two_h
    eps_xz = (cx - math.log(config.delta_xz)) / two_h
    eps_z = (cz - math.log(config.delta_z)) / two_h
    return eps, eps_xz, eps_z


def weights(phi_xz: float, phi_z: float) -> tuple[float, float]:
    """Relative share of each lower-level score when both fire."""
    denom = phi_xz + phi_z
    if not denom > 0.0:
        raise ValueError(f"weights need a positive score sum, got {phi_xz} + {phi_z}")
    return phi_xz / denom, phi_z / denom


def _apply_tests(report: ChangeReport) -> ChangeReport:
    if report.phi > report.eps:
        return replace(report, alarm_level3=True)
    lvl1 = report.phi_xz > report.eps_xz
    lvl2 = report.phi_z > report.eps_z
    w_xz = w_z = None
    if lvl1 and lvl2:
        w_xz, w_z = weights(report.phi_xz, report.phi_z)
    return replace(report, alarm_level1=lvl1, alarm_level2=lvl2, w_xz=w_xz, w_z=w_z)


def run_hcdl(
    stream: Sequence[GraphSnapshot],
    config: DetectorConfig,
    table: LogComplexityTable | None = None,
) -> list[ChangeReport]:
    """Hierarchical change detection over a whole stream.

    One report per split point: the left half is ``stream[i-h:i]`` and the right
    half ``stream[i:i+h]`` for ``i = h .. len-h``; the report carries the
    timestamp of ``stream[i]``.
    """
    h = config.h
    if len(stream) < 2 * h:
        raise ValueError(f"stream of {len(stream)} snapshots is shorter than 2h={2 * h}")
    n = stream[0].n_nodes
    if any(s.n_nodes != n or s.directed != stream[0].directed for s in stream):
        raise ValueError("all snapshots must share node count and directedness")
    k_max = min(config.k_max, n)
    table = table or LogComplexityTable(max(k_max, 2))
    select = _WindowSelector(stream, config, table)
    reports: list[ChangeReport] = []
    n_changes = 0
    prev: list[BlockAssignment] | None = None
    for i in range(h, len(stream) - h + 1):
        t = int(stream[i].timestamp)
        full = select(i - h, 2 * h)
        # the switch estimator needs n_changes <= t even for odd timestamps
        rep = _statistic(full, select(i - h, h), select(i, h), h, n_changes, max(t, n_changes), k_max)
        rep.t = t
        per = full.best.per_snapshot if config.window_mode == "per-snapshot" else full.best.stats
        rep.eps, rep.eps_xz, rep.eps_z = thresholds(full.k_hat, per, config, table)
        rep = _apply_tests(rep)
        if rep.alarm_level3:
            n_changes += 1
        assigned = list(full.assignments)
        if prev is not None:
            # window i shares snapshot i-h with the previous one (its index 1)
            ref = prev[1] if len(prev) > 1 else prev[0]
            mapping = alignment_mapping(ref, assigned[0])
            k_out = max(full.k_hat, int(mapping[: full.k_hat].max()) + 1)
            assigned = [z.relabel(mapping, k_out) for z in assigned]
        rep.assignments = assigned
        prev = assigned
        reports.append(rep)
        select.forget_before(i - h)
        logger.debug(
            "t=%d phi=%.4f eps=%.4f phi_xz=%.4f eps_xz=%.4f phi_z=%.4f eps_z=%.4f k=%d/%d/%d",
            t, rep.phi, rep.eps, rep.phi_xz, rep.eps_xz, rep.phi_z, rep.eps_z,
            rep.k_hat, rep.k_hat1, rep.k_hat2,
        )
    return reports

