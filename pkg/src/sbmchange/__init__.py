"""Hierarchical MDL change detection for streams of stochastic-block-model networks."""
from __future__ import annotations

__version__ = "0.1.0"

from sbmchange._core import BACKEND, HAVE_EXTENSION
from sbmchange.complexity import LogComplexityTable, build_table, log_multinomial_complexity
from sbmchange.detector import (
    ChangeReport,
    DetectorConfig,
    mdl_change_statistic,
    run_hcdl,
    thresholds,
    weights,
)
from sbmchange.graphs import BlockAssignment, GraphSnapshot
from sbmchange.modelcode import model_code_len, model_pair_code_len
from sbmchange.sbm import (
    DnmlCodeLength,
    ModelSelection,
    SbmSufficientStats,
    align_labels,
    dnml_code_length,
    infer_assignments,
    pool_stats,
    select_model,
    snapshot_stats,
)

__all__ = [
    "BACKEND",
    "HAVE_EXTENSION",
    "BlockAssignment",
    "ChangeReport",
    "DetectorConfig",
    "DnmlCodeLength",
    "GraphSnapshot",
    "LogComplexityTable",
    "ModelSelection",
    "SbmSufficientStats",
    "align_labels",
    "build_table",
    "dnml_code_length",
    "infer_assignments",
    "log_multinomial_complexity",
    "mdl_change_statistic",
    "model_code_len",
    "model_pair_code_len",
    "pool_stats",
    "run_hcdl",
    "select_model",
    "snapshot_stats",
    "thresholds",
    "weights",
]
