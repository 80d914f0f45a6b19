"""Kernel selection: the compiled extension when it imports, numpy otherwise.

Set ``SBMCHANGE_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the equivalence tests).
"""
from __future__ import annotations

import os

if os.environ.get("SBMCHANGE_PURE_PYTHON", "") not in ("", "0"):
    from sbmchange import _fallback as _impl

    HAVE_EXTENSION = False
else:
    try:
        from sbmchange import _kernels as _impl  # type: ignore[attr-defined]

        HAVE_EXTENSION = True
    except ImportError:
        from sbmchange import _fallback as _impl

        HAVE_EXTENSION = False

BACKEND = "cython" if HAVE_EXTENSION else "numpy"

log_binomial_complexity = _impl.log_binomial_complexity
neighbor_block_counts = _impl.neighbor_block_counts
cem_sweep = _impl.cem_sweep
permutation_hill_climb = _impl.permutation_hill_climb
