"""Compiled kernels vs the numpy fallback.

The backend is fixed at import, so each backend runs in its own child
process (the fallback with ``SBMCHANGE_PURE_PYTHON=1``).

    python3 benchmarks/bench_kernels.py [--nodes 100] [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit


def _workload(nodes: int, repeat: int) -> dict:
    import numpy as np

    from sbmchange import _core
    from sbmchange.sbm import select_model
    from sbmchange.streams import gen_abrupt

    stream, _ = gen_abrupt(n_nodes=nodes, seed=0)
    window = stream[:4]
    adj = np.ascontiguousarray(np.stack([g.adjacency for g in window]), dtype=np.uint8)
    labels = np.random.default_rng(0).integers(0, 4, size=adj.shape[:2]).astype(np.int64)

    def counts():
        _core.neighbor_block_counts(adj, labels, 4)

    def complexity():
        for n in range(1, 5000, 7):
            _core.log_binomial_complexity(n)

    def select():
        select_model(window, 6, restarts=2, seed=0)

    out = {"backend": _core.BACKEND}
    for name, fn, number in (("block_counts", counts, 20), ("binomial_complexity", complexity, 5), ("select_model", select, 1)):
        out[name] = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)
    if args.child:
        print(json.dumps(_workload(args.nodes, args.repeat)))
        return 0

    results = []
    for pure in ("0", "1"):
        env = dict(os.environ, SBMCHANGE_PURE_PYTHON=pure)
        proc = subprocess.run(
            [sys.executable, __file__, "--child", "--nodes", str(args.nodes), "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        results.append(json.loads(proc.stdout))
    fast, slow = results
    if fast["backend"] != "cython":
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`", file=sys.stderr)
    print(f"{'kernel':<22}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in ("block_counts", "binomial_complexity", "select_model"):
        print(f"{key:<22}{fast[key] * 1e3:>10.2f}ms{slow[key] * 1e3:>10.2f}ms{slow[key] / fast[key]:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
