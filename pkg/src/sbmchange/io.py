"""Plain-text snapshot streams.

A stream file is a sequence of blocks, each starting with a header line

    # t=<int> n=<int> directed=<0|1>

followed by one ``u v`` edge per line with 1-indexed endpoints.  Blank lines
are ignored.  Snapshots are returned sorted by timestamp.
"""
from __future__ import annotations

import os
import re
from typing import Iterable, Sequence

import numpy as np

from sbmchange.graphs import GraphSnapshot

__all__ = ["StreamFormatError", "dump_stream", "load_stream", "parse_stream", "save_stream"]

_HEADER = re.compile(r"^#\s*t=(-?\d+)\s+n=(\d+)\s+directed=([01])\s*$")


class StreamFormatError(ValueError):
    """Malformed or inconsistent stream file."""


def parse_stream(lines: Iterable[str], source: str = "<stream>") -> list[GraphSnapshot]:
    blocks: list[tuple[int, int, bool, list[tuple[int, int]], int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m is None:
                raise StreamFormatError(f"{source}:{lineno}: malformed header {line!r}")
            t, n, d = int(m.group(1)), int(m.group(2)), m.group(3) == "1"
            if n < 1:
                raise StreamFormatError(f"{source}:{lineno}: node count must be positive")
            blocks.append((t, n, d, [], lineno))
            continue
        if not blocks:
            raise StreamFormatError(f"{source}:{lineno}: edge before the first header")
        parts = line.split()
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            raise StreamFormatError(f"{source}:{lineno}: expected 'u v', got {line!r}")
        u, v = int(parts[0]), int(parts[1])
        n = blocks[-1][1]
        if not (1 <= u <= n and 1 <= v <= n):
            raise StreamFormatError(f"{source}:{lineno}: endpoint outside [1, {n}]")
        if u == v:
            raise StreamFormatError(f"{source}:{lineno}: self-loop on node {u}")
        blocks[-1][3].append((u - 1, v - 1))
    if not blocks:
        raise StreamFormatError(f"{source}: no snapshots")
    n0, d0 = blocks[0][1], blocks[0][2]
    seen: dict[int, int] = {}
    for t, n, d, _, lineno in blocks:
        if n != n0:
            raise StreamFormatError(
                f"{source}:{lineno}: inconsistent node counts ({n} here, {n0} in the first snapshot)"
            )
        if d != d0:
            raise StreamFormatError(f"{source}:{lineno}: mixed directed and undirected snapshots")
        if t in seen:
            raise StreamFormatError(
                f"{source}:{lineno}: duplicate timestamp t={t} (first at line {seen[t]})"
            )
        seen[t] = lineno
    snaps = [
        GraphSnapshot(n, np.array(edges, dtype=np.int64).reshape(-1, 2), d, t)
        for t, n, d, edges, _ in blocks
    ]
    return sorted(snaps, key=lambda s: s.timestamp)


def load_stream(path: str | os.PathLike) -> list[GraphSnapshot]:
    with open(path, encoding="utf-8") as fh:
        return parse_stream(fh, str(path))


def dump_stream(stream: Sequence[GraphSnapshot]) -> str:
    out = []
    for g in stream:
        out.append(f"# t={g.timestamp} n={g.n_nodes} directed={int(g.directed)}\n")
        out.extend(f"{u + 1} {v + 1}\n" for u, v in g.edges.tolist())
    return "".join(out)


def save_stream(stream: Sequence[GraphSnapshot], path: str | os.PathLike) -> None:
    if not stream:
        raise ValueError("no snapshots to save")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_stream(stream))
