"""Command-line entry point: ``sbmchange detect | generate | experiment``.

Settings come from flags, an optional ``--config`` file of ``key = value``
lines (keys are flag names without the leading dashes), and built-in
defaults, in that order of precedence.  ``SBMCHANGE_LOG_LEVEL`` sets the log
verbosity (e.g. ``DEBUG``).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from sbmchange import __version__
from sbmchange.detector import ChangeReport, DetectorConfig, run_hcdl
from sbmchange.evaluation import run_experiment
from sbmchange.io import StreamFormatError, load_stream, save_stream
from sbmchange.sbm import WINDOW_MODES
from sbmchange.streams import SCENARIOS

logger = logging.getLogger("sbmchange")

LOG_ENV = "SBMCHANGE_LOG_LEVEL"

REPORT_COLUMNS = (
    "t", "phi", "phi_xz", "phi_z", "delta_l", "eps", "eps_xz", "eps_z",
    "k_hat", "k_hat1", "k_hat2", "alarm_level3", "alarm_level2", "alarm_level1",
    "w_xz", "w_z",
)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    h: str = "2"
    delta: float = 0.05
    delta_xz: float = 0.05
    delta_z: float = 0.05
    kmax: int = 10
    restarts: int = 10
    seed: int = 0
    window_mode: str = "pooled"
    scenario: str = "abrupt"
    trials: int = 20
    nodes: int = 100

    def h_values(self) -> list[int]:
        try:
            vals = [int(x) for x in str(self.h).split(",") if x.strip()]
        except ValueError:
            raise ValueError(f"h must be an integer or a comma-separated list, got {self.h!r}")
        if not vals:
            raise ValueError("h is empty")
        return vals

    def detector(self, h: int | None = None) -> DetectorConfig:
        return DetectorConfig(
            h=self.h_values()[0] if h is None else h,
            delta=self.delta,
            delta_xz=self.delta_xz,
            delta_z=self.delta_z,
            k_max=self.kmax,
            restarts=self.restarts,
            seed=self.seed,
            window_mode=self.window_mode,
        )

    def validate(self) -> None:
        for h in self.h_values():
            self.detector(h)  # raises on invalid detector settings
        if self.command in ("detect",):
            if not self.input:
                raise ValueError("--input is required")
            if not Path(self.input).is_file():
                raise ValueError(f"input file not found: {self.input}")
            if len(self.h_values()) != 1:
                raise ValueError("detect takes a single --h value")
        if not self.output:
            raise ValueError("--output is required")
        parent = Path(self.output).resolve().parent
        if not parent.is_dir():
            raise ValueError(f"output directory does not exist: {parent}")
        if self.command in ("generate", "experiment") and self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        if self.trials < 1:
            raise ValueError("--trials must be >= 1")
        if self.nodes < 20:
            raise ValueError("--nodes must be >= 20")


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"float": float, "int": int, "str": str, "str | None": str}


def _read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read(), source=path)
    out = {}
    for key, raw in parser.items("run"):
        name = key.replace("-", "_")
        if name not in _TYPES or name == "command":
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[name] = _CASTS[_TYPES[name]](raw.strip())
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--output", help="output path")
    common.add_argument("--h", dest="h", help="window half-width (experiment: comma list)")
    common.add_argument("--delta", type=float, help="level-3 confidence parameter")
    common.add_argument("--delta-xz", dest="delta_xz", type=float, help="level-1 confidence parameter")
    common.add_argument("--delta-z", dest="delta_z", type=float, help="level-2 confidence parameter")
    common.add_argument("--kmax", type=int, help="largest block count considered")
    common.add_argument("--restarts", type=int, help="random restarts per fit")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--window-mode", dest="window_mode", choices=WINDOW_MODES)
    common.add_argument("--scenario", choices=sorted(SCENARIOS))
    common.add_argument("--trials", type=int, help="experiment repetitions")
    common.add_argument("--nodes", type=int, help="nodes per generated snapshot")

    parser = argparse.ArgumentParser(prog="sbmchange", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    det = sub.add_parser("detect", parents=[common], help="run change detection on a stream file")
    det.add_argument("--input", help="stream file")
    sub.add_parser("generate", parents=[common], help="write a synthetic stream and its ground truth")
    sub.add_parser("experiment", parents=[common], help="benefit / FAR tables over repeated trials")
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    values = _read_config_file(ns.config) if ns.config else {}
    for name in _TYPES:
        v = getattr(ns, name, None)
        if v is not None:
            values[name] = v
    values["command"] = ns.command
    return RunConfig(**values)


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def reports_to_csv(reports: Sequence[ChangeReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        rec = r.as_record()
        w.writerow([_num(rec[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def sidecar_path(output: str) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".json")


def _write(path: Path | str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def detect_command(cfg: RunConfig) -> int:
    stream = load_stream(cfg.input)
    det = cfg.detector()
    if len(stream) < 2 * det.h:
        raise ValueError(
            f"stream has {len(stream)} snapshots; at least 2h = {2 * det.h} are needed"
        )
    reports = run_hcdl(stream, det)
    _write(cfg.output, reports_to_csv(reports))
    summary = {
        "version": __version__,
        "input": os.path.basename(cfg.input),
        "n_snapshots": len(stream),
        "n_nodes": stream[0].n_nodes,
        "n_reports": len(reports),
        "config": {f.name: getattr(det, f.name) for f in fields(det)},
        "alarms": [
            {"t": r.t, "level": lvl, "w_xz": r.w_xz, "w_z": r.w_z}
            for r in reports
            for lvl in r.alarm_levels()
        ],
    }
    _write(sidecar_path(cfg.output), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    logger.info("%d reports, %d alarms -> %s", len(reports), len(summary["alarms"]), cfg.output)
    return 0


def generate_command(cfg: RunConfig) -> int:
    stream, scenario = SCENARIOS[cfg.scenario](n_nodes=cfg.nodes, seed=cfg.seed)
    save_stream(stream, cfg.output)
    truth = scenario.annotation_dict()
    _write(sidecar_path(cfg.output), json.dumps(truth, indent=2, sort_keys=True) + "\n")
    logger.info("wrote %d snapshots -> %s", len(stream), cfg.output)
    return 0


def experiment_command(cfg: RunConfig) -> int:
    result = run_experiment(
        cfg.scenario,
        cfg.trials,
        cfg.h_values(),
        cfg.detector(),
        n_nodes=cfg.nodes,
        progress=logger.info,
    )
    _write(cfg.output, result.to_csv())
    _write(sidecar_path(cfg.output), result.to_json() + "\n")
    return 0


_COMMANDS = {
    "detect": detect_command,
    "generate": generate_command,
    "experiment": experiment_command,
}


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        cfg.validate()
        return _COMMANDS[cfg.command](cfg)
    except (ValueError, StreamFormatError, OSError) as exc:
        print(f"sbmchange: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
