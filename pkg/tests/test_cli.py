import csv
import json
import subprocess
import sys

import pytest

from sbmchange.cli import REPORT_COLUMNS, main, parse_config, sidecar_path
from sbmchange.io import load_stream, save_stream
from sbmchange.streams import gen_abrupt

from conftest import random_snapshot


def _gen(tmp_path, scenario="abrupt", seed=1, nodes=20, name="s.txt"):
    out = tmp_path / name
    assert main(["generate", "--scenario", scenario, "--seed", str(seed),
                 "--nodes", str(nodes), "--output", str(out)]) == 0
    return out


def test_generate_abrupt(tmp_path):
    out = _gen(tmp_path)
    assert len(load_stream(out)) == 80
    truth = json.loads(sidecar_path(str(out)).read_text())
    assert {c["start"]: c["level"] for c in truth["changes"]} == {20: 1, 40: 2, 60: 3}


def test_generate_gradual(tmp_path):
    out = _gen(tmp_path, "gradual")
    assert len(load_stream(out)) == 90
    truth = json.loads(sidecar_path(str(out)).read_text())
    spans = {(c["start"], c["stop"]): c["level"] for c in truth["changes"]}
    assert spans == {(10, 15): 1, (35, 40): 2, (60, 70): 3}


def test_generate_seeds_differ(tmp_path):
    a, b = _gen(tmp_path, seed=1, name="a.txt"), _gen(tmp_path, seed=2, name="b.txt")
    assert a.read_text() != b.read_text()
    ta = json.loads(sidecar_path(str(a)).read_text())["changes"]
    tb = json.loads(sidecar_path(str(b)).read_text())["changes"]
    assert ta == tb


def test_generate_invalid_scenario(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--scenario", "nope", "--output", str(tmp_path / "x")])
    assert exc.value.code != 0


def _short_stream(tmp_path, rng, length):
    p = tmp_path / "short.txt"
    save_stream([random_snapshot(rng, 8, 0.3, timestamp=t) for t in range(1, length + 1)], p)
    return p


def test_detect_writes_reports_and_is_deterministic(tmp_path, rng):
    src = _short_stream(tmp_path, rng, 6)
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["detect", "--input", str(src), "--output", str(out), "--h", "2",
                     "--kmax", "3", "--restarts", "2", "--seed", "4"]) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    rows = list(csv.DictReader(outs[0].open()))
    assert tuple(rows[0]) == REPORT_COLUMNS
    assert [int(r["t"]) for r in rows] == [3, 4, 5]
    side = json.loads(sidecar_path(str(outs[0])).read_text())
    assert side["n_reports"] == 3 and side["config"]["k_max"] == 3
    assert sidecar_path(str(outs[0])).read_bytes() != b""
    # the sidecar does not embed the output path, so reruns match byte for byte
    assert sidecar_path(str(outs[0])).read_bytes() == sidecar_path(str(outs[1])).read_bytes()


def test_detect_short_stream(tmp_path, rng, capsys):
    src = _short_stream(tmp_path, rng, 3)
    code = main(["detect", "--input", str(src), "--output", str(tmp_path / "o.csv"), "--h", "2"])
    assert code != 0
    assert "2h = 4" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args, msg",
    [
        (["--input", "missing.txt"], "not found"),
        (["--delta", "1.5"], "delta"),
        (["--h", "0"], "h"),
        (["--h", "2,3"], "single"),
    ],
)
def test_detect_validation(tmp_path, rng, capsys, args, msg):
    src = _short_stream(tmp_path, rng, 6)
    base = ["detect", "--input", str(src), "--output", str(tmp_path / "o.csv")]
    assert main(base + args) == 2
    err = capsys.readouterr().err
    assert err.startswith("sbmchange: error:") and msg in err
    assert not (tmp_path / "o.csv").exists()


def test_output_dir_must_exist(tmp_path, capsys):
    assert main(["generate", "--output", str(tmp_path / "no" / "x.txt")]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_malformed_stream_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("# t=1 n=4 directed=0\n1 9\n")
    assert main(["detect", "--input", str(p), "--output", str(tmp_path / "o.csv")]) == 2
    assert ":2:" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("h = 3\ndelta = 0.1\nkmax = 4\nwindow-mode = per-snapshot\n")
    cfg = parse_config(["detect", "--config", str(conf), "--kmax", "6", "--input", "x"])
    assert cfg.h_values() == [3] and cfg.delta == 0.1
    assert cfg.kmax == 6 and cfg.window_mode == "per-snapshot"
    det = cfg.detector()
    assert (det.h, det.k_max, det.delta_xz) == (3, 6, 0.05)


def test_config_file_unknown_key(tmp_path, capsys):
    conf = tmp_path / "run.cfg"
    conf.write_text("colour = red\n")
    assert main(["generate", "--config", str(conf), "--output", str(tmp_path / "x")]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_experiment_h_list():
    cfg = parse_config(["experiment", "--h", "2,3"])
    assert cfg.h_values() == [2, 3]


def test_console_entry_point(tmp_path):
    out = tmp_path / "g.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "sbmchange.cli", "generate", "--nodes", "20", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()


@pytest.mark.slow
def test_detect_abrupt_level3_alarm_near_60(tmp_path):
    stream, _ = gen_abrupt(n_nodes=100, seed=1)
    src = tmp_path / "abrupt.txt"
    save_stream(stream, src)
    out = tmp_path / "r.csv"
    assert main(["detect", "--input", str(src), "--output", str(out), "--h", "2", "--seed", "1"]) == 0
    rows = list(csv.DictReader(out.open()))
    hits = [int(r["t"]) for r in rows if r["alarm_level3"] == "1"]
    assert any(57 <= t <= 63 for t in hits), hits
