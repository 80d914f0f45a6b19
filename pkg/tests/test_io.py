import numpy as np
import pytest

from sbmchange.graphs import GraphSnapshot
from sbmchange.io import StreamFormatError, dump_stream, load_stream, parse_stream, save_stream
from sbmchange.streams import gen_abrupt


def test_three_snapshots(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("# t=2 n=4 directed=0\n1 2\n3 4\n# t=1 n=4 directed=0\n\n# t=3 n=4 directed=0\n2 4\n")
    snaps = load_stream(p)
    assert [g.timestamp for g in snaps] == [1, 2, 3]
    assert all(g.n_nodes == 4 for g in snaps)
    assert snaps[1].edges.tolist() == [[0, 1], [2, 3]]
    assert snaps[0].edges.shape == (0, 2)


def test_empty_file(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("")
    with pytest.raises(StreamFormatError, match="no snapshots"):
        load_stream(p)


@pytest.mark.parametrize(
    "text, match",
    [
        ("1 2\n", "line 1|:1:"),
        ("# t=1 n=4 directed=0\n1 2 3\n", ":2:"),
        ("# t=1 n=4 directed=0\n1 x\n", ":2:"),
        ("# t=1 n=4 directed=0\n1 5\n", ":2: endpoint"),
        ("# t=1 n=4 directed=0\n0 1\n", ":2: endpoint"),
        ("# t=1 n=4 directed=0\n2 2\n", "self-loop"),
        ("# t=1 n=4\n", "malformed header"),
        ("# t=1 n=4 directed=0\n# t=2 n=5 directed=0\n", ":2: inconsistent node counts"),
        ("# t=1 n=4 directed=0\n# t=2 n=4 directed=1\n", "mixed"),
        ("# t=1 n=4 directed=0\n1 2\n# t=1 n=4 directed=0\n", ":3: duplicate timestamp"),
    ],
)
def test_format_errors(text, match):
    with pytest.raises(StreamFormatError, match=match):
        parse_stream(text.splitlines(keepends=True), "f")


def test_directed_round_trip():
    g = GraphSnapshot(3, np.array([[0, 1], [1, 0], [2, 0]]), True, 7)
    (back,) = parse_stream(dump_stream([g]).splitlines())
    assert back.directed and back.timestamp == 7
    assert np.array_equal(back.adjacency, g.adjacency)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generated_round_trip(tmp_path, seed):
    stream, _ = gen_abrupt(n_nodes=30, seed=seed)
    p = tmp_path / "a.txt"
    save_stream(stream, p)
    back = load_stream(p)
    assert len(back) == len(stream)
    for a, b in zip(stream, back):
        assert (a.timestamp, a.n_nodes, a.directed) == (b.timestamp, b.n_nodes, b.directed)
        assert np.array_equal(a.adjacency, b.adjacency)
    assert dump_stream(back) == p.read_text()


def test_save_empty_rejected(tmp_path):
    with pytest.raises(ValueError):
        save_stream([], tmp_path / "x.txt")
