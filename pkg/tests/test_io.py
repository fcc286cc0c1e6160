import json

import numpy as np
import pytest

from neutralcopy import io as nio
from neutralcopy.community import girvan_newman
from neutralcopy.dynamics import run
from neutralcopy.graph import GeneratorParams, generate_planted_partition
from neutralcopy.rng import stream


def test_edge_list_round_trip(tmp_path):
    g, _ = generate_planted_partition(GeneratorParams(40, 0.2, 0.05, seed=2))
    path = tmp_path / "g.edges"
    nio.write_edge_list(path, g)
    lines = path.read_text().splitlines()
    assert len(lines) == g.m
    pairs = [tuple(map(int, ln.split(" "))) for ln in lines]
    assert pairs == sorted(pairs) and all(u < v for u, v in pairs)
    assert nio.read_edge_list(path, 40) == g


def test_edge_list_infers_n(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text("0 1\n2 5\n")
    assert nio.read_edge_list(path).n == 6


@pytest.mark.parametrize("text", ["0 1 2\n", "a b\n", "1 1\n"])
def test_edge_list_errors(tmp_path, text):
    path = tmp_path / "bad.edges"
    path.write_text(text)
    with pytest.raises(nio.FormatError):
        nio.read_edge_list(path)


def test_attribute_round_trip(tmp_path):
    path = tmp_path / "s.csv"
    nio.write_attributes(path, [0, 1, 1], [1, 0, 1])
    assert path.read_text().splitlines()[0] == "node,social_type,trait"
    types, traits = nio.read_attributes(path)
    assert types.tolist() == [0, 1, 1] and traits.tolist() == [1, 0, 1]
    nio.write_attributes(path, [0, 1])
    assert path.read_text() == "node,social_type\n0,0\n1,1\n"
    assert nio.read_attributes(path)[1] is None


@pytest.mark.parametrize("text", [
    "node,kind\n0,1\n",
    "node,social_type\n0,2\n",
    "node,social_type\n0,1\n2,0\n",
])
def test_attribute_errors(tmp_path, text):
    path = tmp_path / "a.csv"
    path.write_text(text)
    with pytest.raises(nio.FormatError):
        nio.read_attributes(path)


def test_partition_round_trip(tmp_path, two_cliques):
    _, part = girvan_newman(two_cliques)
    path = tmp_path / "p.csv"
    nio.write_partition(path, part)
    text = path.read_text().splitlines()
    assert text[0] == "node,community"
    assert text[1] == "0,0" and text[-1] == "9,1"
    assert nio.read_partition(path) == part


def test_trajectory_csv(tmp_path):
    g, types = generate_planted_partition(GeneratorParams(30, 0.3, 0.05, seed=1))
    rec = run(g, types, np.array([0, 1] * 15), "neutral", 300, 30, stream(1))
    path = tmp_path / "t.csv"
    nio.write_trajectory(path, [(3, rec)], {"hello": 1})
    first, header = path.read_text().splitlines()[:2]
    assert json.loads(first[2:]) == {"hello": 1}
    assert header == ",".join(nio.TRAJECTORY_HEADER)
    rows = nio.read_trajectory(path)
    assert [r["step"] for r in rows] == rec.steps.tolist()
    for r in rows:
        assert r["replicate"] == 3
        assert sum(sum(row) for row in r["table"]) == 30
        assert r["sweep"] == r["step"] / 30
    assert [r["chi2"] for r in rows] == rec.chi2.tolist()
