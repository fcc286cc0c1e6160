import json
import subprocess
import sys

from neutralcopy import io as nio
from neutralcopy.cli import main

SMALL = ["--nodes", "30", "--p-within", "0.3", "--p-between", "0.05"]


def test_help_lists_flags(capsys):
    assert main(["simulate", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--seed", "--output", "--format", "--bias", "--budget", "--record-every", "--graph", "-v"):
        assert flag in out


def test_usage_errors_exit_one(tmp_path):
    assert main([]) == 1
    assert main(["nonsense"]) == 1
    assert main(["generate", "--nodes", "1", "--output", str(tmp_path / "g")]) == 1
    assert main(["generate", "--seed", "-4", "--output", str(tmp_path / "g")]) == 1
    assert main(["simulate", *SMALL, "--bias", "1", "0", "1", "1", "--output", str(tmp_path / "t")]) == 1


def test_bad_input_exits_two(tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 0\n")
    assert main(["communities", "--graph", str(bad)]) == 2
    assert main(["communities", "--graph", str(tmp_path / "missing.edges")]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["fig1", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 2


def test_connectivity_failure_exits_two(tmp_path):
    args = ["generate", "--nodes", "20", "--p-within", "0.01", "--p-between", "0.0",
            "--max-attempts", "3", "--output", str(tmp_path / "g")]
    assert main(args) == 2


def test_generate_then_downstream(tmp_path, capsys):
    prefix = str(tmp_path / "g")
    assert main(["generate", *SMALL, "--seed", "3", "--output", prefix]) == 0
    g = nio.read_edge_list(prefix + ".edges")
    types, traits = nio.read_attributes(prefix + ".types.csv")
    assert traits is None and len(types) == 30 and g.n <= 30

    traj = tmp_path / "traj.csv"
    final = tmp_path / "final.csv"
    assert main(["simulate", "--graph", prefix + ".edges", "--attrs", prefix + ".types.csv",
                 "--seed", "5", "--output", str(traj), "--final-state", str(final)]) == 0
    rows = nio.read_trajectory(traj)
    assert rows[0]["step"] == 0
    assert all(sum(sum(r) for r in row["table"]) == 30 for row in rows)
    assert nio.read_attributes(final)[1] is not None

    part = tmp_path / "part.csv"
    assert main(["communities", "--graph", prefix + ".edges", "--attrs", prefix + ".types.csv",
                 "--output", str(part)]) == 0
    assert nio.read_partition(part).n == 30

    report = tmp_path / "report.json"
    assert main(["test", "--graph", prefix + ".edges", "--attrs", str(final), "--partition", str(part),
                 "--permutations", "99", "--seed", "1", "--output", str(report)]) == 0
    doc = json.loads(report.read_text())
    assert {"statistic", "df", "p_asymptotic", "p_permutation", "permutations", "seed",
            "per_community"} <= set(doc)
    assert doc["permutations"] == 99
    for c in doc["per_community"]:
        assert {"community_id", "size", "table", "statistic", "df"} <= set(c)
    capsys.readouterr()


def test_test_requires_trait_column(tmp_path):
    prefix = str(tmp_path / "g")
    assert main(["generate", *SMALL, "--output", prefix]) == 0
    assert main(["test", "--graph", prefix + ".edges", "--attrs", prefix + ".types.csv",
                 "--output", str(tmp_path / "r")]) == 2


def test_generate_json(tmp_path):
    prefix = str(tmp_path / "g")
    assert main(["generate", *SMALL, "--format", "json", "--output", prefix]) == 0
    doc = json.loads((tmp_path / "g.json").read_text())
    assert doc["n"] == 30 and len(doc["social_types"]) == 30
    assert doc["metadata"]["generator"]["p_within"] == 0.3


def _fig1(out, *extra):
    return main(["fig1", *SMALL, "--flat-p", "0.2", "--replicates", "4", "--seed", "7",
                 "--output", str(out), *extra])


def test_fig1_outputs_are_byte_identical(tmp_path):
    assert _fig1(tmp_path / "a") == 0
    assert _fig1(tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["fig1_replicates.csv", "fig1_summary.csv", "fig1_trace_assortative.csv",
                     "fig1_trace_flat.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fig1_json_and_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generator": {"n": 30, "p_within": 0.3, "p_between": 0.05},
                               "replicates": 9, "flat_p": 0.2, "budget": 300}))
    assert main(["fig1", "--config", str(cfg), "--replicates", "3", "--format", "json",
                 "--output", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "fig1.json").read_text())
    assert doc["metadata"]["config"]["replicates"] == 3
    assert doc["metadata"]["config"]["budget"] == 300
    assert len(doc["arms"]["assortative"]["replicates"]) == 3


def test_config_unknown_field_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"replicate": 3}))
    assert main(["fig1", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 1


def test_ci_contrast_outputs(tmp_path):
    out = tmp_path / "ci"
    assert main(["ci-contrast", *SMALL, "--replicates", "3", "--permutations", "49", "--bias",
                 "1", "0.2", "0.2", "1", "--output", str(out)]) == 0
    lines = (out / "ci_contrast_reports.jsonl").read_text().splitlines()
    assert len(lines) == 3
    assert (out / "ci_contrast_summary.csv").read_text().startswith("# {")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "neutralcopy", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "0.1.0" in proc.stdout
