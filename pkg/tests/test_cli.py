from __future__ import annotations

import random
import subprocess
import sys
from pathlib import Path

import pytest

from graphmine.cli import RunConfig, main, parse_args
from graphmine.embedding import EDGE_INDUCED
from graphmine.graph import format_graph
from oracles import BICOLOR_TEXT, random_graph


@pytest.fixture
def bicolor_file(tmp_path: Path) -> Path:
    path = tmp_path / "bicolor.graph"
    path.write_text(BICOLOR_TEXT)
    return path


def test_parse_fsm():
    cfg = parse_args(["fsm", "--input", "g.graph", "--support", "300", "--out", "out/"])
    assert cfg.app == "fsm" and cfg.support == 300 and cfg.out == Path("out/")
    assert cfg.application().mode is EDGE_INDUCED


def test_parse_motifs_defaults():
    cfg = parse_args(["motifs", "--input", "g.graph", "--max-size", "4"])
    assert cfg.max_size == 4 and cfg.storage == "odag" and cfg.block_size == 1024
    assert parse_args(["cliques", "--input", "g"]).application().max_size == 5


@pytest.mark.parametrize(
    "argv",
    [
        ["motifs", "--input", "g", "--support", "5"],
        ["fsm", "--input", "g"],
        ["fsm", "--input", "g", "--support", "0"],
        ["motifs", "--input", "g", "--max-size", "0"],
        ["motifs", "--input", "g", "--bogus"],
        ["cliques", "--input", "g", "--mode", "edge"],
        ["motifs"],
        ["motifs", "--input", "g", "--storage", "tape"],
    ],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        parse_args(argv)
    assert info.value.code != 0
    assert main(argv) != 0


def test_run_config_validates():
    with pytest.raises(ValueError):
        RunConfig(app="motifs", input=Path("g"), out=Path("o"), support=3)


def test_workers_env_fallback(monkeypatch):
    monkeypatch.setenv("MINE_WORKERS", "3")
    assert parse_args(["motifs", "--input", "g"]).workers == 3
    assert parse_args(["motifs", "--input", "g", "--workers", "2"]).workers == 2


def test_cliques_bicolor(bicolor_file, tmp_path):
    out = tmp_path / "out"
    assert main(["cliques", "--input", str(bicolor_file), "--out", str(out)]) == 0
    lines = (out / "output.txt").read_text().splitlines()
    assert [ln for ln in lines if len(ln.split()) == 3] == ["0 1 2"]
    assert len(lines) == 9
    assert (out / "summary.txt").exists()


def test_motifs_summary_reports_two_patterns(tmp_path):
    g = tmp_path / "g.graph"
    # triangle 0-1-2 with a pendant 3 gives both size-3 shapes
    g.write_text("0 0 1 2\n1 0 2\n2 0 3\n3 0\n")
    out = tmp_path / "out"
    assert main(["motifs", "--input", str(g), "--out", str(out), "--max-size", "3"]) == 0
    rows = (out / "summary.txt").read_text().split("\n\n", 1)[1].splitlines()
    header = rows[0].split("\t")
    step3 = dict(zip(header, rows[3].split("\t")))
    assert step3["step"] == "3" and step3["canonical_patterns"] == "2"
    aggs = (out / "aggregates.txt").read_text().splitlines()
    assert "k=3; labels=0,0,0; edges=(0,1,0)(0,2,0)(1,2,0)\t1" in aggs


def test_fsm_writes_supports(bicolor_file, tmp_path):
    out = tmp_path / "out"
    assert main(["fsm", "--input", str(bicolor_file), "--out", str(out), "--support", "2"]) == 0
    supports = (out / "supports.txt").read_text().splitlines()
    assert "k=2; labels=0,1; edges=(0,1,0)\t2" in supports


def test_missing_input_fails(tmp_path, capsys):
    assert main(["motifs", "--input", str(tmp_path / "nope"), "--out", str(tmp_path)]) != 0
    assert "nope" in capsys.readouterr().err


def test_malformed_input_fails(tmp_path, capsys):
    bad = tmp_path / "bad.graph"
    bad.write_text("0 0 7\n")
    assert main(["cliques", "--input", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "line 1" in capsys.readouterr().err


def test_outputs_identical_across_workers(tmp_path):
    g = tmp_path / "g.graph"
    g.write_text(format_graph(random_graph(random.Random(8), 18, 0.25, labels=2)))
    texts = []
    for workers in ("1", "2", "4"):
        out = tmp_path / f"w{workers}"
        assert main(["fsm", "--input", str(g), "--out", str(out), "--support", "2",
                     "--max-size", "3", "--workers", workers, "--block-size", "8"]) == 0
        texts.append(tuple((out / name).read_bytes()
                           for name in ("output.txt", "aggregates.txt", "supports.txt")))
    assert texts[0] == texts[1] == texts[2]


def test_console_entry_point(bicolor_file, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "graphmine.cli", "cliques", "--input", str(bicolor_file),
         "--out", str(tmp_path / "o"), "--max-size", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "output.txt").read_text().splitlines()[-1] == "2 3"
