from __future__ import annotations

import json
from pathlib import Path

import pytest

from graphjac.cli import main


def test_validate_theta_ok(data_dir, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["validate", "--input", str(data_dir / "theta.json"), "--require-gr0", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["ok"] is True
    assert all({"check", "status", "worst_margin", "location"} <= set(c) for c in payload["checks"])


def test_validate_dumbbell_gr0_fails(data_dir, tmp_path):
    code = main(["validate", "--input", str(data_dir / "dumbbell.json"), "--require-gr0"])
    assert code != 0


def test_cocycle_export(data_dir, tmp_path):
    csv = tmp_path / "omega.csv"
    code = main(["cocycle", "--input", str(data_dir / "theta.json"), "--out-csv", str(csv)])
    assert code == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "half_edge_id,coord_1,coord_2"
    assert len(lines) == 7


def test_embed_exports(data_dir, tmp_path):
    svg = tmp_path / "immersion.svg"
    csv = tmp_path / "immersion.csv"
    code = main(
        ["embed", "--input", str(data_dir / "rose2.json"), "--out-svg", str(svg), "--out-csv", str(csv)]
    )
    assert code == 0
    assert svg.read_text().startswith("<svg")
    assert "vertex" in csv.read_text()


def test_cut_decomposition(data_dir, tmp_path):
    out = tmp_path / "cut.json"
    code = main(["cut", "--input", str(data_dir / "theta.json"), "--out-json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["trees"]) == 2
    assert len(doc["glue_pairs"]) == 3


def test_thicken_rose2(data_dir, tmp_path):
    svg = tmp_path / "region.svg"
    out = tmp_path / "report.json"
    code = main(
        [
            "thicken",
            "--input",
            str(data_dir / "rose2.json"),
            "--grid-h",
            "0.1",
            "--out-svg",
            str(svg),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    euler = [c for c in payload["checks"] if c["check"] == "euler_characteristic"]
    assert euler[0]["worst_margin"] == -1.0
    assert svg.read_text().startswith("<svg")


def test_verify_theta_green_and_deterministic(data_dir, tmp_path):
    out1 = tmp_path / "verify1.json"
    out2 = tmp_path / "verify2.json"
    args = ["verify", "--input", str(data_dir / "theta.json"), "--samples", "5000", "--seed", "42"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_family_sweep(data_dir, tmp_path):
    out = tmp_path / "family.json"
    code = main(
        ["family", "--input", str(data_dir / "theta_rose_family.json"), "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text())["ok"] is True
