"""On-disk formats, reproducibility, SVG export, and the CLI contract."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from nnlab.cli import main
from nnlab.lattice import Box, Torus
from nnlab.nngraph import OutMap, build_nn_directed, undirected_components
from nnlab.rng import SeededRng
from nnlab.generators import GeneratorSpec, gen_zerner_merkl
from nnlab.serialize import (
    file_sha256,
    read_outmap_jsonl,
    read_weights_csv,
    write_outmap_jsonl,
    write_weights_csv,
)
from nnlab.svgexport import render_outmap_svg, render_regions_svg
from nnlab.weights import sample_iid_uniform

from conftest import vertex_priority_digraph


def test_outmap_jsonl_roundtrip(tmp_path):
    g = vertex_priority_digraph(Torus((5, 4)), 3)
    path = tmp_path / "g.jsonl"
    write_outmap_jsonl(g, path)
    assert read_outmap_jsonl(path) == g


def test_weights_csv_bit_exact(tmp_path):
    dom = Torus((6, 5))
    w = sample_iid_uniform(dom, SeededRng(11))
    path = tmp_path / "w.csv"
    write_weights_csv(w, path)
    w2 = read_weights_csv(path)
    assert w2 == w  # hex floats reload exactly


def test_svg_deterministic():
    g = gen_zerner_merkl(8, SeededRng(2))
    assert render_outmap_svg(g) == render_outmap_svg(g)
    assert render_outmap_svg(g).startswith("<svg")


def test_svg_regions():
    from nnlab.topology import classify_regions

    g = gen_zerner_merkl(8, SeededRng(2))
    rc = classify_regions(undirected_components(g), g.dom)
    svg = render_regions_svg(rc)
    assert "hatch" in svg and svg.startswith("<svg")


def test_cli_generate_and_determinism(tmp_path):
    runner = CliRunner()
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    for out in (out1, out2):
        res = runner.invoke(
            main, ["generate", "--model", "zerner_merkl", "--torus", "16x16",
                   "--seed", "7", "--out", str(out)]
        )
        assert res.exit_code == 0, res.output
    assert file_sha256(out1 / "graph.jsonl") == file_sha256(out2 / "graph.jsonl")
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 7
    assert "spec_hash" in manifest


def test_cli_generate_iid_with_weights(tmp_path):
    runner = CliRunner()
    out = tmp_path / "iid"
    res = runner.invoke(
        main, ["generate", "--model", "iid", "--torus", "12x12", "--seed", "1",
               "--out", str(out)]
    )
    assert res.exit_code == 0, res.output
    assert (out / "weights.csv").exists()
    w = read_weights_csv(out / "weights.csv")
    g = read_outmap_jsonl(out / "graph.jsonl")
    assert build_nn_directed(w) == g


def test_cli_verify_pass_and_corruption(tmp_path):
    runner = CliRunner()
    out = tmp_path / "run"
    res = runner.invoke(
        main, ["generate", "--model", "iid", "--torus", "10x10", "--seed", "3",
               "--out", str(out)]
    )
    assert res.exit_code == 0
    res = runner.invoke(main, ["verify", "--in", str(out)])
    assert res.exit_code == 0, res.output

    # corrupt: rewire four vertices into a directed unit square (length-4 cycle)
    g = read_outmap_jsonl(out / "graph.jsonl")
    g.set_out((0, 0), (1, 0))
    g.set_out((1, 0), (1, 1))
    g.set_out((1, 1), (0, 1))
    g.set_out((0, 1), (0, 0))
    write_outmap_jsonl(g, out / "graph.jsonl")
    (out / "weights.csv").unlink()
    res = runner.invoke(main, ["verify", "--in", str(out)])
    assert res.exit_code == 1
    assert "long_cycles" in res.output
    report, _ = json.JSONDecoder().raw_decode(res.output[res.output.index("{"):])
    assert report["suites"]["preconditions"]["long_cycles"]


def test_cli_roundtrip_generators():
    runner = CliRunner()
    res = runner.invoke(main, ["roundtrip", "--model", "dyadic", "--box", "10x10", "--seed", "5"])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["ok"] is True


def test_cli_census_empty_seed_list(tmp_path):
    runner = CliRunner()
    out = tmp_path / "c"
    res = runner.invoke(
        main, ["census", "--model", "zerner_merkl", "--torus", "8x8",
               "--seeds", "", "--out", str(out)]
    )
    assert res.exit_code == 0, res.output
    assert (out / "census.jsonl").read_text() == ""
    assert json.loads((out / "aggregate.json").read_text()) == {"seeds": 0}


def test_cli_census_modal(tmp_path):
    runner = CliRunner()
    out = tmp_path / "c"
    res = runner.invoke(
        main, ["census", "--model", "zerner_merkl", "--torus", "16x16",
               "--seeds", "0..4", "--out", str(out)]
    )
    assert res.exit_code == 0, res.output
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["modal_count"] == 2 and agg["seeds"] == 5
    lines = (out / "census.jsonl").read_text().strip().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert rec["seed"] == 0 and "runtime_s" in rec


def test_cli_exit_codes():
    runner = CliRunner()
    res = runner.invoke(main, ["generate", "--model", "nosuch", "--torus", "8x8",
                               "--seed", "1", "--out", "/tmp/x"])
    assert res.exit_code == 2
    res = runner.invoke(main, ["generate", "--model", "zerner_merkl", "--torus", "15x15",
                               "--seed", "1", "--out", "/tmp/x"])
    assert res.exit_code == 2  # odd side


def test_cli_spec_file_with_flag_override(tmp_path):
    spec = GeneratorSpec("zerner_merkl", L=16)
    f = tmp_path / "zm.json"
    f.write_text(spec.to_json())
    runner = CliRunner()
    out = tmp_path / "r"
    res = runner.invoke(
        main, ["generate", "--spec", str(f), "--torus", "32x32", "--seed", "2",
               "--out", str(out)]
    )
    assert res.exit_code == 0, res.output
    g = read_outmap_jsonl(out / "graph.jsonl")
    assert g.dom == Torus((32, 32))  # flag overrode the file's L=16


def test_cli_export_svg(tmp_path):
    runner = CliRunner()
    out = tmp_path / "run"
    runner.invoke(main, ["generate", "--model", "zerner_merkl", "--torus", "12x12",
                         "--seed", "2", "--out", str(out)])
    res = runner.invoke(main, ["export", "--in", str(out), "--out", str(tmp_path / "g.svg")])
    assert res.exit_code == 0, res.output
    text = (tmp_path / "g.svg").read_text()
    assert text.startswith("<svg")
    res = runner.invoke(main, ["export", "--in", str(out), "--out",
                               str(tmp_path / "r.svg"), "--classify"])
    assert res.exit_code == 0, res.output


def test_cli_export_dyadic_window(tmp_path):
    runner = CliRunner()
    out = tmp_path / "dy"
    spec = GeneratorSpec("dyadic", window=Box((0, 0), (7, 7)), n=3, Z=[1, 1])
    (tmp_path / "dy.json").write_text(spec.to_json())
    res = runner.invoke(main, ["generate", "--spec", str(tmp_path / "dy.json"),
                               "--seed", "1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["export", "--in", str(out), "--out", str(tmp_path / "d.svg")])
    assert res.exit_code == 0
    svg = (tmp_path / "d.svg").read_text()
    assert svg.count("<line") == read_outmap_jsonl(out / "graph.jsonl").n_edges
    res = runner.invoke(main, ["export", "--in", str(out), "--format", "csv",
                               "--out", str(tmp_path / "d.csv")])
    assert res.exit_code == 0
    assert (tmp_path / "d.csv").read_text().startswith("from,to")


def test_cli_census_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("NN_LAB_THREADS", "2")
    runner = CliRunner()
    out = tmp_path / "c"
    res = runner.invoke(
        main, ["census", "--model", "zerner_merkl", "--torus", "12x12",
               "--seeds", "0..3", "--out", str(out)]
    )
    assert res.exit_code == 0, res.output
    lines = (out / "census.jsonl").read_text().strip().splitlines()
    assert [json.loads(l)["seed"] for l in lines] == [0, 1, 2, 3]
