"""Command-line front end: generate, verify, census, export, roundtrip.

Exit codes are part of the contract: 0 success, 1 property failure, 2 bad
configuration, 3 I/O failure.  Every run writes a manifest from which it can
be reproduced byte for byte.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .errors import NNLabError, SpecError
from .generators import GeneratorSpec
from .lattice import Box, Torus
from .nngraph import build_nn_directed, undirected_components, verify_all_components
from .rng import SeededRng
from .serialize import (
    canonical_json,
    domain_to_dict,
    file_sha256,
    read_outmap_jsonl,
    read_weights_csv,
    write_manifest,
    write_outmap_jsonl,
    write_weights_csv,
)
from .stats import component_census, census_once
from .svgexport import render_outmap_svg, render_regions_svg, write_svg
from .weights import construct_weights, verify_theorem3_preconditions


class PropertyFailure(NNLabError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _exit_code(err: BaseException) -> int:
    if isinstance(err, PropertyFailure):
        return 1
    if isinstance(err, (OSError, IOError)):
        return 3
    return 2


def _run(fn):
    try:
        fn()
    except (NNLabError, OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(_exit_code(err))
    sys.exit(0)


def _parse_domain(torus: str | None, box: str | None):
    if torus and box:
        raise SpecError("give either --torus or --box, not both")
    if torus:
        sides = tuple(int(t) for t in torus.lower().split("x"))
        return Torus(sides)
    if box:
        # format: lo1,lo2,..:hi1,hi2,..  or  WxH[xD] for [0,W-1]x[0,H-1]...
        if ":" in box:
            lo, hi = box.split(":")
            return Box(tuple(int(t) for t in lo.split(",")), tuple(int(t) for t in hi.split(",")))
        sides = tuple(int(t) for t in box.lower().split("x"))
        return Box((0,) * len(sides), tuple(s - 1 for s in sides))
    return None


def _load_spec(spec_file, model, torus, box, seed_opts) -> GeneratorSpec:
    doc = {}
    if spec_file:
        doc = json.loads(Path(spec_file).read_text())
    if model:
        doc["variant"] = model
    dom = _parse_domain(torus, box)
    if dom is not None:
        if doc.get("variant") == "iid":
            doc["domain"] = domain_to_dict(dom)
        elif doc.get("variant") == "zerner_merkl":
            if not isinstance(dom, Torus) or dom.sides[0] != dom.sides[1]:
                raise SpecError("zerner_merkl takes a square torus")
            doc["L"] = dom.sides[0]
        else:
            doc["window"] = domain_to_dict(dom)
    for key, val in seed_opts.items():
        if val is not None:
            doc[key] = val
    if "variant" not in doc:
        raise SpecError("no model given: pass --spec FILE or --model NAME")
    return GeneratorSpec.from_dict(doc)


def _parse_seeds(seeds: str) -> list:
    if ".." in seeds:
        a, b = seeds.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in seeds.split(",") if s != ""]


@click.group()
def main():
    """Nearest-neighbor lattice graphs: build, verify, census, draw."""


@main.command()
@click.option("--spec", "spec_file", type=click.Path(exists=True), default=None)
@click.option("--model", default=None)
@click.option("--torus", default=None)
@click.option("--box", default=None)
@click.option("--k", type=int, default=None)
@click.option("--layers", type=int, default=None)
@click.option("--level", "n", type=int, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--out", "outdir", type=click.Path(), required=True)
@click.option("--construct-weights", "with_weights", is_flag=True, default=False,
              help="also realize generator output as a weight field")
def generate(spec_file, model, torus, box, k, layers, n, seed, outdir, with_weights):
    """Sample one realization and persist graph, weights, and manifest."""

    def body():
        spec = _load_spec(spec_file, model, torus, box, {"k": k, "layers": layers, "n": n})
        real = spec.build(seed)
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        graph_path = out / "graph.jsonl"
        write_outmap_jsonl(real.graph, graph_path)
        outputs = {"graph.jsonl": file_sha256(graph_path)}
        w = real.weights
        if w is None and with_weights:
            w = construct_weights(real.graph, rng=SeededRng(seed).child("realize"))
        if w is not None:
            wpath = out / "weights.csv"
            write_weights_csv(w, wpath)
            outputs["weights.csv"] = file_sha256(wpath)
        meta = {k2: v for k2, v in real.meta.items() if isinstance(v, (int, str, list, tuple))}
        write_manifest(out / "manifest.json", {"spec": spec.to_dict(), "seed": seed}, outputs,
                       extra={"meta": {k2: list(v) if isinstance(v, tuple) else v
                                       for k2, v in meta.items()}})
        click.echo(f"wrote {graph_path}")

    _run(body)


@main.command()
@click.option("--in", "indir", type=click.Path(exists=True), default=None,
              help="directory with a persisted run")
@click.option("--spec", "spec_file", type=click.Path(exists=True), default=None)
@click.option("--model", default=None)
@click.option("--torus", default=None)
@click.option("--box", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
def verify(indir, spec_file, model, torus, box, seed, report_path):
    """Run the structural property suites; exit 1 on any failure."""

    def body():
        g = None
        w = None
        if indir:
            g = read_outmap_jsonl(Path(indir) / "graph.jsonl")
            wpath = Path(indir) / "weights.csv"
            if wpath.exists():
                w = read_weights_csv(wpath)
        else:
            spec = _load_spec(spec_file, model, torus, box, {})
            if seed is None:
                raise SpecError("verify from a spec needs --seed")
            real = spec.build(seed)
            g, w = real.graph, real.weights

        report = {}
        pre = verify_theorem3_preconditions(g)
        report["preconditions"] = {
            "ok": pre.ok,
            "out_degree_violations": [list(v) for v in pre.out_degree_violations[:4]],
            "long_cycles": [[list(v) for v in c[:16]] for c in pre.long_cycles[:2]],
            "wrapping_cycles": len(pre.wrapping_cycles),
        }
        struct = verify_all_components(g, w)
        report["structure"] = {
            "ok": struct.ok,
            "components_checked": struct.components_checked,
            "components_passed": struct.components_passed,
            "long_cycle_free": struct.long_cycle_free,
            "monotone_ok": struct.monotone_ok,
        }
        if w is not None:
            h = build_nn_directed(w)
            go, ho = g.out_index, h.out_index
            has = go >= 0
            agree = bool(np.all(go[has] == ho[has]))
            report["roundtrip"] = {"ok": agree}
        ok = pre.ok and struct.ok and all(s.get("ok", True) for s in report.values())
        doc = json.dumps({"ok": ok, "suites": report}, indent=2, sort_keys=True)
        if report_path:
            Path(report_path).write_text(doc + "\n")
        click.echo(doc)
        if not ok:
            raise PropertyFailure("verification failed", report)

    _run(body)


@main.command()
@click.option("--spec", "spec_file", type=click.Path(exists=True), default=None)
@click.option("--model", default=None)
@click.option("--torus", default=None)
@click.option("--box", default=None)
@click.option("--k", type=int, default=None)
@click.option("--layers", type=int, default=None)
@click.option("--seeds", default="0..9", help="range A..B or comma list")
@click.option("--out", "outdir", type=click.Path(), required=True)
@click.option("--verify-structure", is_flag=True, default=False)
def census(spec_file, model, torus, box, k, layers, seeds, outdir, verify_structure):
    """Per-seed component censuses, JSON lines plus an aggregate summary."""

    def body():
        spec = _load_spec(spec_file, model, torus, box, {"k": k, "layers": layers})
        seed_list = _parse_seeds(seeds)
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        threads = int(os.environ.get("NN_LAB_THREADS", "1"))
        if threads > 1 and len(seed_list) > 1:
            from concurrent.futures import ProcessPoolExecutor

            spec_doc = spec.to_json()
            with ProcessPoolExecutor(max_workers=threads) as pool:
                recs = list(pool.map(_census_worker, [(spec_doc, s, verify_structure) for s in seed_list]))
        else:
            recs = component_census(spec, seed_list, verify_structure)
        with (out / "census.jsonl").open("w") as fh:
            for r in recs:
                fh.write(r.to_json() + "\n")
        agg = _aggregate(recs)
        (out / "aggregate.json").write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n")
        write_manifest(out / "manifest.json",
                       {"spec": spec.to_dict(), "seeds": seed_list},
                       {"census.jsonl": file_sha256(out / "census.jsonl")})
        click.echo(json.dumps(agg, sort_keys=True))

    _run(body)


def _census_worker(args):
    spec_doc, seed, verify_structure = args
    return census_once(GeneratorSpec.from_json(spec_doc), seed, verify_structure)


def _aggregate(recs) -> dict:
    if not recs:
        return {"seeds": 0}
    counts = [r.system_span_count for r in recs]
    vals, freq = np.unique(counts, return_counts=True)
    modal = int(vals[np.argmax(freq)])
    return {
        "seeds": len(recs),
        "system_span_counts": {int(v): int(c) for v, c in zip(vals, freq)},
        "modal_count": modal,
        "modal_fraction": float(freq.max() / len(recs)),
        "max_wrapping": max(r.wrapping_count for r in recs),
        "max_spanning": max(r.spanning_count for r in recs),
    }


@main.command()
@click.option("--in", "indir", type=click.Path(exists=True), required=True)
@click.option("--out", "outpath", type=click.Path(), required=True)
@click.option("--classify", is_flag=True, default=False,
              help="render the region classification instead of arrows")
@click.option("--format", "fmt", type=click.Choice(["svg", "csv"]), default="svg")
def export(indir, outpath, classify, fmt):
    """Render a persisted d=2 run as SVG, or dump the classification as CSV."""

    def body():
        g = read_outmap_jsonl(Path(indir) / "graph.jsonl")
        if classify:
            from .topology import classify_regions

            rc = classify_regions(undirected_components(g), g.dom)
            text = rc.to_csv() if fmt == "csv" else render_regions_svg(rc)
        elif fmt == "csv":
            lines = ["from,to"]
            for x, y in g.directed_edges():
                lines.append(
                    " ".join(str(c) for c in x) + "," + " ".join(str(c) for c in y)
                )
            text = "\n".join(lines) + "\n"
        else:
            text = render_outmap_svg(g)
        if fmt == "svg":
            write_svg(text, outpath)
        else:
            Path(outpath).write_text(text)
        click.echo(f"wrote {outpath}")

    _run(body)


@main.command()
@click.option("--spec", "spec_file", type=click.Path(exists=True), default=None)
@click.option("--model", default=None)
@click.option("--torus", default=None)
@click.option("--box", default=None)
@click.option("--k", type=int, default=None)
@click.option("--layers", type=int, default=None)
@click.option("--seed", type=int, required=True)
def roundtrip(spec_file, model, torus, box, k, layers, seed):
    """Realize a generated digraph as weights and demand the rebuilt graph
    match edge for edge."""

    def body():
        spec = _load_spec(spec_file, model, torus, box, {"k": k, "layers": layers})
        real = spec.build(seed)
        g = real.graph
        w = construct_weights(g, rng=SeededRng(seed).child("realize"))
        h = build_nn_directed(w)
        go, ho = g.out_index, h.out_index
        has = go >= 0
        agree = bool(np.all(go[has] == ho[has]))
        click.echo(json.dumps({"ok": agree, "edges": int(has.sum())}))
        if not agree:
            raise PropertyFailure("round trip mismatch")

    _run(body)


if __name__ == "__main__":
    main()
