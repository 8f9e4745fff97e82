"""Deterministic on-disk formats: graphs as JSON lines, weights as hex-float
CSV (bit-exact reload), manifests with config hashes."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import SpecError
from .lattice import Box, Torus
from .nngraph import OutMap
from .weights import WeightField


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def domain_to_dict(dom) -> dict:
    if isinstance(dom, Box):
        return {"kind": "box", "lo": list(dom.lo), "hi": list(dom.hi)}
    if isinstance(dom, Torus):
        return {"kind": "torus", "sides": list(dom.sides)}
    raise SpecError(f"unknown domain {dom!r}")


def domain_from_dict(doc: dict):
    if doc.get("kind") == "box":
        return Box(tuple(doc["lo"]), tuple(doc["hi"]))
    if doc.get("kind") == "torus":
        return Torus(tuple(doc["sides"]))
    raise SpecError(f"unknown domain document {doc!r}")


# ---- OutMap as JSON lines -----------------------------------------------------------


def write_outmap_jsonl(g: OutMap, path):
    """First line: the domain (and active margin); then one directed edge per
    line as [[from...], [to...]] in lexicographic order."""
    path = Path(path)
    with path.open("w") as fh:
        header = {"domain": domain_to_dict(g.dom), "active_margin": g.active_margin}
        fh.write(canonical_json(header) + "\n")
        for x, y in g.directed_edges():
            fh.write(canonical_json([list(x), list(y)]) + "\n")


def read_outmap_jsonl(path) -> OutMap:
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        dom = domain_from_dict(header["domain"])
        out = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = json.loads(line)
            x, y = tuple(a), tuple(b)
            if x in out:
                raise SpecError(f"vertex {x} has two out-edges in {path}")
            out[x] = y
    return OutMap(dom, out, active_margin=header.get("active_margin", 0))


# ---- WeightField as CSV --------------------------------------------------------------


def write_weights_csv(w: WeightField, path):
    """Columns: 2d endpoint coordinates then the weight as a hex float."""
    path = Path(path)
    dom = w.dom
    with path.open("w") as fh:
        fh.write(canonical_json({"domain": domain_to_dict(dom)}) + "\n")
        for e, val in sorted(w.items()):
            a, b = e
            cells = [str(c) for c in a] + [str(c) for c in b] + [float(val).hex()]
            fh.write(",".join(cells) + "\n")


def read_weights_csv(path) -> WeightField:
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        dom = domain_from_dict(header["domain"])
        d = dom.d
        values = np.full((d, dom.n_sites), np.nan)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            a = tuple(int(c) for c in cells[:d])
            b = tuple(int(c) for c in cells[d : 2 * d])
            val = float.fromhex(cells[2 * d])
            i, ax = dom.edge_slot((a, b) if a <= b else (b, a))
            values[ax, i] = val
    return WeightField(dom, values)


# ---- manifests -----------------------------------------------------------------------


def write_manifest(path, config: dict, outputs: dict, extra: dict | None = None):
    from . import __version__

    doc = {
        "config": config,
        "spec_hash": sha256_text(canonical_json(config)),
        "code_version": __version__,
        "outputs": outputs,
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return doc


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
