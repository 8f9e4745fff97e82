"""Edge-weight fields and the exact digraph-realization constructor.

``construct_weights`` implements the weight recipe that turns an admissible
out-degree-one digraph into a field whose nearest-neighbor graph reproduces
the digraph edge for edge: an edge carried by the digraph gets weight
``1 / (#C_x + U)`` where ``#C_x`` counts the vertices whose forward orbit
passes through the edge's tail, and every other lattice edge gets ``1 + U``.
Backward-reachable sets strictly nest along directed edges, so the weights
strictly decrease along every orbit and each vertex's argmin is its own
out-edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConstructionError, SpecError, StructureError
from .lattice import Torus, UEdge, canonical_edge
from .nngraph import OutMap, backward_sizes, build_nn_directed
from .rng import SeededRng


class WeightField:
    """Distinct real weights on every edge of a domain.

    Stored per (base site, axis) slot as a (d, n_sites) float array; slots
    without an edge hold NaN.
    """

    def __init__(self, dom, values: np.ndarray):
        d, n = dom.d, dom.n_sites
        if values.shape != (d, n):
            raise SpecError(f"weights must have shape ({d}, {n})")
        self.dom = dom
        self._w = values.astype(np.float64, copy=True)
        for a in range(d):
            missing = dom.neighbor_index(a, +1) < 0
            self._w[a, missing] = np.nan
            if np.any(np.isnan(self._w[a, ~missing])):
                raise SpecError("weight missing on a present edge")

    def axis_weights(self, axis: int) -> np.ndarray:
        return self._w[axis]

    def weight(self, e: UEdge) -> float:
        i, a = self.dom.edge_slot(e)
        return float(self._w[a, i])

    def values(self) -> np.ndarray:
        flat = self._w.reshape(-1)
        return flat[~np.isnan(flat)]

    @property
    def n_edges(self) -> int:
        return int(np.isfinite(self._w).sum())

    def all_distinct(self) -> bool:
        v = np.sort(self.values())
        return bool(np.all(v[1:] > v[:-1]))

    def items(self):
        dom = self.dom
        for a in range(dom.d):
            fwd = dom.neighbor_index(a, +1)
            for i in np.where(fwd >= 0)[0]:
                e = canonical_edge(dom.index_site(int(i)), dom.index_site(int(fwd[i])))
                yield e, float(self._w[a, i])

    def __eq__(self, other):
        if not isinstance(other, WeightField) or self.dom != other.dom:
            return False
        a, b = self._w, other._w
        return bool(np.all((np.isnan(a) & np.isnan(b)) | (a == b)))


def _dedupe(dom, w: np.ndarray, rng: SeededRng, interval) -> np.ndarray:
    """Re-draw colliding slots from per-slot derived streams until distinct.

    Collisions have probability ~0 for 64-bit draws; the loop keeps the
    distinctness invariant machine-checkable rather than merely almost-sure.
    """
    lo, hi = interval
    for _ in range(64):
        flat = w.reshape(-1)
        valid = ~np.isnan(flat)
        vals = flat[valid]
        order = np.argsort(vals, kind="stable")
        dup = np.zeros(len(vals), dtype=bool)
        eq = vals[order][1:] == vals[order][:-1]
        if not eq.any():
            return w
        dup[order[1:][eq]] = True
        slots = np.where(valid)[0][dup]
        for s in slots:
            u = float(rng.child("dedupe", int(s)).uniform_open())
            flat[s] = lo[s] + (hi[s] - lo[s]) * u
    raise StructureError("could not separate colliding weights")


def sample_iid_uniform(dom, rng: SeededRng) -> WeightField:
    """Independent uniform(0,1) weight per edge, reproducible from the seed."""
    d, n = dom.d, dom.n_sites
    w = rng.child("iid-weights").uniform_open((d, n))
    for a in range(d):
        w[a, dom.neighbor_index(a, +1) < 0] = np.nan
    lo = np.zeros(d * n)
    hi = np.ones(d * n)
    w = _dedupe(dom, w, rng, (lo, hi))
    return WeightField(dom, w)


# ---- admissibility -------------------------------------------------------------


@dataclass
class PreconditionReport:
    """Findings of the realization-theorem hypothesis check."""

    out_degree_violations: list = field(default_factory=list)
    long_cycles: list = field(default_factory=list)
    wrapping_cycles: list = field(default_factory=list)
    off_domain_edges: list = field(default_factory=list)
    backward_sets_finite: bool = True  # automatic on finite domains

    @property
    def ok(self) -> bool:
        """Hypotheses hold in the finite-volume sense.

        Torus cycles with nonzero winding are the finite stand-in for infinite
        forward orbits, which the realization theorem allows; they are listed
        separately and do not fail the check.
        """
        return not (self.out_degree_violations or self.long_cycles or self.off_domain_edges)

    @property
    def strictly_acyclic(self) -> bool:
        return self.ok and not self.wrapping_cycles


def verify_theorem3_preconditions(g: OutMap, dom=None) -> PreconditionReport:
    """Report every obstruction to realizing g as a nearest-neighbor graph."""
    if dom is not None and dom != g.dom:
        raise SpecError("digraph domain mismatch")
    dom = g.dom
    rep = PreconditionReport()
    o = g.out_index
    missing = np.where(g.active_mask() & (o < 0))[0]
    rep.out_degree_violations = [dom.index_site(int(i)) for i in missing[:32]]

    for cyc in _directed_cycles(g):
        if len(cyc) < 3:
            continue
        if isinstance(dom, Torus) and _winds(cyc, dom):
            rep.wrapping_cycles.append(cyc)
        else:
            rep.long_cycles.append(cyc)
    return rep


def _directed_cycles(g: OutMap) -> list:
    """All directed cycles of length >= 3, each reported once.

    Orbits that neither reach a sink nor a miniloop are exactly the ones
    feeding long cycles; the vectorized terminal map finds those first so the
    per-vertex walk only runs when witnesses actually exist.
    """
    from .nngraph import terminal_map

    o = g.out_index
    suspects = np.where(terminal_map(g) == -2)[0]
    if not suspects.size:
        return []
    n = len(o)
    color = np.zeros(n, dtype=np.int8)  # 0 new, 1 on stack, 2 done
    cycles = []
    for s in suspects:
        if color[s]:
            continue
        path = []
        u = int(s)
        while True:
            if color[u] == 1:
                k = path.index(u)
                cycles.append([g.dom.index_site(i) for i in path[k:]])
                break
            if color[u] == 2:
                break
            color[u] = 1
            path.append(u)
            nxt = int(o[u])
            if nxt < 0:
                break
            u = nxt
        for i in path:
            color[i] = 2
    return cycles


def _winds(cycle_sites: list, dom: Torus) -> bool:
    total = np.zeros(dom.d, dtype=np.int64)
    for a, b in zip(cycle_sites, cycle_sites[1:] + cycle_sites[:1]):
        total += np.asarray(dom.displacement(a, b))
    return bool(np.any(total != 0))


# ---- the constructor ------------------------------------------------------------


def construct_weights(g: OutMap, dom=None, rng: Optional[SeededRng] = None) -> WeightField:
    """Weights whose nearest-neighbor graph is exactly g on its active set.

    Requires out-degree one at every active vertex and no directed cycles of
    length three or more (miniloops are fine); any cycle, wrapping included,
    breaks the strict nesting of backward sets that the recipe relies on.
    """
    if rng is None:
        raise SpecError("construct_weights needs a SeededRng")
    if dom is not None and dom != g.dom:
        raise SpecError("digraph domain mismatch")
    dom = g.dom
    rep = verify_theorem3_preconditions(g)
    if rep.out_degree_violations:
        raise ConstructionError(
            f"active vertex {rep.out_degree_violations[0]} has no out-edge",
            witness=rep.out_degree_violations[0],
        )
    if rep.long_cycles or rep.wrapping_cycles:
        cyc = (rep.long_cycles + rep.wrapping_cycles)[0]
        raise ConstructionError(
            f"directed cycle of length {len(cyc)} through {cyc[0]}", witness=cyc
        )

    n = dom.n_sites
    d = dom.d
    sizes = backward_sizes(g)
    o = g.out_index

    u = rng.child("construct-weights").uniform_open((d, n))
    w = np.empty((d, n))
    v_count = np.zeros((d, n), dtype=np.int64)
    carried = np.zeros((d, n), dtype=bool)
    for a in range(d):
        fwd = dom.neighbor_index(a, +1)
        has = fwd >= 0
        fwd_carries = has & (o == fwd)  # edge directed base -> base+e_a
        bwd_carries = has.copy()  # edge directed base+e_a -> base
        bwd_carries[has] = o[fwd[has]] == np.where(has)[0]
        carried[a] = fwd_carries | bwd_carries
        v_count[a, fwd_carries] = sizes[fwd_carries]
        tail = fwd[bwd_carries & ~fwd_carries]
        v_count[a, bwd_carries & ~fwd_carries] = sizes[tail]
        w[a] = np.where(carried[a], 1.0 / (v_count[a] + u[a]), 1.0 + u[a])
        w[a, ~has] = np.nan

    lo = np.where(carried, 1.0 / (v_count + 1.0), 1.0).reshape(-1)
    hi = np.where(carried, 1.0 / np.maximum(v_count, 1), 2.0).reshape(-1)
    w = _dedupe(dom, w, rng, (lo, hi))
    return WeightField(dom, w)


def round_trip_matches(g: OutMap, rng: SeededRng) -> bool:
    """construct weights from g, rebuild the nearest-neighbor graph, and demand
    agreement at every vertex where g has an out-edge."""
    w = construct_weights(g, rng=rng)
    h = build_nn_directed(w)
    go, ho = g.out_index, h.out_index
    has = go >= 0
    return bool(np.all(go[has] == ho[has]))
