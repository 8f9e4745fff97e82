"""Directed nearest-neighbor graphs and their structural analysis.

An ``OutMap`` stores an out-degree-at-most-one digraph over a domain as a flat
int64 array (-1 marks "no out-edge"), which keeps whole-lattice operations
vectorized while the tuple-based accessors keep call sites readable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, SpecError, StructureError
from .lattice import Box, Site, Torus, canonical_edge, flat_strides


class OutMap:
    """Vertex -> optional out-neighbor, over a Box or Torus.

    ``active_margin`` widens the strip of box-boundary sites that are exempt
    from the out-degree-one expectation; generators whose rule needs a full
    surrounding cell (the 4k-stretch) declare a positive margin.
    """

    def __init__(self, dom, out=None, active_margin: int = 0):
        self.dom = dom
        self.active_margin = int(active_margin)
        n = dom.n_sites
        if out is None:
            self._out = np.full(n, -1, dtype=np.int64)
        elif isinstance(out, np.ndarray):
            if out.shape != (n,):
                raise SpecError(f"out array must have shape ({n},)")
            self._out = out.astype(np.int64, copy=True)
        else:
            self._out = np.full(n, -1, dtype=np.int64)
            for x, y in out.items():
                self.set_out(x, y)
        self._check_targets()

    def _check_targets(self):
        o = self._out
        present = o >= 0
        if np.any(o[present] >= self.dom.n_sites):
            raise DomainError("out-neighbor index outside domain")
        idx = np.where(present)[0]
        if np.any(o[idx] == idx):
            bad = int(idx[o[idx] == idx][0])
            raise DomainError(f"self-loop at {self.dom.index_site(bad)}")
        ok = np.zeros(len(o), dtype=bool)
        for a in range(self.dom.d):
            for s in (+1, -1):
                ok |= o == self.dom.neighbor_index(a, s)
        if np.any(present & ~ok):
            bad = int(np.where(present & ~ok)[0][0])
            raise DomainError(
                f"out-neighbor of {self.dom.index_site(bad)} is not adjacent"
            )

    # ---- accessors -------------------------------------------------------------

    @property
    def out_index(self) -> np.ndarray:
        return self._out

    def out(self, x: Site) -> Optional[Site]:
        j = self._out[self.dom.site_index(x)]
        return self.dom.index_site(int(j)) if j >= 0 else None

    def set_out(self, x: Site, y: Optional[Site]):
        i = self.dom.site_index(x)
        if y is None:
            self._out[i] = -1
        else:
            if y not in self.dom.neighbors(x):
                raise DomainError(f"{y} is not adjacent to {x}")
            self._out[i] = self.dom.site_index(y)

    def items(self) -> Iterator[tuple]:
        for i in np.where(self._out >= 0)[0]:
            yield self.dom.index_site(int(i)), self.dom.index_site(int(self._out[i]))

    def directed_edges(self) -> list:
        return sorted(self.items())

    @property
    def n_edges(self) -> int:
        return int((self._out >= 0).sum())

    def active_mask(self) -> np.ndarray:
        """Sites where the digraph is expected to have out-degree exactly one."""
        if isinstance(self.dom, Torus):
            return np.ones(self.dom.n_sites, dtype=bool)
        coords = self.dom.index_coords()
        lo = np.asarray(self.dom.lo)
        hi = np.asarray(self.dom.hi)
        depth = np.minimum(coords - lo, hi - coords).min(axis=1)
        return depth >= 1 + self.active_margin

    def copy(self) -> "OutMap":
        return OutMap(self.dom, self._out.copy(), self.active_margin)

    def restricted_to(self, box: Box) -> "OutMap":
        """Restriction to a sub-box; edges leaving the sub-box (or crossing a
        torus seam) are dropped."""
        dom = self.dom
        coords = dom.index_coords()
        lo = np.asarray(box.lo)
        hi = np.asarray(box.hi)
        inside = np.all((coords >= lo) & (coords <= hi), axis=1)
        o = self._out
        keep = (o >= 0) & inside
        tgt_ok = np.zeros(len(o), dtype=bool)
        src_idx = np.where(keep)[0]
        tgt = o[src_idx]
        unit_step = np.abs(coords[tgt] - coords[src_idx]).sum(axis=1) == 1
        tgt_ok[src_idx] = inside[tgt] & unit_step
        keep &= tgt_ok
        shape = np.asarray(box.shape)
        strides = flat_strides(shape)
        newidx = ((coords - lo) * strides).sum(axis=1)
        new_out = np.full(box.n_sites, -1, dtype=np.int64)
        src_idx = np.where(keep)[0]
        new_out[newidx[src_idx]] = newidx[o[src_idx]]
        return OutMap(box, new_out, self.active_margin)

    def __eq__(self, other):
        return (
            isinstance(other, OutMap)
            and self.dom == other.dom
            and np.array_equal(self._out, other._out)
        )

    def __repr__(self):
        return f"OutMap({self.dom}, {self.n_edges} edges)"


# ---- construction from weights ----------------------------------------------------


def build_nn_directed(w) -> "OutMap":
    """Point every positive-degree vertex at its minimum-weight incident edge."""
    dom = w.dom
    if not w.all_distinct():
        raise StructureError("weight field has duplicate values")
    n = dom.n_sites
    cand_w = np.full((2 * dom.d, n), np.inf)
    cand_t = np.full((2 * dom.d, n), -1, dtype=np.int64)
    for a in range(dom.d):
        fwd = dom.neighbor_index(a, +1)
        has = fwd >= 0
        cand_w[2 * a, has] = w.axis_weights(a)[has]
        cand_t[2 * a] = fwd
        bwd = dom.neighbor_index(a, -1)
        hasb = bwd >= 0
        cand_w[2 * a + 1, hasb] = w.axis_weights(a)[bwd[hasb]]
        cand_t[2 * a + 1] = bwd
    best = np.argmin(cand_w, axis=0)
    cols = np.arange(n)
    out = cand_t[best, cols]
    out[np.isinf(cand_w[best, cols])] = -1
    return OutMap(dom, out)


# ---- components ----------------------------------------------------------------


@dataclass
class ComponentLabeling:
    """Union-find style labeling of the undirected version of an OutMap."""

    dom: object
    labels: np.ndarray
    sizes: np.ndarray
    boundary_touching: np.ndarray  # per component; boxes only
    spanning: np.ndarray  # per component: touches two opposite faces; boxes only
    wrapping: np.ndarray  # per component: winds around the torus; tori only

    @property
    def n_components(self) -> int:
        return len(self.sizes)

    def component_of(self, x: Site) -> int:
        return int(self.labels[self.dom.site_index(x)])

    def vertices_of(self, cid: int) -> list:
        return [self.dom.index_site(int(i)) for i in np.where(self.labels == cid)[0]]

    def count(self, kind: str) -> int:
        if kind == "total":
            return self.n_components
        return int(getattr(self, kind).sum())


def undirected_components(g: OutMap) -> ComponentLabeling:
    """Label components of {{x, out(x)}}; isolated sites become singletons."""
    dom = g.dom
    n = dom.n_sites
    o = g.out_index
    src = np.where(o >= 0)[0]
    dst = o[src]
    mat = sp.coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    labels = _relabel_dense(labels)
    ncomp = int(labels.max()) + 1 if n else 0
    sizes = np.bincount(labels, minlength=ncomp)

    touching = np.zeros(ncomp, dtype=bool)
    spanning = np.zeros(ncomp, dtype=bool)
    wrapping = np.zeros(ncomp, dtype=bool)
    if isinstance(dom, Box):
        coords = dom.index_coords()
        lo = np.asarray(dom.lo)
        hi = np.asarray(dom.hi)
        margin = np.minimum(coords - lo, hi - coords).min(axis=1)
        touching[np.unique(labels[margin <= 1])] = True
        for a in range(dom.d):
            lo_lbl = np.unique(labels[coords[:, a] == dom.lo[a]])
            hi_lbl = np.unique(labels[coords[:, a] == dom.hi[a]])
            spanning[np.intersect1d(lo_lbl, hi_lbl)] = True
    else:
        for cid in _wrapping_components(g, labels):
            wrapping[cid] = True
    return ComponentLabeling(dom, labels, sizes, touching, spanning, wrapping)


def _relabel_dense(labels: np.ndarray) -> np.ndarray:
    _, dense = np.unique(labels, return_inverse=True)
    return dense.astype(np.int64)


def _wrapping_components(g: OutMap, labels: np.ndarray) -> set:
    """Components whose edge set has nonzero winding around some torus axis.

    Cut the torus along every seam, label the cut graph, then chase seam edges
    with integer offsets between cut-components; an offset mismatch means the
    original component winds."""
    dom = g.dom
    o = g.out_index
    src = np.where(o >= 0)[0]
    dst = o[src]
    coords = dom.index_coords()
    sides = np.asarray(dom.sides)
    disp = coords[dst] - coords[src]
    disp -= np.round(disp / sides).astype(np.int64) * sides  # minimal displacement
    seam = np.any(coords[src] + disp != coords[dst], axis=1)

    inner_src, inner_dst = src[~seam], dst[~seam]
    n = dom.n_sites
    mat = sp.coo_matrix(
        (np.ones(len(inner_src), dtype=np.int8), (inner_src, inner_dst)), shape=(n, n)
    )
    _, cut = connected_components(mat, directed=False)

    adj = {}
    for s_i, d_i, dv in zip(src[seam], dst[seam], disp[seam]):
        cu, cv = int(cut[s_i]), int(cut[d_i])
        # lift offset between the two rigid cut-components (a multiple of L per axis)
        off = tuple(int(t) for t in coords[s_i] + dv - coords[d_i])
        adj.setdefault(cu, []).append((cv, off))
        adj.setdefault(cv, []).append((cu, tuple(-t for t in off)))

    wrapping = set()
    pos: dict = {}
    for start in adj:
        if start in pos:
            continue
        pos[start] = (0,) * dom.d
        stack = [start]
        group = [start]
        found = False
        while stack:
            u = stack.pop()
            for v, dv in adj[u]:
                cand = tuple(p + t for p, t in zip(pos[u], dv))
                if v not in pos:
                    pos[v] = cand
                    stack.append(v)
                    group.append(v)
                elif pos[v] != cand:
                    found = True
        if found:
            rep = np.where(cut == start)[0][0]
            wrapping.add(int(labels[rep]))
    return wrapping


# ---- forward paths -----------------------------------------------------------------


@dataclass(frozen=True)
class TwoCycle:
    u: Site
    v: Site


@dataclass(frozen=True)
class ExitedDomain:
    pass


@dataclass(frozen=True)
class StepCapReached:
    pass


@dataclass
class PathTrace:
    """The forward orbit of a site, with the reason it stopped."""

    vertices: list
    terminal: object

    def edges(self) -> list:
        return [
            canonical_edge(a, b) for a, b in zip(self.vertices, self.vertices[1:])
        ]


def forward_path(x: Site, g: OutMap, step_cap: Optional[int] = None) -> PathTrace:
    """Follow out-edges from x until a two-cycle closes, the orbit leaves the
    active map, or the cap trips.  Revisiting any older vertex is a structure
    violation (it witnesses a directed cycle of length >= 3)."""
    if step_cap is None:
        step_cap = 4 * g.dom.n_sites
    dom = g.dom
    o = g.out_index
    i = dom.site_index(x)
    trace = [i]
    seen = {i: 0}
    for _ in range(step_cap):
        j = int(o[trace[-1]])
        if j < 0:
            return PathTrace([dom.index_site(t) for t in trace], ExitedDomain())
        if j in seen:
            if len(trace) >= 2 and j == trace[-2]:
                verts = [dom.index_site(t) for t in trace] + [dom.index_site(j)]
                return PathTrace(verts, TwoCycle(verts[-1], verts[-2]))
            cycle = [dom.index_site(t) for t in trace[seen[j]:]]
            raise StructureError(
                f"directed cycle of length {len(cycle)} through {cycle[0]}",
                witness=cycle,
            )
        seen[j] = len(trace)
        trace.append(j)
    return PathTrace([dom.index_site(t) for t in trace], StepCapReached())


def backward_set(x: Site, g: OutMap) -> set:
    """All y whose forward orbit passes through x, including x itself."""
    dom = g.dom
    rev = _reverse_adjacency(g)
    start = dom.site_index(x)
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in rev.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return {dom.index_site(i) for i in seen}


def _reverse_adjacency(g: OutMap) -> dict:
    rev: dict = {}
    o = g.out_index
    for i in np.where(o >= 0)[0]:
        rev.setdefault(int(o[i]), []).append(int(i))
    return rev


def backward_sizes(g: OutMap) -> np.ndarray:
    """#C_x for every site at once.

    Peel the in-forest leaves-first accumulating subtree sizes; vertices left
    unpeeled lie on directed cycles and share the whole basin of their cycle.
    """
    n = g.dom.n_sites
    o = g.out_index
    t = np.ones(n, dtype=np.int64)
    valid = o >= 0
    deg = np.bincount(o[valid], minlength=n)
    frontier = np.where(deg == 0)[0]
    peeled = np.zeros(n, dtype=bool)
    while frontier.size:
        peeled[frontier] = True
        has_parent = valid[frontier]
        kids = frontier[has_parent]
        parents = o[kids]
        np.add.at(t, parents, t[kids])
        np.subtract.at(deg, parents, 1)
        frontier = np.unique(parents[deg[parents] == 0])
    sizes = t.copy()
    on_cycle = ~peeled & valid
    todo = np.where(on_cycle)[0]
    visited = np.zeros(n, dtype=bool)
    for i in todo:
        if visited[i]:
            continue
        cyc = [int(i)]
        visited[i] = True
        j = int(o[i])
        while j != int(i):
            cyc.append(j)
            visited[j] = True
            j = int(o[j])
        total = int(t[cyc].sum())
        sizes[cyc] = total
    return sizes


def two_cycle_mask(g: OutMap) -> np.ndarray:
    o = g.out_index
    idx = np.arange(len(o))
    ok = o >= 0
    res = np.zeros(len(o), dtype=bool)
    res[ok] = o[o[ok]] == idx[ok]
    return res


def terminal_map(g: OutMap, step_limit: Optional[int] = None) -> np.ndarray:
    """For each site, the first two-cycle vertex (or sink) its orbit reaches.

    Pointer doubling with absorption; -2 flags orbits that never absorb, which
    on a finite map means they feed a directed cycle of length >= 3."""
    n = g.dom.n_sites
    o = g.out_index
    absorb = two_cycle_mask(g) | (o < 0)
    jump = np.where(absorb, np.arange(n, dtype=np.int64), o)
    rounds = max(1, int(np.ceil(np.log2(max(2, 4 * n)))))
    for _ in range(rounds):
        jump = jump[jump]
    done = absorb[jump]
    jump[~done] = -2
    return jump


# ---- per-edge weight views used by path analyses --------------------------------


def out_edge_weights(g: OutMap, w) -> np.ndarray:
    """Weight of each site's out-edge; NaN where there is none."""
    dom = g.dom
    o = g.out_index
    res = np.full(dom.n_sites, np.nan)
    for a in range(dom.d):
        fwd = dom.neighbor_index(a, +1)
        m = (o >= 0) & (o == fwd)
        res[m] = w.axis_weights(a)[m]
        bwd = dom.neighbor_index(a, -1)
        m = (o >= 0) & (o == bwd)
        res[m] = w.axis_weights(a)[bwd[m]]
    return res


def check_monotone_decreasing(trace: PathTrace, w) -> bool:
    """Strict weight decrease along the self-avoiding part of the trace."""
    edges = trace.edges()
    if isinstance(trace.terminal, TwoCycle):
        edges = edges[:-1]  # final edge re-traverses the miniloop edge
    vals = [w.weight(e) for e in edges]
    return all(a > b for a, b in zip(vals, vals[1:]))


def infimum_supremum_along(trace: PathTrace, w) -> tuple:
    edges = trace.edges()
    if not edges:
        raise SpecError("trace has no edges; infimum/supremum undefined")
    vals = [w.weight(e) for e in edges]
    return min(vals), max(vals)


def r_descendant(x: Site, r: float, g: OutMap, w) -> Optional[Site]:
    """Last vertex along the forward orbit of x whose out-edge weighs >= r."""
    trace = forward_path(x, g)
    verts = trace.vertices[:-1] if isinstance(trace.terminal, TwoCycle) else trace.vertices
    wout = []
    for a, b in zip(trace.vertices, trace.vertices[1:]):
        wout.append(w.weight(canonical_edge(a, b)))
    best = None
    for v, wv in zip(verts, wout):
        if wv >= r:
            best = v
    return best


# ---- structure verification -------------------------------------------------------


@dataclass
class ComponentStructureReport:
    size: int
    undirected_edges: int
    is_tree: bool
    miniloop_count: int
    orientation_ok: bool

    @property
    def ok(self) -> bool:
        return self.is_tree and self.miniloop_count == 1 and self.orientation_ok


def verify_component_structure(component_sites: Iterable, g: OutMap) -> ComponentStructureReport:
    """Check one component against the finite-cluster description: a tree whose
    directed edges all point toward its unique miniloop."""
    dom = g.dom
    idx = sorted(dom.site_index(x) for x in component_sites)
    members = set(idx)
    o = g.out_index
    und = set()
    directed = []
    for i in idx:
        j = int(o[i])
        if j >= 0 and j in members:
            und.add((min(i, j), max(i, j)))
            directed.append((i, j))
    two = sorted({(min(i, j), max(i, j)) for i, j in directed if int(o[j]) == i})
    is_tree = len(und) == len(idx) - 1
    orientation_ok = True
    if len(two) == 1:
        loop = set(two[0])
        for i in idx:
            tr = forward_path(dom.index_site(i), g)
            if not isinstance(tr.terminal, TwoCycle):
                orientation_ok = False
                break
            u, v = tr.terminal.u, tr.terminal.v
            if {dom.site_index(u), dom.site_index(v)} != loop:
                orientation_ok = False
                break
    else:
        orientation_ok = False
    return ComponentStructureReport(
        size=len(idx),
        undirected_edges=len(und),
        is_tree=is_tree,
        miniloop_count=len(two),
        orientation_ok=orientation_ok,
    )


@dataclass
class GraphStructureReport:
    n_components: int
    components_checked: int
    components_passed: int
    long_cycle_free: bool
    monotone_ok: Optional[bool]
    terminal_two_cycle_rate: float

    @property
    def pass_rate(self) -> float:
        if self.components_checked == 0:
            return 1.0
        return self.components_passed / self.components_checked

    @property
    def ok(self) -> bool:
        return (
            self.long_cycle_free
            and self.components_checked == self.components_passed
            and self.monotone_ok in (None, True)
        )


def verify_all_components(g: OutMap, w=None, labeling: Optional[ComponentLabeling] = None) -> GraphStructureReport:
    """Vectorized whole-graph version of the per-component verifier.

    On a Box, only components made entirely of interior sites are judged (the
    boundary truncates argmins, so the theorem's description need not hold
    there)."""
    dom = g.dom
    n = dom.n_sites
    o = g.out_index
    if labeling is None:
        labeling = undirected_components(g)
    labels = labeling.labels
    ncomp = labeling.n_components

    term = terminal_map(g)
    long_cycle_free = bool(np.all(term != -2))

    two = two_cycle_mask(g)
    loops_per_comp = np.bincount(labels[two], minlength=ncomp) // 2

    if isinstance(dom, Box):
        coords = dom.index_coords()
        lo = np.asarray(dom.lo)
        hi = np.asarray(dom.hi)
        interior = np.all((coords > lo) & (coords < hi), axis=1)
        comp_all_interior = np.ones(ncomp, dtype=bool)
        comp_all_interior[np.unique(labels[~interior])] = False
    else:
        comp_all_interior = np.ones(ncomp, dtype=bool)
    nontrivial = labeling.sizes > 1
    judged = comp_all_interior & nontrivial

    src = np.where(o >= 0)[0]
    directed_per_comp = np.bincount(labels[src], minlength=ncomp)
    und_per_comp = directed_per_comp - loops_per_comp
    tree_ok = und_per_comp == labeling.sizes - 1

    orient_ok = np.ones(ncomp, dtype=bool)
    bad_term = np.unique(labels[(term == -2) | (o < 0)])
    orient_ok[bad_term] = False

    passed = judged & tree_ok & (loops_per_comp == 1) & orient_ok

    monotone = None
    if w is not None:
        monotone = bool(adjacent_pairs_monotone(g, w))

    has_out = o >= 0
    landed = term[has_out]
    ok_terminal = (landed >= 0) & two[np.clip(landed, 0, n - 1)]
    rate = float(ok_terminal.mean()) if has_out.any() else 1.0

    return GraphStructureReport(
        n_components=ncomp,
        components_checked=int(judged.sum()),
        components_passed=int(passed.sum()),
        long_cycle_free=long_cycle_free,
        monotone_ok=monotone,
        terminal_two_cycle_rate=rate,
    )


def adjacent_pairs_monotone(g: OutMap, w) -> bool:
    """Every consecutive pair of directed edges <x,y>,<y,z> with z != x has
    strictly decreasing weight."""
    o = g.out_index
    wout = out_edge_weights(g, w)
    i = np.where(o >= 0)[0]
    j = o[i]
    chained = o[j] >= 0
    i, j = i[chained], j[chained]
    not_miniloop = o[j] != i
    i, j = i[not_miniloop], j[not_miniloop]
    return bool(np.all(wout[i] > wout[j]))
