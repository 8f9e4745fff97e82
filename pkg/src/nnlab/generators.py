"""Translation-invariant digraph constructions emitted on finite windows.

Four families, each realizable as a nearest-neighbor graph:

* ``gen_zerner_merkl`` -- two coalescing-walk trees on an even torus, from a
  Bernoulli field on the half-resolution cell grid plus a parity shift.
* ``gen_dyadic_window`` -- the 2-adic rule x -> x - e_i(x) on a shifted
  window of the positive orthant; one unbounded component.
* ``gen_layered`` -- stack d-dimensional samples on the hyperplanes of
  Z^(d+1) with no vertical edges; one component per layer.
* ``gen_finite_k`` -- k independent dyadic samples embedded on disjoint
  sublattices by stretching every lattice edge into 4k edges, with
  deterministic spanning-tree filler in the leftover cells; exactly k
  unbounded components.

``modify_type_c`` rewires vertices fed only by leaves into fresh miniloops,
which carves finite separating components out of the Zerner-Merkl pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, SpecError, StructureError
from .lattice import Box, Site, Torus, flat_strides
from .nngraph import OutMap, backward_sizes
from .rng import SeededRng

# ---- Zerner-Merkl ------------------------------------------------------------------


def gen_zerner_merkl(
    L: int,
    rng: SeededRng,
    b_field: Optional[np.ndarray] = None,
    shift: Optional[tuple] = None,
) -> OutMap:
    """Coalescing up-right / down-left pair on the (L, L) torus, L even.

    ``b_field`` and ``shift`` override the random draws so single cells can be
    pinned down in tests.
    """
    if L % 2 or L < 6:
        raise SpecError(f"Zerner-Merkl needs an even torus side >= 6, got {L}")
    m = L // 2
    if b_field is None:
        b_field = rng.child("zm-bernoulli").bernoulli((m, m)).astype(bool)
    else:
        b_field = np.asarray(b_field, dtype=bool)
        if b_field.shape != (m, m):
            raise SpecError(f"b_field must have shape ({m}, {m})")
    if shift is None:
        sx, sy = rng.child("zm-shift").integers(0, 2, 2)
        shift = (int(sx), int(sy))

    # Per-vertex displacement before the shift.  In a B=1 cell the left column
    # chains upward and the right column downward; B=0 is the reflection.
    b_full = np.kron(b_field, np.ones((2, 2), dtype=bool))
    xpar = np.arange(L)[:, None] % 2 == 1
    ypar = np.arange(L)[None, :] % 2 == 1
    dx = np.where(b_full, 0, np.where(ypar, -1, 1))
    dy = np.where(b_full, np.where(xpar, -1, 1), 0)

    # Shifting the whole graph by U moves the rule: displacement at v is the
    # unshifted displacement at v - U.
    dx = np.roll(dx, shift, axis=(0, 1))
    dy = np.roll(dy, shift, axis=(0, 1))

    xs = np.arange(L)[:, None]
    ys = np.arange(L)[None, :]
    tgt = ((xs + dx) % L) * L + (ys + dy) % L
    dom = Torus((L, L))
    g = OutMap(dom, tgt.reshape(-1).astype(np.int64))
    # system 0 = the up-right tree, 1 = the down-left tree; each vertex's own
    # step direction decides which tree it feeds
    system = np.where((dx + dy).reshape(-1) > 0, 0, 1).astype(np.int64)
    g.meta = {"shift": tuple(shift), "cell": 2, "system": system}
    return g


def zm_class_sites(dom: Torus, shift: tuple, parity: int) -> list:
    """Sites of the up-right class (parity 0: both coords even before the
    shift) or the down-left class (parity 1)."""
    out = []
    for x in range(dom.sides[0]):
        for y in range(dom.sides[1]):
            if (x - shift[0]) % 2 == parity and (y - shift[1]) % 2 == parity:
                out.append((x, y))
    return out


def forward_closure(g: OutMap, starts: Sequence[Site]) -> set:
    """All sites reachable from the starts by following out-edges."""
    o = g.out_index
    seen = set(g.dom.site_index(x) for x in starts)
    stack = list(seen)
    while stack:
        i = stack.pop()
        j = int(o[i])
        if j >= 0 and j not in seen:
            seen.add(j)
            stack.append(j)
    return {g.dom.index_site(i) for i in seen}


# ---- dyadic ------------------------------------------------------------------------


def _tz_int(c: int) -> int:
    # trailing zeros; 64 stands in for infinity at c == 0
    return (c & -c).bit_length() - 1 if c else 64


def gen_dyadic_k(x: Site) -> int:
    """Smallest k >= 1 with x / 2^k no longer integral."""
    _check_orthant(x)
    return min(_tz_int(c) for c in x) + 1


def gen_dyadic_i(x: Site) -> int:
    """Largest axis (1-based) odd in x / 2^(k(x)-1)."""
    _check_orthant(x)
    tz = [_tz_int(c) for c in x]
    t = min(tz)
    return max(i for i, v in enumerate(tz) if v == t) + 1


def _check_orthant(x: Site):
    if any(c < 0 for c in x):
        raise DomainError(f"{x} lies outside the nonnegative orthant")
    if all(c == 0 for c in x):
        raise DomainError("the origin has no dyadic out-edge")


def _trailing_zeros(X: np.ndarray) -> np.ndarray:
    # uint64 cast makes bitwise_count see 64 set bits for X == 0
    return np.bitwise_count(((X & -X).astype(np.uint64)) - np.uint64(1)).astype(np.int64)


def _dyadic_depth(X: np.ndarray) -> np.ndarray:
    return _trailing_zeros(X).min(axis=1)


def _dyadic_axis(X: np.ndarray) -> np.ndarray:
    """0-based axis the dyadic rule decrements, per row of X."""
    tz = _trailing_zeros(X)
    t = tz.min(axis=1, keepdims=True)
    is_min = tz == t
    d = X.shape[1]
    return d - 1 - np.argmax(is_min[:, ::-1], axis=1)


def gen_dyadic_window(n: int, Z: Site, window: Box, rng: Optional[SeededRng] = None) -> OutMap:
    """The dyadic rule on window + Z, expressed in window coordinates.

    Every window site must land in the orthant minus the origin after the
    shift, so each one has out-degree one; edges whose head leaves the window
    are dropped.
    """
    d = window.d
    Z = tuple(int(c) for c in Z)
    if len(Z) != d:
        raise SpecError("shift dimension mismatch")
    if any(c < 0 or c >= 2**n for c in Z):
        raise SpecError(f"shift {Z} not in [0, 2^{n})^{d}")
    lo_shifted = tuple(l + z for l, z in zip(window.lo, Z))
    if any(c < 0 for c in lo_shifted):
        raise SpecError(f"window + {Z} leaves the nonnegative orthant")
    hi_shifted = tuple(h + z for h, z in zip(window.hi, Z))
    if all(l <= 0 <= h for l, h in zip(lo_shifted, hi_shifted)):
        raise SpecError(f"window + {Z} contains the origin")

    coords = window.index_coords()
    shifted = coords + np.asarray(Z, dtype=np.int64)
    ax = _dyadic_axis(shifted)
    tgt = coords.copy()
    tgt[np.arange(len(tgt)), ax] -= 1
    inside = np.all((tgt >= np.asarray(window.lo)) & (tgt <= np.asarray(window.hi)), axis=1)
    out = np.full(window.n_sites, -1, dtype=np.int64)
    shape = np.asarray(window.shape)
    strides = flat_strides(shape)
    flat_tgt = ((tgt - np.asarray(window.lo)) * strides).sum(axis=1)
    out[inside] = flat_tgt[inside]
    g = OutMap(window, out)
    g.meta = {"Z": Z, "system": np.zeros(window.n_sites, dtype=np.int64)}
    return g


def sample_dyadic_shift(n: int, window: Box, rng: SeededRng) -> tuple:
    """Uniform shift in {0..2^n-1}^d, re-drawn on the (vanishing-probability)
    event that the shifted window hits the origin or leaves the orthant."""
    d = window.d
    for attempt in range(256):
        Z = tuple(int(c) for c in rng.child("dyadic-shift", attempt).integers(0, 2**n, d))
        lo = tuple(l + z for l, z in zip(window.lo, Z))
        hi = tuple(h + z for h, z in zip(window.hi, Z))
        if all(c >= 0 for c in lo) and not all(l <= 0 <= h for l, h in zip(lo, hi)):
            return Z
    raise SpecError("could not sample an admissible dyadic shift")


def dyadic_out(v: Site) -> Site:
    """Out-neighbor of a nonzero orthant site under the unshifted rule."""
    ax = gen_dyadic_i(v) - 1
    return tuple(c - 1 if a == ax else c for a, c in enumerate(v))


def dyadic_in_neighbors(v: Site) -> list:
    """Sites pointing at v; lets backward trees grow without any window."""
    d = len(v)
    out = []
    for a in range(d):
        u = tuple(c + 1 if i == a else c for i, c in enumerate(v))
        if gen_dyadic_i(u) - 1 == a:
            out.append(u)
    return out


def dyadic_backward_size(v: Site, cap: int) -> int:
    """#C_v in the full orthant graph, truncated at cap."""
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in dyadic_in_neighbors(u):
            if w not in seen:
                seen.add(w)
                if len(seen) > cap:
                    return cap + 1
                stack.append(w)
    return len(seen)


# ---- layered ----------------------------------------------------------------------


def gen_layered(base, n_layers: int) -> OutMap:
    """Stack base samples on the hyperplanes of one extra dimension.

    Pass one OutMap to replicate a single sample on every layer (the
    stationary construction), or a sequence of per-layer OutMaps for the
    independent-samples variant.
    """
    if n_layers < 1:
        raise SpecError("need at least one layer")
    bases = list(base) if isinstance(base, (list, tuple)) else [base] * n_layers
    if len(bases) != n_layers:
        raise SpecError(f"got {len(bases)} base samples for {n_layers} layers")
    bdom = bases[0].dom
    if not isinstance(bdom, Box):
        raise SpecError("layered bases must live on boxes")
    if any(bg.dom != bdom for bg in bases):
        raise SpecError("all base samples must share one window")
    dom3 = Box(bdom.lo + (0,), bdom.hi + (n_layers - 1,))
    out3 = np.full(dom3.n_sites, -1, dtype=np.int64)
    for layer, bg in enumerate(bases):
        o2 = bg.out_index
        src = np.where(o2 >= 0)[0]
        out3[src * n_layers + layer] = o2[src] * n_layers + layer
    margin = max(bg.active_margin for bg in bases)
    g = OutMap(dom3, out3, active_margin=margin)
    g.meta = {"system": (np.arange(dom3.n_sites, dtype=np.int64) % n_layers)}
    return g


# ---- finite-k stretch --------------------------------------------------------------


def stretched_segment_edges(case: str, k: int, base: Site, axis: int) -> list:
    """Directed edges replacing one coarse edge {x, x+e_axis} under the
    4k-stretch; ``base`` is the lattice point 4k*x.  Case c leaves the middle
    edge unoriented, pointing each half toward its nearer segment endpoint."""
    s = 4 * k
    pts = [tuple(c + (l if a == axis else 0) for a, c in enumerate(base)) for l in range(s + 1)]
    if case == "a":
        return [(pts[l], pts[l + 1]) for l in range(s)]
    if case == "b":
        return [(pts[l + 1], pts[l]) for l in range(s)]
    if case == "c":
        back = [(pts[l], pts[l - 1]) for l in range(1, 2 * k + 1)]
        fwd = [(pts[l], pts[l + 1]) for l in range(2 * k + 1, s)]
        return back + fwd
    raise SpecError(f"unknown segment case {case!r}")


def fill_region(sites: set) -> dict:
    """Out-edges covering a finite site set: per site-component, a BFS
    spanning tree rooted at the lexicographically least vertex, all edges
    toward the root, plus the root's edge to its least child (one miniloop).

    Raises on singleton components; the stretch construction guarantees they
    cannot occur, so one appearing means the caller assembled R_x wrong."""
    remaining = set(sites)
    out: dict = {}
    d = len(next(iter(sites))) if sites else 0
    while remaining:
        root = min(remaining)
        comp = [root]
        seen = {root}
        qi = 0
        while qi < len(comp):
            u = comp[qi]
            qi += 1
            for a in range(d):
                for sgn in (1, -1):
                    v = tuple(c + (sgn if i == a else 0) for i, c in enumerate(u))
                    if v in remaining and v not in seen:
                        seen.add(v)
                        comp.append(v)
                        out[v] = u  # toward the root
        if len(comp) == 1:
            raise StructureError(f"singleton site-component at {root}", witness=root)
        children = sorted(v for v, p in out.items() if p == root)
        out[root] = children[0]
        remaining -= seen
    return out


def _residue_class(Y: np.ndarray, k: int, j: int) -> tuple:
    """Masks for membership in V^(j): (on some segment, at a corner)."""
    s = 4 * k
    res = (Y - 4 * (j - 1)) % s
    zeros = (res == 0).sum(axis=1)
    d = Y.shape[1]
    return zeros >= d - 1, zeros == d


def gen_finite_k(
    k: int,
    n: int,
    window: Box,
    rng: SeededRng,
    coarse_out: Optional[Callable] = None,
) -> OutMap:
    """k unbounded components in d >= 3 via the 4k-stretch of k dyadic samples.

    ``coarse_out`` overrides the per-sublattice coarse rule for tests; the
    default draws k independent dyadic shifts.  The assembled map is shifted
    by a uniform vector in [0, 4k-1)^d and declares an active margin of 4k
    (the filler needs whole cells, so a boundary collar stays silent).
    """
    d = window.d
    if d < 3:
        raise SpecError("the finite-k construction needs dimension >= 3")
    if k < 2:
        raise SpecError("finite-k needs k >= 2")
    s = 4 * k
    if any(sz < 2 * s for sz in window.shape):
        raise SpecError(f"window too small to hold a full {s}-cell")

    if coarse_out is None:
        # keep every touched coarse vertex strictly inside the shifted orthant
        span = max(window.shape) // s + 3
        if 2**n <= span + 1:
            raise SpecError(f"level n={n} too small for this window")
        shifts = [
            tuple(int(c) for c in rng.child("finite-k-shift", j).integers(span + 1, 2**n, d))
            for j in range(1, k + 1)
        ]

        def coarse_out(j: int, X: np.ndarray) -> np.ndarray:
            """Coarse out-neighbor of each row of X for sublattice j (dyadic)."""
            shifted = X + np.asarray(shifts[j - 1], dtype=np.int64)
            ax = _dyadic_axis(shifted)
            tgt = X.copy()
            tgt[np.arange(len(tgt)), ax] -= 1
            return tgt

    u_draw = rng.child("finite-k-final-shift").integers(0, s - 1, d)
    U = tuple(int(c) for c in u_draw)

    coords = window.index_coords()
    Y = coords - np.asarray(U, dtype=np.int64)
    nsite = window.n_sites
    out_disp = np.zeros((nsite, d), dtype=np.int64)
    assigned = np.zeros(nsite, dtype=bool)

    for j in range(1, k + 1):
        member, corner = _residue_class(Y, k, j)
        r = 4 * (j - 1)
        # corners: follow the coarse out-edge's first unit step
        cidx = np.where(corner)[0]
        if cidx.size:
            X = (Y[cidx] - r) // s
            tgt = coarse_out(j, X)
            step = tgt - X
            if np.any(np.abs(step).sum(axis=1) != 1):
                raise SpecError("coarse rule must move by one lattice step")
            out_disp[cidx] = step
            assigned[cidx] = True
        # segment interiors: orientation by case of the carrying coarse edge
        sidx = np.where(member & ~corner)[0]
        if sidx.size:
            res = (Y[sidx] - r) % s
            free = np.argmax(res != 0, axis=1)
            ell = res[np.arange(len(sidx)), free]
            base = Y[sidx].copy()
            base[np.arange(len(sidx)), free] -= ell
            Xb = (base - r) // s
            e_free = np.zeros_like(Xb)
            e_free[np.arange(len(sidx)), free] = 1
            to_a = coarse_out(j, Xb)
            case_a = np.all(to_a == Xb + e_free, axis=1)
            to_b = coarse_out(j, Xb + e_free)
            case_b = np.all(to_b == Xb, axis=1) & ~case_a
            sign = np.where(case_a, 1, np.where(case_b, -1, 0))
            # case c: toward the nearer endpoint, middle edge left out
            sign = np.where(sign != 0, sign, np.where(ell <= 2 * k, -1, 1))
            out_disp[sidx] = e_free * sign[:, None]
            assigned[sidx] = True

    # filler: one precomputed cell pattern stamped on every whole cell
    rel_box = Box((-2 * k,) * d, (2 * k - 1,) * d)
    rel_coords = rel_box.index_coords()
    rel_member = np.zeros(len(rel_coords), dtype=bool)
    for j in range(1, k + 1):
        m, _ = _residue_class(rel_coords, k, j)
        rel_member |= m
    rel_sites = {tuple(int(c) for c in row) for row in rel_coords[~rel_member]}
    rel_out = fill_region(rel_sites)

    lo = np.asarray(window.lo)
    shape = np.asarray(window.shape)
    strides = flat_strides(shape)
    out = np.full(nsite, -1, dtype=np.int64)

    src_rel = np.array(sorted(rel_out), dtype=np.int64)
    dst_rel = np.array([rel_out[tuple(r)] for r in src_rel.tolist()], dtype=np.int64)
    src_off = (src_rel * strides).sum(axis=1)
    dst_off = (dst_rel * strides).sum(axis=1)
    c_lo = np.ceil((lo - np.asarray(U) + 2 * k) / s).astype(np.int64)
    c_hi = np.floor((np.asarray(window.hi) - np.asarray(U) - (2 * k - 1)) / s).astype(np.int64)
    for cell in _cells_between(c_lo, c_hi):
        center = np.asarray(cell) * s + np.asarray(U)
        base_flat = ((center - lo) * strides).sum()
        out[base_flat + src_off] = base_flat + dst_off

    # stretched edges, truncated at the window boundary
    aidx = np.where(assigned)[0]
    tgt = coords[aidx] + out_disp[aidx]
    inside = np.all((tgt >= lo) & (tgt <= np.asarray(window.hi)), axis=1)
    out[aidx[inside]] = ((tgt[inside] - lo) * strides).sum(axis=1)
    g = OutMap(window, out, active_margin=s)
    g.meta = {"U": U, "k": k}
    g.meta["system"] = finite_k_membership(g)
    # anything larger than a filler cell witnesses an unbounded component
    # (filler components have L-infinity diameter at most 4k)
    g.meta["witness_size"] = s**d
    return g


def _cells_between(c_lo: np.ndarray, c_hi: np.ndarray):
    if np.any(c_hi < c_lo):
        return
    ranges = [np.arange(a, b + 1) for a, b in zip(c_lo, c_hi)]
    grid = np.meshgrid(*ranges, indexing="ij")
    for row in np.stack([g.reshape(-1) for g in grid], axis=1):
        yield tuple(int(c) for c in row)


def finite_k_membership(g: OutMap) -> np.ndarray:
    """Per-site sublattice id: j in 1..k for V^(j), 0 for the filler set."""
    U = np.asarray(g.meta["U"], dtype=np.int64)
    k = g.meta["k"]
    Y = g.dom.index_coords() - U
    lab = np.zeros(g.dom.n_sites, dtype=np.int64)
    for j in range(1, k + 1):
        member, _ = _residue_class(Y, k, j)
        lab[member] = j
    return lab


# ---- type-(c) rewiring --------------------------------------------------------------


def modify_type_c(g: OutMap) -> OutMap:
    """Redirect every vertex all of whose in-neighbors are leaves onto its
    least in-neighbor, creating a fresh miniloop there."""
    o = g.out_index
    n = len(o)
    sizes = backward_sizes(g)
    leaf = sizes == 1
    src = np.where(o >= 0)[0]
    heads = o[src]
    total_in = np.bincount(heads, minlength=n)
    nonleaf_in = np.bincount(heads[~leaf[src]], minlength=n)
    min_in = np.full(n, n, dtype=np.int64)
    np.minimum.at(min_in, heads, src)
    qualify = (o >= 0) & (total_in >= 1) & (nonleaf_in == 0)
    new_out = o.copy()
    new_out[qualify] = min_in[qualify]
    res = OutMap(g.dom, new_out, active_margin=g.active_margin)
    if hasattr(g, "meta"):
        res.meta = g.meta
    return res


# ---- generator specs ----------------------------------------------------------------


@dataclass(frozen=True)
class Realization:
    graph: OutMap
    weights: object  # WeightField or None
    meta: dict


class GeneratorSpec:
    """JSON-round-trippable description of a random graph model."""

    VARIANTS = ("iid", "zerner_merkl", "dyadic", "layered", "finite_k", "type_c")

    def __init__(self, variant: str, **params):
        if variant not in self.VARIANTS:
            raise SpecError(f"unknown generator variant {variant!r}")
        self.variant = variant
        self.params = params

    # -- serialization --

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, GeneratorSpec):
                return v.to_dict()
            if isinstance(v, Box):
                return {"kind": "box", "lo": list(v.lo), "hi": list(v.hi)}
            if isinstance(v, Torus):
                return {"kind": "torus", "sides": list(v.sides)}
            return v

        return {"variant": self.variant, **{k: enc(v) for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorSpec":
        doc = dict(doc)
        variant = doc.pop("variant", None)
        if variant is None:
            raise SpecError("generator document needs a 'variant' key")

        def dec(key, v):
            if isinstance(v, dict) and v.get("kind") == "box":
                return Box(tuple(v["lo"]), tuple(v["hi"]))
            if isinstance(v, dict) and v.get("kind") == "torus":
                return Torus(tuple(v["sides"]))
            if isinstance(v, dict) and "variant" in v:
                return cls.from_dict(v)
            return v

        return cls(variant, **{k: dec(k, v) for k, v in doc.items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSpec":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return isinstance(other, GeneratorSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"GeneratorSpec({self.to_json()})"

    # -- building --

    def build(self, seed: int) -> Realization:
        from .weights import sample_iid_uniform
        from .nngraph import build_nn_directed

        rng = SeededRng(seed).child("model", self.variant)
        p = self.params
        if self.variant == "iid":
            dom = p["domain"]
            w = sample_iid_uniform(dom, rng)
            return Realization(build_nn_directed(w), w, {})
        if self.variant == "zerner_merkl":
            g = gen_zerner_merkl(p["L"], rng)
            return Realization(g, None, {})
        if self.variant == "dyadic":
            n = p.get("n", 30)
            window = p["window"]
            Z = tuple(p["Z"]) if "Z" in p else sample_dyadic_shift(n, window, rng)
            return Realization(gen_dyadic_window(n, Z, window), None, {"Z": Z})
        if self.variant == "layered":
            base_spec: GeneratorSpec = p["base"]
            layers = p["layers"]
            mode = p.get("mode", "shared")
            if mode == "shared":
                base = base_spec.build(seed).graph
                g = gen_layered(base, layers)
            elif mode == "independent":
                bases = [
                    base_spec.build(int(SeededRng(seed).child("layer", l).integers(0, 2**62))).graph
                    for l in range(layers)
                ]
                g = gen_layered(bases, layers)
            else:
                raise SpecError(f"unknown layered mode {mode!r}")
            return Realization(g, None, {"mode": mode})
        if self.variant == "finite_k":
            g = gen_finite_k(p["k"], p.get("n", 30), p["window"], rng)
            return Realization(g, None, dict(g.meta))
        if self.variant == "type_c":
            inner = p["base"].build(seed)
            return Realization(modify_type_c(inner.graph), None, inner.meta)
        raise SpecError(f"unknown generator variant {self.variant!r}")
