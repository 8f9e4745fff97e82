"""Finite pieces of the cubic lattice: boxes, tori, adjacency and the planar dual.

Sites are plain tuples of ints.  A ``Box`` is an axis-aligned block with both
corners inclusive; a ``Torus`` wraps every axis.  Undirected edges are stored
as ordered pairs ``(a, b)`` with ``a`` lexicographically smallest, so that
``{a, b}`` and ``{b, a}`` produce the same value.

Dual-lattice vertices (d=2 only) are pairs of half-integers, exactly
representable as floats.
"""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from .errors import DomainError, SpecError, UnsupportedDimensionError

Site = tuple
UEdge = tuple  # (site, site), canonically ordered
DEdge = tuple  # (from_site, to_site)
DualVertex = tuple  # (half-int, half-int) as floats
DualEdge = tuple  # (dual_vertex, dual_vertex), canonically ordered


def canonical_edge(a: Site, b: Site) -> UEdge:
    """Order the endpoint pair so both insertion orders collide."""
    return (a, b) if a <= b else (b, a)


def flat_strides(shape) -> np.ndarray:
    """Row-major strides matching the flat site indexing of a domain."""
    shape = np.asarray(shape, dtype=np.int64)
    return np.cumprod(np.concatenate([[1], shape[::-1][:-1]]))[::-1]


class _DomainBase:
    """Shared machinery: flat indexing and vectorized neighbor tables."""

    shape: tuple
    d: int

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    # ---- flat index <-> site -------------------------------------------------

    def site_index(self, x: Site) -> int:
        if not self.contains(x):
            raise DomainError(f"site {x} not in {self}")
        idx = 0
        for c, lo, n in zip(x, self._lo, self.shape):
            idx = idx * n + (c - lo)
        return idx

    def index_site(self, i: int) -> Site:
        coords = []
        for n in reversed(self.shape):
            coords.append(i % n)
            i //= n
        return tuple(c + lo for c, lo in zip(reversed(coords), self._lo))

    def index_coords(self) -> np.ndarray:
        """(n_sites, d) int64 array of coordinates in flat-index order."""
        grids = np.indices(self.shape).reshape(self.d, -1)
        return (grids.T + np.asarray(self._lo, dtype=np.int64)).astype(np.int64)

    def sites(self) -> Iterator[Site]:
        for i in range(self.n_sites):
            yield self.index_site(i)

    # ---- neighbor tables -----------------------------------------------------

    def neighbor_index(self, axis: int, sign: int) -> np.ndarray:
        """Flat index of each site's neighbor along (axis, sign); -1 if absent."""
        key = (axis, sign)
        cache = self._nbr_cache
        if key not in cache:
            cache[key] = self._build_neighbor_index(axis, sign)
        return cache[key]

    def _build_neighbor_index(self, axis: int, sign: int) -> np.ndarray:
        n = self.n_sites
        idx = np.arange(n, dtype=np.int64).reshape(self.shape)
        moved = np.roll(idx, -sign, axis=axis)
        out = moved.reshape(-1).copy()
        if not self.wraps:
            face = [slice(None)] * self.d
            face[axis] = -1 if sign > 0 else 0
            mask = np.zeros(self.shape, dtype=bool)
            mask[tuple(face)] = True
            out[mask.reshape(-1)] = -1
        return out

    # ---- per-site operations ---------------------------------------------------

    def neighbors(self, x: Site) -> list:
        """All sites at L1-distance one from x inside the domain."""
        if not self.contains(x):
            raise DomainError(f"site {x} not in {self}")
        out = []
        for a in range(self.d):
            for s in (1, -1):
                y = self.axis_neighbor(x, a, s)
                if y is not None:
                    out.append(y)
        return out

    def star_neighbors(self, x: Site) -> list:
        """All sites at L-infinity distance one from x inside the domain."""
        if not self.contains(x):
            raise DomainError(f"site {x} not in {self}")
        out = []
        deltas = np.indices((3,) * self.d).reshape(self.d, -1).T - 1
        for dv in deltas:
            if not np.any(dv):
                continue
            y = self.translate(x, tuple(int(t) for t in dv))
            if y is not None:
                out.append(y)
        return out

    def edge(self, a: Site, b: Site) -> UEdge:
        if b not in self.neighbors(a):
            raise DomainError(f"{a} and {b} are not adjacent in {self}")
        return canonical_edge(a, b)

    def edges(self) -> Iterator[UEdge]:
        """All undirected edges, in (site, axis) flat order."""
        for i in range(self.n_sites):
            x = self.index_site(i)
            for a in range(self.d):
                j = int(self.neighbor_index(a, +1)[i])
                if j >= 0:
                    yield canonical_edge(x, self.index_site(j))

    @property
    def n_edges(self) -> int:
        return sum(int((self.neighbor_index(a, +1) >= 0).sum()) for a in range(self.d))

    def edge_slot(self, e: UEdge) -> tuple:
        """Map a canonical edge to its (base-site flat index, axis) storage slot."""
        a, b = e
        ia = self.site_index(a)
        for ax in range(self.d):
            j = self.neighbor_index(ax, +1)[ia]
            if j >= 0 and self.index_site(int(j)) == b:
                return ia, ax
        ib = self.site_index(b)
        for ax in range(self.d):
            j = self.neighbor_index(ax, +1)[ib]
            if j >= 0 and self.index_site(int(j)) == a:
                return ib, ax
        raise DomainError(f"{e} is not an edge of {self}")


class Box(_DomainBase):
    """Axis-aligned block of Z^d with inclusive corners lo <= hi."""

    wraps = False

    def __init__(self, lo: Site, hi: Site):
        lo, hi = tuple(int(c) for c in lo), tuple(int(c) for c in hi)
        if len(lo) != len(hi) or not lo:
            raise SpecError("box corners need equal positive dimension")
        if any(l > h for l, h in zip(lo, hi)):
            raise SpecError(f"box corners must satisfy lo <= hi, got {lo} > {hi}")
        self.lo, self.hi = lo, hi
        self.d = len(lo)
        self._lo = lo
        self.shape = tuple(h - l + 1 for l, h in zip(lo, hi))
        self._nbr_cache = {}

    def contains(self, x: Site) -> bool:
        return len(x) == self.d and all(l <= c <= h for c, l, h in zip(x, self.lo, self.hi))

    def translate(self, x: Site, dv: Site) -> Optional[Site]:
        y = tuple(c + t for c, t in zip(x, dv))
        return y if self.contains(y) else None

    def axis_neighbor(self, x: Site, axis: int, sign: int) -> Optional[Site]:
        y = list(x)
        y[axis] += sign
        y = tuple(y)
        return y if self.contains(y) else None

    def face_depth(self, x: Site) -> int:
        """L-infinity distance from x to the complement of the box."""
        return 1 + min(min(c - l, h - c) for c, l, h in zip(x, self.lo, self.hi))

    def is_interior(self, x: Site) -> bool:
        """True when every lattice neighbor of x lies inside the box."""
        return all(l < c < h for c, l, h in zip(x, self.lo, self.hi))

    def __eq__(self, other):
        return isinstance(other, Box) and (self.lo, self.hi) == (other.lo, other.hi)

    def __hash__(self):
        return hash(("box", self.lo, self.hi))

    def __repr__(self):
        return f"Box(lo={self.lo}, hi={self.hi})"


class Torus(_DomainBase):
    """Quotient Z^d / (sides Z)^d; sides below 3 would create loops or doubled edges."""

    wraps = True

    def __init__(self, sides):
        sides = tuple(int(s) for s in sides)
        if not sides:
            raise SpecError("torus needs at least one axis")
        if any(s < 3 for s in sides):
            raise SpecError(f"torus sides must all be >= 3, got {sides}")
        self.sides = sides
        self.d = len(sides)
        self.shape = sides
        self._lo = (0,) * self.d
        self._nbr_cache = {}

    def contains(self, x: Site) -> bool:
        return len(x) == self.d and all(0 <= c < s for c, s in zip(x, self.sides))

    def wrap(self, x: Site) -> Site:
        return tuple(c % s for c, s in zip(x, self.sides))

    def translate(self, x: Site, dv: Site) -> Site:
        return tuple((c + t) % s for c, t, s in zip(x, dv, self.sides))

    def axis_neighbor(self, x: Site, axis: int, sign: int) -> Site:
        y = list(x)
        y[axis] = (y[axis] + sign) % self.sides[axis]
        return tuple(y)

    def face_depth(self, x: Site) -> float:
        return float("inf")

    def is_interior(self, x: Site) -> bool:
        return True

    def displacement(self, a: Site, b: Site) -> Site:
        """Minimal per-axis displacement taking a to b (sides >= 3 make it unique
        for adjacent pairs)."""
        out = []
        for ca, cb, s in zip(a, b, self.sides):
            t = (cb - ca) % s
            out.append(t if t <= s - t else t - s)
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, Torus) and self.sides == other.sides

    def __hash__(self):
        return hash(("torus", self.sides))

    def __repr__(self):
        return f"Torus(sides={self.sides})"


def neighbors(x: Site, dom) -> list:
    return dom.neighbors(x)


def star_neighbors(x: Site, dom) -> list:
    return dom.star_neighbors(x)


# ---- planar dual (d=2) ---------------------------------------------------------


def _require_d2(obj_len: int):
    if obj_len != 2:
        raise UnsupportedDimensionError("dual lattice operations require d=2")


def dual_of(e: UEdge, dom=None) -> DualEdge:
    """The dual edge bisecting e.  For torus edges pass the domain so the step
    across the seam resolves to the right unit displacement."""
    a, b = e
    _require_d2(len(a))
    if isinstance(dom, Torus):
        dv = dom.displacement(a, b)
        if dv not in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            raise DomainError(f"{e} is not a lattice edge on {dom}")
        if dv in ((-1, 0), (0, -1)):
            a, dv = b, (-dv[0], -dv[1])
    else:
        dv = (b[0] - a[0], b[1] - a[1])
        if dv in ((-1, 0), (0, -1)):
            a, dv = b, (-dv[0], -dv[1])
        if dv not in ((1, 0), (0, 1)):
            raise DomainError(f"{e} is not a unit lattice edge")
    x, y = a
    if dv == (0, 1):  # vertical edge: dual runs horizontally through (x, y+1/2)
        u = (x - 0.5, y + 0.5)
        v = (x + 0.5, y + 0.5)
    else:  # horizontal edge: dual runs vertically through (x+1/2, y)
        u = (x + 0.5, y - 0.5)
        v = (x + 0.5, y + 0.5)
    if isinstance(dom, Torus):
        u = _wrap_dual(u, dom)
        v = _wrap_dual(v, dom)
    return canonical_edge(u, v)


def primal_of(f: DualEdge, dom=None) -> UEdge:
    """Inverse of dual_of: the unique primal edge bisected by f."""
    u, v = f
    _require_d2(len(u))
    if isinstance(dom, Torus):
        du = dom.displacement(_dual_corner(u, dom), _dual_corner(v, dom))
        if du not in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            raise DomainError(f"{f} is not a dual edge on {dom}")
        if du in ((-1, 0), (0, -1)):
            u, du = v, (-du[0], -du[1])
    else:
        du = (v[0] - u[0], v[1] - u[1])
        if du in ((-1.0, 0.0), (0.0, -1.0)):
            u, du = v, (-du[0], -du[1])
        if du not in ((1.0, 0.0), (0.0, 1.0)):
            raise DomainError(f"{f} is not a unit dual edge")
    ux, uy = u
    if du[0]:  # horizontal dual edge bisects a vertical primal edge
        a = (int(round(ux + 0.5)), int(round(uy - 0.5)))
        b = (a[0], a[1] + 1)
    else:  # vertical dual edge bisects a horizontal primal edge
        a = (int(round(ux - 0.5)), int(round(uy + 0.5)))
        b = (a[0] + 1, a[1])
    if isinstance(dom, Torus):
        a, b = dom.wrap(a), dom.wrap(b)
    return canonical_edge(a, b)


def _wrap_dual(u: DualVertex, dom: Torus) -> DualVertex:
    # float mod of exact halves by an int side is exact
    return tuple(c % s for c, s in zip(u, dom.sides))


def _dual_corner(u: DualVertex, dom: Torus) -> Site:
    return tuple(int(round(c - 0.5)) % s for c, s in zip(u, dom.sides))
