"""Domains, adjacency, canonical edges, and the planar dual bijection."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnlab.errors import DomainError, SpecError, UnsupportedDimensionError
from nnlab.lattice import (
    Box,
    Torus,
    canonical_edge,
    dual_of,
    neighbors,
    primal_of,
    star_neighbors,
)


def test_box_1d_boundary_truncation():
    dom = Box((0,), (2,))
    assert neighbors((0,), dom) == [(1,)]
    assert neighbors((1,), dom) == [(2,), (0,)]


def test_torus_wraparound():
    dom = Torus((4, 4))
    assert set(neighbors((0, 0), dom)) == {(1, 0), (3, 0), (0, 1), (0, 3)}


def test_box_3d_interior_degree():
    dom = Box((0, 0, 0), (4, 4, 4))
    assert len(neighbors((2, 2, 2), dom)) == 6


def test_star_neighbors_interior():
    dom = Box((0, 0), (9, 9))
    assert len(star_neighbors((5, 5), dom)) == 8


def test_star_neighbors_corner():
    dom = Box((0, 0), (9, 9))
    assert set(star_neighbors((0, 0), dom)) == {(1, 0), (0, 1), (1, 1)}


def test_star_neighbors_1d_equals_neighbors():
    dom = Box((0,), (9,))
    assert set(star_neighbors((3,), dom)) == set(neighbors((3,), dom)) == {(2,), (4,)}


def test_outside_site_rejected():
    dom = Box((0, 0), (3, 3))
    with pytest.raises(DomainError):
        neighbors((5, 5), dom)
    with pytest.raises(DomainError):
        star_neighbors((-1, 0), dom)


def test_torus_min_side():
    with pytest.raises(SpecError):
        Torus((2, 4))
    with pytest.raises(SpecError):
        Torus((1,))
    Torus((3, 3))


def test_box_corner_order():
    with pytest.raises(SpecError):
        Box((2, 0), (1, 5))


def test_edge_canonicalization():
    assert canonical_edge((1, 0), (0, 0)) == canonical_edge((0, 0), (1, 0))
    dom = Torus((4, 4))
    assert dom.edge((0, 0), (3, 0)) == dom.edge((3, 0), (0, 0))


def test_edge_counts():
    assert Torus((4, 4)).n_edges == 2 * 16
    assert Box((0, 0), (3, 3)).n_edges == 2 * 4 * 3  # 2 axes x 4 rows x 3 steps
    assert Box((0,), (9,)).n_edges == 9


def test_dual_of_paper_example():
    # vertical unit edge at the origin
    assert dual_of(((0, 0), (0, 1))) == ((-0.5, 0.5), (0.5, 0.5))


def test_dual_of_rotated_example():
    f = dual_of(((0, 0), (1, 0)))
    assert f == ((0.5, -0.5), (0.5, 0.5))
    assert primal_of(f) == ((0, 0), (1, 0))


def test_dual_bijection_box():
    dom = Box((0, 0), (9, 9))
    seen = set()
    for e in dom.edges():
        f = dual_of(e)
        assert primal_of(f) == e
        assert f not in seen
        seen.add(f)
    assert len(seen) == dom.n_edges


def test_dual_bijection_torus():
    dom = Torus((5, 4))
    seen = set()
    for e in dom.edges():
        f = dual_of(e, dom)
        assert primal_of(f, dom) == e
        seen.add(f)
    assert len(seen) == dom.n_edges


def test_dual_requires_d2():
    with pytest.raises(UnsupportedDimensionError):
        dual_of(((0, 0, 0), (0, 0, 1)))


@settings(max_examples=60, deadline=None)
@given(
    sides=st.lists(st.integers(3, 6), min_size=1, max_size=3),
    coord_seed=st.integers(0, 10**6),
)
def test_torus_degree_and_star_superset(sides, coord_seed):
    dom = Torus(tuple(sides))
    i = coord_seed % dom.n_sites
    x = dom.index_site(i)
    nb = neighbors(x, dom)
    assert len(nb) == 2 * dom.d or any(s == 3 for s in sides)
    assert set(nb) <= set(star_neighbors(x, dom)) | set(nb)
    # star-neighborhood always contains the lattice neighborhood
    assert set(nb) <= set(star_neighbors(x, dom))


@settings(max_examples=60, deadline=None)
@given(
    lo=st.lists(st.integers(-5, 5), min_size=1, max_size=3),
    extent=st.lists(st.integers(0, 4), min_size=1, max_size=3),
    coord_seed=st.integers(0, 10**6),
)
def test_box_interior_degree(lo, extent, coord_seed):
    d = min(len(lo), len(extent))
    lo = tuple(lo[:d])
    hi = tuple(l + e for l, e in zip(lo, extent[:d]))
    dom = Box(lo, hi)
    x = dom.index_site(coord_seed % dom.n_sites)
    nb = neighbors(x, dom)
    if dom.is_interior(x):
        assert len(nb) == 2 * d
    assert set(nb) <= set(star_neighbors(x, dom))


def test_site_index_roundtrip():
    dom = Box((-2, 3), (4, 7))
    for i in range(dom.n_sites):
        assert dom.site_index(dom.index_site(i)) == i
