"""Planar machinery: closures, dual boundaries, star paths, regions."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnlab.errors import StructureError, UnsupportedDimensionError
from nnlab.lattice import Box, Torus
from nnlab.nngraph import build_nn_directed, undirected_components
from nnlab.rng import SeededRng
from nnlab.generators import gen_dyadic_window, gen_zerner_merkl, modify_type_c
from nnlab.topology import (
    boundary_edges,
    check_closure_idempotent,
    check_complement_unbounded,
    check_degree_two,
    check_neighbor_hole,
    check_no_interior_circuits,
    classify_regions,
    closure,
    dual_boundary,
    flood_fill_components,
    interior_dual_degrees,
    site_components,
    star_boundary_path,
)
from nnlab.weights import sample_iid_uniform


WIN = Box((-6, -6), (9, 9))


def test_site_components_diagonal_not_adjacent():
    assert len(site_components({(0, 0), (1, 1)}, WIN)) == 2


def test_site_components_l_shape():
    assert len(site_components({(0, 0), (1, 0), (1, 1)}, WIN)) == 1


@settings(max_examples=50, deadline=None)
@given(bits=st.integers(0, 2**25 - 1))
def test_site_components_match_flood_fill(bits):
    sites = {(i % 5, i // 5) for i in range(25) if (bits >> i) & 1}
    if not sites:
        return
    got = [sorted(c) for c in site_components(sites, WIN)]
    assert sorted(got) == flood_fill_components(sites, WIN)


def test_closure_fills_annulus():
    ann = [(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)]
    assert closure(ann, WIN) == set(ann) | {(1, 1)}


def test_closure_no_holes_identity():
    v = {(0, 0), (1, 0), (2, 0)}
    assert closure(v, WIN) == v


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(0, 2**25 - 1))
def test_closure_idempotent_and_complement_unbounded(bits):
    sites = {(i % 5, i // 5) for i in range(25) if (bits >> i) & 1}
    assert check_closure_idempotent(sites, WIN)
    assert check_complement_unbounded(sites, WIN)
    assert check_neighbor_hole(sites, WIN)


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(0, 2**25 - 1))
def test_closure_fast_matches_reference_box(bits):
    from nnlab.topology import closure_reference

    win = Box((0, 0), (4, 4))
    sites = {(i % 5, i // 5) for i in range(25) if (bits >> i) & 1}
    assert closure(sites, win) == closure_reference(sites, win)


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(0, 2**36 - 1))
def test_closure_fast_matches_reference_torus(bits):
    from nnlab.topology import closure_reference

    t = Torus((6, 6))
    sites = {(i % 6, i // 6) for i in range(36) if (bits >> i) & 1}
    assert closure(sites, t) == closure_reference(sites, t)


def test_dual_boundary_single_site():
    paths = dual_boundary({(0, 0)}, WIN)
    assert len(paths) == 1
    assert len(paths[0].edges) == 4
    assert paths[0].closed


def test_dual_boundary_domino_six_edges():
    # by hand: the 2x1 block has 6 boundary edges
    edges = boundary_edges({(0, 0), (1, 0)}, WIN)
    assert len(edges) == 6
    paths = dual_boundary({(0, 0), (1, 0)}, WIN)
    assert len(paths) == 1 and len(paths[0].edges) == 6 and paths[0].closed


def test_dual_boundary_orientation_deterministic():
    p1 = dual_boundary({(0, 0), (1, 0)}, WIN)[0]
    p2 = dual_boundary({(0, 0), (1, 0)}, WIN)[0]
    assert p1.edges == p2.edges
    verts = p1.vertices()
    assert verts[0] == min(verts[:-1])


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(0, 2**16 - 1))
def test_degree_two_on_connected_sets(bits):
    sites = {(i % 4, i // 4) for i in range(16) if (bits >> i) & 1}
    comps = site_components(sites, WIN)
    if not comps:
        return
    v = comps[0]
    degs = interior_dual_degrees(v, WIN)
    assert all(k == 2 for k in degs.values())


def test_degree_two_with_margin_on_iid():
    dom = Box((0, 0), (23, 23))
    w = sample_iid_uniform(dom, SeededRng(9))
    g = build_nn_directed(w)
    lab = undirected_components(g)
    for cid in range(lab.n_components):
        sites = lab.vertices_of(cid)
        assert check_degree_two(sites, dom)


def test_star_boundary_insertion_paper_case():
    # notched half-plane: traversal passes (0,0) then (1,1); the unique common
    # outside neighbor (1,0) is inserted between them
    win = Box((-3, -2), (4, 3))
    v = [(x, y) for x in range(-3, 5) for y in range(1, 4) if (x, y) != (1, 1)]
    p = star_boundary_path(v, win)
    triples = [(p[i], p[i + 1], p[i + 2]) for i in range(len(p) - 2)]
    assert any(
        t in (((0, 0), (1, 0), (1, 1)), ((1, 1), (1, 0), (0, 0))) for t in triples
    )
    assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(p, p[1:]))


def test_star_boundary_straight_no_insertions():
    win = Box((-3, -2), (4, 3))
    v = [(x, y) for x in range(-3, 5) for y in range(1, 4)]
    p = star_boundary_path(v, win)
    assert all(y == 0 for _, y in p)
    assert len(p) == 8


def test_star_boundary_raises_on_split_boundary():
    win = Box((-3, -3), (3, 3))
    with pytest.raises(StructureError):
        # two separate blobs: two boundary circuits
        star_boundary_path({(0, 0)}, win) and None
        star_boundary_path({(0, 0), (2, 2)}, win)


def test_torus_classification_zm():
    t = Torus((16, 16))
    g = gen_zerner_merkl(16, SeededRng(3))
    rc = classify_regions(undirected_components(g), t)
    assert rc.counts() == {"a": 2, "b": 0, "c": 0}
    assert rc.partition_complete()


def test_torus_classification_type_c():
    for seed in (3, 5):
        g = modify_type_c(gen_zerner_merkl(16, SeededRng(seed)))
        rc = classify_regions(undirected_components(g), g.dom)
        counts = rc.counts()
        assert counts["a"] == 2
        assert counts["c"] >= 1
        assert rc.partition_complete()
        for r in rc.regions:
            if r.kind == "c":
                assert len(r.star_touches) <= 2


def test_box_classification_partition_iid():
    dom = Box((0, 0), (15, 15))
    w = sample_iid_uniform(dom, SeededRng(2))
    g = build_nn_directed(w)
    rc = classify_regions(undirected_components(g), dom)
    assert rc.partition_complete()


def test_classification_requires_d2():
    dom = Box((0, 0, 0), (3, 3, 3))
    with pytest.raises(UnsupportedDimensionError):
        closure({(0, 0, 0)}, dom)


def test_no_interior_circuits_for_spanning_dyadic():
    win = Box((0, 0), (31, 31))
    g = gen_dyadic_window(20, (33, 65), win)
    lab = undirected_components(g)
    for cid in np.where(lab.spanning)[0]:
        sites = lab.vertices_of(int(cid))
        assert check_no_interior_circuits(sites, win)


def test_zm_boundary_degree_two_on_torus():
    t = Torus((12, 12))
    g = gen_zerner_merkl(12, SeededRng(1))
    lab = undirected_components(g)
    for cid in np.where(lab.wrapping)[0]:
        sites = lab.vertices_of(int(cid))
        degs = interior_dual_degrees(sites, t)
        assert all(k == 2 for k in degs.values())
        assert check_no_interior_circuits(sites, t)
