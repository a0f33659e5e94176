import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from quadmaps.errors import Disconnected, FaceDegreeNot4, NonPlanar, NotInvolution, TooLarge
from quadmaps.planar_map import (
    HalfEdgeMap,
    automorphism_roots,
    build_map,
    canonical_code,
    check_quadrangulation,
    enumerate_rooted_maps,
    enumerate_rooted_quadrangulations,
    enumerate_unrooted_maps,
    faces,
    map_from_json,
    map_to_json,
    unrooted_canonical_code,
)


def closed_formula(n):
    return 2 * 3 ** n * math.comb(2 * n, n) // ((n + 1) * (n + 2))


QUADS = {n: enumerate_rooted_quadrangulations(n) for n in (1, 2, 3)}


def test_single_edge_map():
    m = build_map([1, 0], [0, 1], 0)
    assert (m.n_vertices, m.n_edges, m.n_faces) == (2, 1, 1)
    assert [len(f) for f in faces(m)] == [2]


def test_fixed_point_in_alpha_rejected():
    with pytest.raises(NotInvolution):
        build_map([0, 1], [0, 1], 0)


def test_disconnected_rejected():
    with pytest.raises(Disconnected):
        build_map([1, 0, 3, 2], [0, 1, 2, 3], 0)


def test_torus_rejected():
    # one vertex, two loops interleaved around it: V - E + F = 1 - 2 + 1
    with pytest.raises(NonPlanar):
        build_map([1, 0, 3, 2], [2, 3, 1, 0], 0)


def test_one_face_quadrangulations():
    qs = QUADS[1]
    assert len(qs) == 2
    for q in qs:
        assert q.n_vertices == 3
        assert [len(f) for f in faces(q)] == [4]
    assert canonical_code(qs[0]) != canonical_code(qs[1])


def test_double_square_by_hand():
    # a path of two edges u - v - w read as a one-face map
    q = check_quadrangulation(build_map([1, 0, 3, 2], [0, 2, 1, 3], 0))
    assert q.n_vertices == 3 and q.n_faces == 1


def test_triangle_is_not_a_quadrangulation():
    # triangle: darts 0,1,2 go around, 3,4,5 are their reverses
    alpha = [3, 4, 5, 0, 1, 2]
    sigma = [5, 3, 4, 1, 2, 0]
    m = build_map(alpha, sigma, 0)
    assert m.n_faces == 2
    with pytest.raises(FaceDegreeNot4) as info:
        check_quadrangulation(m)
    assert info.value.degree == 3


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_census_matches_closed_formula(n):
    qs = QUADS.get(n) or enumerate_rooted_quadrangulations(n)
    assert len(qs) == closed_formula(n)
    assert len({canonical_code(q) for q in qs}) == len(qs)
    for q in qs:
        assert sorted(len(f) for f in q.faces) == [4] * n
        assert q.n_vertices == n + 2
        colour = q.bipartition()
        assert all(colour[u] != colour[w] for u, w in q.edge_list())


def test_oracle_bound():
    with pytest.raises(TooLarge):
        enumerate_rooted_quadrangulations(6)


@pytest.mark.parametrize("E", [1, 2, 3, 4])
def test_rooted_maps_match_quadrangulations(E):
    # Tutte's bijection: rooted maps with E edges <-> rooted quadrangulations with E faces
    assert len(enumerate_rooted_maps(E)) == closed_formula(E)


def test_unrooted_orbits_sum_to_rooted_count():
    for E in (2, 3, 4):
        total = 0
        for m in enumerate_unrooted_maps(E):
            total += m.n_darts // len(automorphism_roots(m))
        assert total == closed_formula(E)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(QUADS[3]), st.randoms(use_true_random=False))
def test_canonical_code_invariant_under_renaming(q, rnd):
    perm = list(range(q.n_darts))
    rnd.shuffle(perm)
    q2 = q.relabel(perm)
    assert canonical_code(q2) == canonical_code(q)
    assert unrooted_canonical_code(q2)[0] == unrooted_canonical_code(q)[0]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(QUADS[3]))
def test_group_orbit_invariants(q):
    a, s = q.alpha, q.sigma
    assert all(a[a[d]] == d and a[d] != d for d in range(q.n_darts))
    assert q.n_vertices + q.n_faces - q.n_edges == 2
    assert sum(len(f) for f in q.faces) == q.n_darts


def test_json_roundtrip_is_exact():
    for q in QUADS[3]:
        text = map_to_json(q)
        back = map_from_json(text)
        assert back == q
        assert map_to_json(back) == text
        assert json.loads(text)["darts"] == q.n_darts


def test_rerooting_changes_code_only_by_automorphism():
    q = QUADS[2][3]
    codes = {canonical_code(q, root=r) for r in range(q.n_darts)}
    assert len(codes) == q.n_darts // len(automorphism_roots(q))
    assert isinstance(q.with_root(1), HalfEdgeMap)


def test_canonical_form_is_rooted_at_zero():
    for E in (2, 3):
        ms = enumerate_rooted_maps(E)
        assert all(m.root == 0 for m in ms)
        assert len({(m.alpha, m.sigma) for m in ms}) == len(ms)
        assert len({canonical_code(m) for m in ms}) == len(ms)
