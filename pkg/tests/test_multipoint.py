import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bfs_oracle
from quadmaps.cvs import RootChoice, cvs_reverse, tree_map
from quadmaps.encodings import LabeledTree, sample_labeled_tree
from quadmaps.errors import NotGeodesicStar, NotLabeledMap, TooLarge
from quadmaps.multipoint import (
    DelayedQuadrangulation,
    LabeledMap,
    SinkCorner,
    check_delays,
    count_delayed_quadrangulations,
    delays_for_star,
    enumerate_labeled_maps,
    enumerate_lm,
    image_code,
    is_geodesic_star,
    leftmost_chain,
    leftmost_geodesic,
    liquid_partition,
    phi_reverse,
    random_labeled_map,
    star_to_labeled_map,
    successor,
)
from quadmaps.planar_map import HalfEdgeMap, enumerate_rooted_quadrangulations

CENSUS3 = enumerate_rooted_quadrangulations(3)


def tree_labeled_map(t):
    m, _, _ = tree_map(t)
    return LabeledMap(m, (0,), t.labels)


def brute_star(q, v, r):
    """G(r, k) evaluated literally, vertex by vertex."""
    n = q.n_vertices
    d = [bfs_oracle(q, u) for u in range(n)]

    def aligned(x, y, z):
        return d[x][y] + d[y][z] == d[x][z]

    k = len(v) - 1
    for w in range(n):
        if d[w][v[0]] < r:
            continue
        for i in range(1, k + 1):
            if aligned(v[0], w, v[i]):
                if any(aligned(v[0], w, v[j]) for j in range(1, k + 1) if j != i):
                    return False
    for a, b, c in itertools.permutations(v, 3):
        if aligned(a, b, c):
            return False
    return min(d[v[0]][v[i]] for i in range(1, k + 1)) >= 3 * r


# delays --------------------------------------------------------------------

def path_quadrangulation():
    # two squares glued along an edge: v0 and v1 at distance 2 through u
    for q in enumerate_rooted_quadrangulations(2):
        d = bfs_oracle(q, 0)
        if max(d) == 2:
            return q, 0, d.index(2)
    raise AssertionError


def test_check_delays_examples():
    q, a, b = path_quadrangulation()
    assert check_delays(q, (a, b), (0, 0))
    assert not check_delays(q, (a, b), (0, 1))
    assert not check_delays(q, (a, b), (0, 2))


def test_delays_for_star_substitution():
    t = LabeledTree(tuple(range(-1, 10)), tuple(range(11)))
    pq = cvs_reverse(t)
    v0, v1 = pq.v_star, pq.tree_vertex[10]
    assert bfs_oracle(pq.q, v0)[v1] == 11
    v1 = pq.tree_vertex[9]
    assert delays_for_star(pq.q, (v0, v1), 4) == (-4, -6)


def test_aligned_triple_regression():
    q = CENSUS3[0]
    assert q.alpha == (1, 0, 4, 5, 2, 3, 8, 9, 6, 7, 11, 10)
    assert q.sigma == (2, 1, 5, 6, 3, 0, 9, 10, 7, 4, 8, 11)
    v = (1, 3, 4)
    tau = delays_for_star(q, v, 2)
    assert tau == (-2, -1, -2)
    assert not is_geodesic_star(q, v, 1)
    assert not check_delays(q, v, tau)


# stars -----------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_star_matches_literal_definition(seed, r):
    rng = np.random.default_rng(seed)
    pq = cvs_reverse(sample_labeled_tree(int(rng.integers(20, 120)), rng))
    v = tuple(int(x) for x in rng.choice(pq.q.n_vertices, size=3, replace=False))
    assert is_geodesic_star(pq.q, v, r) == brute_star(pq.q, v, r)


def test_star_k1_is_distance_condition():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pq = cvs_reverse(sample_labeled_tree(40, rng))
        a, b = (int(x) for x in rng.choice(pq.q.n_vertices, size=2, replace=False))
        d = bfs_oracle(pq.q, a)[b]
        for r in (1, 2, 3):
            assert is_geodesic_star(pq.q, (a, b), r, k=1) == (d >= 3 * r)


def test_star_census_against_oracle():
    for q in CENSUS3:
        for v in itertools.permutations(range(q.n_vertices), 3):
            assert is_geodesic_star(q, v, 1) == brute_star(q, v, 1)


def test_star_parity_function_even():
    rng = np.random.default_rng(8)
    for _ in range(30):
        pq = cvs_reverse(sample_labeled_tree(60, rng))
        q = pq.q
        a, b = (int(x) for x in rng.choice(q.n_vertices, size=2, replace=False))
        da, db = bfs_oracle(q, a), bfs_oracle(q, b)
        assert all((da[b] - da[w] + db[w]) % 2 == 0 for w in range(q.n_vertices))


def test_star_preimage_errors():
    q = CENSUS3[0]
    with pytest.raises(NotGeodesicStar):
        star_to_labeled_map(q, (1, 3, 4), 1, 2)
    with pytest.raises(ValueError):
        star_to_labeled_map(q, (1, 3, 4), 1, 5)
    pq = None
    rng = np.random.default_rng(0)
    while pq is None:
        cand = cvs_reverse(sample_labeled_tree(400, rng))
        d = bfs_oracle(cand.q, cand.v_star)
        far = [u for u in range(len(d)) if d[u] >= 3]
        for a, b in itertools.combinations(far, 2):
            if is_geodesic_star(cand.q, (cand.v_star, a, b), 1):
                pq = (cand.q, (cand.v_star, a, b))
                break
    with pytest.raises(TooLarge):
        star_to_labeled_map(pq[0], pq[1], 1, 2)


def test_no_small_stars():
    # G(1, 2) needs d(v_0, v_i) >= 3 and no alignment: empty for n <= 4
    for n in (2, 3, 4):
        for q in enumerate_rooted_quadrangulations(n):
            for v in itertools.permutations(range(q.n_vertices), 3):
                assert not is_geodesic_star(q, v, 1)


def star_hits(n_maps, seed):
    """Star instances found by pushing general 3-face labeled maps through
    phi_reverse; the preimage of each instance is then known."""
    rng = np.random.default_rng(seed)
    for _ in range(n_maps):
        lm = random_labeled_map(int(rng.integers(20, 200)), 2, rng)
        dq, _ = phi_reverse(lm, check=False)
        D = dq.distances()
        tau = dq.tau
        s = [tau[i] - tau[0] + D[0][dq.v[i]] for i in (1, 2)]
        if s[0] != s[1] or s[0] % 2:
            continue
        rp = s[0] // 2
        for r in range(1, rp):
            if r + 1 <= rp <= 2 * r and is_geodesic_star(dq.q, dq.v, r, dists=D):
                yield lm.shifted(-rp - tau[0]), dq, r, rp
                break


@pytest.mark.slow
def test_star_instances_are_in_lm():
    found = 0
    for lm, dq, r, rp in star_hits(10_000, 2):
        found += 1
        assert lm.in_lm(), lm.lm_defect()
        assert min(lm.labels[x] for x in lm.face_vertices(0)) == -rp + 1
        assert delays_for_star(dq.q, dq.v, rp) == tuple(t - dq.tau[0] - rp for t in dq.tau)
        ac = dq.construction
        d0 = dq.distances()[0]
        lab0 = {ac.vertex_map[u] for u in lm.face_vertices(0)}
        lp = liquid_partition(dq)
        vo = dq.q.vertex_of
        heads = [vo[a] for a in dq.q.alpha]
        for i in (1, 2):
            di = dq.distances()[i]
            D = d0[dq.v[i]]
            common = lab0 & {ac.vertex_map[u] for u in lm.face_vertices(i)}
            layer = [w for w in range(dq.q.n_vertices) if d0[w] == rp and d0[w] + di[w] == D]
            assert layer
            for w in layer:
                assert w in common
                assert dq.labels[w] - dq.labels[dq.v[0]] - rp == 0
            # darts leaving the layer along geodesics: toward v_i in E_i, back toward v_0 in E_0
            for e in range(dq.q.n_darts):
                w, h = vo[e], heads[e]
                if w in layer and d0[h] + di[h] == D:
                    assert lp.assignment[e] == (i if d0[h] == rp + 1 else 0)
    assert found >= 5


# reverse construction ----------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 80), st.integers(0, 2 ** 32 - 1), st.sampled_from(list(RootChoice)))
def test_k0_equals_cvs(n, seed, choice):
    t = sample_labeled_tree(n, np.random.default_rng(seed))
    dq, c = phi_reverse(tree_labeled_map(t), choice)
    pq = cvs_reverse(t, choice)
    assert c == choice
    assert dq.q == pq.q and dq.v == (pq.v_star,) and dq.labels == pq.vertex_labels


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 60), st.integers(0, 4), st.integers(0, 2 ** 32 - 1))
def test_label_formula_and_quadrangulation(n, k, seed):
    rng = np.random.default_rng(seed)
    lm = random_labeled_map(n, k, rng).validate()
    dq, _ = phi_reverse(lm, RootChoice(int(rng.integers(2))))
    q = dq.q
    assert q.n_faces == lm.n_edges
    assert q.n_vertices == lm.m.n_vertices + k + 1
    assert all(len(f) == 4 for f in q.faces)
    assert dq.labels == dq.label_formula()
    for i, f in enumerate(lm.face_names):
        assert dq.tau[i] == min(lm.labels[x] for x in lm.face_vertices(i)) - 1
    assert dq.check()


def test_label_formula_bulk():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        lm = random_labeled_map(int(rng.integers(1, 50)), int(rng.integers(0, 4)), rng)
        dq, _ = phi_reverse(lm, RootChoice(int(rng.integers(2))))
        assert dq.labels == dq.label_formula()


def test_not_a_labeled_map():
    t = LabeledTree((-1, 0), (0, 1))
    m, _, _ = tree_map(t)
    with pytest.raises(NotLabeledMap):
        phi_reverse(LabeledMap(m, (0,), (0, 2)))
    with pytest.raises(NotLabeledMap):
        phi_reverse(LabeledMap(m, (1,), (0, 1)))
    # a single face cannot meet LM^(k+1) requirements only when k >= 1
    lm = random_labeled_map(5, 1, np.random.default_rng(1))
    if not lm.in_lm():
        with pytest.raises(NotLabeledMap):
            phi_reverse(lm, require_lm=True)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_two_to_one_exhaustive(n):
    maps = enumerate_labeled_maps(n, 3)
    lm_maps = enumerate_lm(n)
    assert all(x.in_lm() for x in lm_maps)
    codes = set()
    for lm in maps:
        for choice in RootChoice:
            dq, _ = phi_reverse(lm, choice, check=False)
            codes.add(image_code(dq))
            if n <= 3:
                assert dq.check()
    # distinct (map, choice) pairs never collide and every delayed
    # quadrangulation is reached
    assert len(codes) == 2 * len(maps) == count_delayed_quadrangulations(n)


def test_lm_counts_small():
    assert len(enumerate_lm(1)) == 0
    assert len(enumerate_lm(2)) == 12
    assert len(enumerate_labeled_maps(3, 1)) == 5 * 27


def test_labeled_map_json_roundtrip():
    lm = random_labeled_map(20, 2, np.random.default_rng(5))
    back = LabeledMap.from_dict(lm.to_dict())
    assert back == lm and back.code() == lm.code()


# successors, chains and liquids ---------------------------------------------------

def test_successor_on_four_corner_face():
    t = LabeledTree((-1, 0, 1), (2, 1, 2))
    lm = tree_labeled_map(t)
    face = lm.m.faces[0]
    assert [lm.dart_labels()[d] for d in face] == [2, 1, 2, 1]
    assert successor(lm, face[0]) == face[1]
    assert successor(lm, face[2]) == face[3]
    assert successor(lm, face[1]) == SinkCorner(0)
    assert successor(lm, face[3]) == SinkCorner(0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(0, 3), st.integers(0, 2 ** 32 - 1))
def test_successor_chains_terminate(n, k, seed):
    lm = random_labeled_map(n, k, np.random.default_rng(seed))
    dl = lm.dart_labels()
    fi = lm.face_index()
    for c in range(lm.m.n_darts):
        i = fi[lm.m.face_of[c]]
        tau = min(lm.labels[x] for x in lm.face_vertices(i)) - 1
        steps, x = 0, c
        while not isinstance(x, SinkCorner):
            x = successor(lm, x)
            steps += 1
        assert x == SinkCorner(i)
        assert steps == dl[c] - tau


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(0, 3), st.integers(0, 2 ** 32 - 1))
def test_leftmost_geodesics(n, k, seed):
    lm = random_labeled_map(n, k, np.random.default_rng(seed))
    dq, _ = phi_reverse(lm)
    fi = lm.face_index()
    ac = dq.construction
    dists = dq.distances()
    for c in range(lm.m.n_darts):
        i = fi[ac.arc_face[c]]
        chain = leftmost_geodesic(dq, c)
        assert chain[-1] == dq.v[i]
        assert len(chain) - 1 == dq.labels[chain[0]] - dq.tau[i] == dists[i][chain[0]]
        # the same chain read on q alone
        darts = leftmost_chain(dq.q, dq.labels, 2 * c)
        vo = dq.q.vertex_of
        assert [vo[d] for d in darts] + [dq.v[i]] == chain


def test_liquid_partition_k0_and_closure():
    rng = np.random.default_rng(6)
    t = sample_labeled_tree(50, rng)
    dq, _ = phi_reverse(tree_labeled_map(t))
    lp = liquid_partition(dq)
    assert set(lp.assignment[0::2]) == {0} and set(lp.assignment[1::2]) == {-1}
    for _ in range(30):
        lm = random_labeled_map(40, 3, rng)
        dq, _ = phi_reverse(lm)
        lp = liquid_partition(dq)
        fi = lm.face_index()
        for c in range(lm.m.n_darts):
            assert lp.assignment[2 * c] == fi[dq.construction.arc_face[c]]
            chain = leftmost_chain(dq.q, dq.labels, 2 * c)
            assert {lp.assignment[d] for d in chain} == {lp.assignment[2 * c]}
        assert sorted(d for i in range(4) for d in lp.cell(i)) == list(range(0, dq.q.n_darts, 2))
