import math
import time
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bfs_oracle, pointed_code
from quadmaps.cvs import (
    RootChoice,
    count_quadrangulations,
    cvs_edge_list,
    cvs_reverse,
    sample_quadrangulation,
)
from quadmaps.encodings import LabeledTree, enumerate_labeled_trees, sample_labeled_tree
from quadmaps.planar_map import enumerate_rooted_quadrangulations


def pointed_census(n):
    out = set()
    for q in enumerate_rooted_quadrangulations(n):
        for v in range(q.n_vertices):
            out.add(pointed_code(q, v))
    return out


def check_distance_identity(pq, t):
    dist = bfs_oracle(pq.q, pq.v_star)
    base = min(t.labels)
    for i, v in enumerate(pq.tree_vertex):
        assert dist[v] == t.labels[i] - base + 1
    assert dist == pq.distance_profile()


def test_single_edge_up():
    t = LabeledTree((-1, 0), (0, 1))
    for choice in RootChoice:
        pq = cvs_reverse(t, choice)
        assert pq.q.n_faces == 1 and pq.q.n_vertices == 3
        dist = bfs_oracle(pq.q, pq.v_star)
        assert dist[pq.tree_vertex[0]] == 1
        assert dist[pq.tree_vertex[1]] == 2


def test_single_edge_down():
    t = LabeledTree((-1, 0), (0, -1))
    pq = cvs_reverse(t)
    dist = bfs_oracle(pq.q, pq.v_star)
    assert dist[pq.tree_vertex[0]] == 2
    assert dist[pq.tree_vertex[1]] == 1


def test_counts():
    assert [count_quadrangulations(n) for n in (1, 2, 3)] == [2, 9, 54]
    with pytest.raises(ValueError):
        count_quadrangulations(0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exhaustive_bijection(n):
    trees = enumerate_labeled_trees(n)
    images = Counter()
    for t in trees:
        for choice in RootChoice:
            pq = cvs_reverse(t, choice, check=True)
            images[pointed_code(pq.q, pq.v_star)] += 1
    census = pointed_census(n)
    assert len(census) == count_quadrangulations(n) * (n + 2)
    assert set(images) == census
    assert set(images.values()) == {1}
    assert sum(images.values()) == 2 * len(trees)


def test_n2_marked_vertex_census():
    trees = enumerate_labeled_trees(2)
    assert len(trees) == 18
    images = {pointed_code(cvs_reverse(t, c).q, cvs_reverse(t, c).v_star)
              for t in trees for c in RootChoice}
    assert len(images) == 9 * 4


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2 ** 32 - 1), st.sampled_from(list(RootChoice)))
def test_distance_identity_and_planarity(n, seed, choice):
    t = sample_labeled_tree(n, np.random.default_rng(seed))
    pq = cvs_reverse(t, choice, check=True)
    q = pq.q
    assert q.n_faces == n and q.n_vertices == n + 2
    assert all(len(f) == 4 for f in q.faces)
    check_distance_identity(pq, t)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 400), st.integers(0, 2 ** 32 - 1), st.sampled_from(list(RootChoice)))
def test_fast_path_matches_checked_engine(n, seed, choice):
    t = sample_labeled_tree(n, np.random.default_rng(seed))
    a = cvs_reverse(t, choice, check=True)
    b = cvs_reverse(t, choice, check=False)
    assert a.q == b.q
    assert a.q.vertex_of == b.q.vertex_of
    assert (a.v_star, a.vertex_labels, a.tree_vertex) == (b.v_star, b.vertex_labels, b.tree_vertex)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 80), st.integers(0, 2 ** 32 - 1))
def test_label_lower_bound_on_distances(n, seed):
    t = sample_labeled_tree(n, np.random.default_rng(seed))
    pq = cvs_reverse(t)
    lab = pq.vertex_labels
    for u in range(0, pq.q.n_vertices, 3):
        dist = bfs_oracle(pq.q, u)
        assert all(dist[v] >= abs(lab[u] - lab[v]) for v in range(pq.q.n_vertices))


def test_face_label_patterns():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pq, _ = sample_quadrangulation(30, rng=rng)
        lab = pq.vertex_labels
        vo = pq.q.vertex_of
        for f in pq.q.faces:
            ls = [lab[vo[d]] for d in f]
            assert all(abs(ls[i] - ls[(i + 1) % 4]) == 1 for i in range(4))
            assert max(ls) - min(ls) in (1, 2)


def test_edge_list_matches_map():
    rng = np.random.default_rng(9)
    for _ in range(20):
        t = sample_labeled_tree(50, rng)
        pq = cvs_reverse(t)
        nv, src, dst, vs = cvs_edge_list(t)
        tv = pq.tree_vertex + [pq.v_star]
        got = sorted(tuple(sorted((tv[a], tv[b]))) for a, b in zip(src, dst))
        vo = pq.q.vertex_of
        want = sorted(tuple(sorted((vo[2 * c], vo[2 * c + 1]))) for c in range(2 * t.n_edges))
        assert nv == pq.q.n_vertices and tv[vs] == pq.v_star and got == want


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sampler_uniform(n):
    census = {c: i for i, c in enumerate(sorted(pointed_census(n)))}
    draws = 100_000 if n < 3 else 120_000
    rng = np.random.default_rng(77 + n)
    counts = Counter()
    for _ in range(draws):
        pq, _ = sample_quadrangulation(n, rng=rng)
        counts[census[pointed_code(pq.q, pq.v_star)]] += 1
    k = len(census)
    exp = draws / k
    stat = sum((counts.get(i, 0) - exp) ** 2 / exp for i in range(k))
    df = k - 1
    crit = df * (1 - 2 / (9 * df) + 3.09 * math.sqrt(2 / (9 * df))) ** 3
    assert stat < crit


def test_sampler_deterministic():
    a, ta = sample_quadrangulation(200, seed=5)
    b, tb = sample_quadrangulation(200, seed=5)
    assert ta == tb and a.q == b.q and a.v_star == b.v_star


def test_sampler_budget():
    sample_quadrangulation(2 ** 10, seed=0)
    t0 = time.perf_counter()
    pq, _ = sample_quadrangulation(2 ** 16, seed=1)
    assert time.perf_counter() - t0 < 1.0
    assert pq.q.n_vertices == 2 ** 16 + 2
