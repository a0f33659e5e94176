import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadmaps.encodings import (
    ContourEncoding,
    DiscreteSnake,
    LabeledForest,
    LabeledTree,
    MotzkinWalk,
    contour_of_tree,
    count_forests,
    enumerate_labeled_trees,
    enumerate_plane_trees,
    forest_contour,
    forest_of_snake,
    motzkin_count,
    motzkin_count_positive,
    sample_labeled_tree,
    snake_identities,
    snake_of_forest,
    tree_of_contour,
)
from quadmaps.errors import MalformedContour, MalformedSnake


def brute_walks(a, b, r, interior_min=None):
    total = 0
    for steps in itertools.product((-1, 0, 1), repeat=r):
        vals = list(itertools.accumulate(steps, initial=a))
        if vals[-1] != b:
            continue
        if interior_min is not None and any(v < interior_min for v in vals[1:-1]):
            continue
        total += 1
    return total


# trees and contours -------------------------------------------------------

def test_single_vertex_contour():
    c = contour_of_tree(LabeledTree.single())
    assert c.C == (0, -1) and c.L == (0,)
    assert tree_of_contour(c) == LabeledTree.single()


def test_path_contour_by_hand():
    t = LabeledTree((-1, 0, 1), (0, 1, 2))
    c = contour_of_tree(t)
    assert c.C == (0, 1, 2, 1, 0, -1)
    assert c.L == (0, 1, 2, 1, 0)
    assert tree_of_contour(c) == t


def test_malformed_contours():
    with pytest.raises(MalformedContour):
        tree_of_contour(ContourEncoding((0, 1, 0), (0, 1)))
    with pytest.raises(MalformedContour):
        tree_of_contour(ContourEncoding((0, 1, 0, -1), (0, 2, 0)))
    with pytest.raises(MalformedContour):
        # returning to the root with a different label
        tree_of_contour(ContourEncoding((0, 1, 0, -1), (0, 1, 1)))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_tree_contour_roundtrip(n, seed):
    t = sample_labeled_tree(n, np.random.default_rng(seed)).validate()
    c = contour_of_tree(t).validate()
    assert len(c.L) == 2 * n + 1 and len(c.C) == 2 * n + 2
    assert tree_of_contour(c) == t


def test_tree_contour_roundtrip_bulk():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        t = sample_labeled_tree(int(rng.integers(1, 30)), rng)
        assert tree_of_contour(contour_of_tree(t)) == t


def test_plane_tree_counts_are_catalan():
    for n in range(1, 7):
        assert len(enumerate_plane_trees(n)) == math.comb(2 * n, n) // (n + 1)


def chi_square_ok(counts, n_cells, draws):
    expected = draws / n_cells
    stat = sum((counts.get(k, 0) - expected) ** 2 / expected for k in range(n_cells))
    # 99.9% quantile of chi-square, Wilson-Hilferty approximation
    df = n_cells - 1
    z = 3.09
    crit = df * (1 - 2 / (9 * df) + z * math.sqrt(2 / (9 * df))) ** 3
    return stat < crit


@pytest.mark.parametrize("n,draws", [(1, 100_000), (2, 100_000), (3, 60_000)])
def test_sampler_uniform(n, draws):
    cells = {t: i for i, t in enumerate(enumerate_labeled_trees(n))}
    assert len(cells) == 3 ** n * math.comb(2 * n, n) // (n + 1)
    rng = np.random.default_rng(1234 + n)
    counts = Counter(cells[sample_labeled_tree(n, rng)] for _ in range(draws))
    assert chi_square_ok(counts, len(cells), draws)


# Motzkin counts -----------------------------------------------------------

def test_motzkin_examples():
    assert motzkin_count(0, 0, 0) == 1
    assert motzkin_count(0, 0, 2) == 3
    assert motzkin_count(1, 0, 3) == 6
    assert motzkin_count_positive(0, 0, 1) == 1
    assert motzkin_count_positive(1, 0, 3) == 2
    assert 3 * motzkin_count_positive(1, 0, 3) == motzkin_count(1, 0, 3)


def test_motzkin_against_brute_force():
    for a, b in itertools.product(range(-2, 4), repeat=2):
        for r in range(0, 7):
            assert motzkin_count(a, b, r) == brute_walks(a, b, r)
            if r >= 1 or a == b:
                assert motzkin_count_positive(a, b, r) == brute_walks(a, b, r, interior_min=1)


def test_motzkin_recurrence_and_symmetry():
    for a, b in itertools.product(range(-4, 5), repeat=2):
        for r in range(1, 9):
            rec = sum(motzkin_count(a + d, b, r - 1) for d in (-1, 0, 1))
            assert motzkin_count(a, b, r) == rec
            assert motzkin_count(a, b, r) == motzkin_count(b, a, r)


def test_reflection_principle():
    for a, b, r in itertools.product(range(1, 9), repeat=3):
        assert motzkin_count_positive(a, b, r) == motzkin_count(a, b, r) - motzkin_count(a, -b, r)


def test_cyclic_lemma():
    for a, r in itertools.product(range(1, 9), repeat=2):
        assert r * motzkin_count_positive(a, 0, r) == a * motzkin_count(a, 0, r)
    # a = 0: first step up, then a first passage from 1 (factor 1/3 per step)
    for r in range(2, 9):
        assert (r - 1) * motzkin_count_positive(0, 0, r) == motzkin_count(1, 0, r - 1)


def test_forest_count_formula():
    # r trees, n edges: r/(2n+r) binom(2n+r, n), checked by enumeration
    trees = {k: len(enumerate_plane_trees(k)) if k else 1 for k in range(6)}
    for r in range(1, 4):
        for n in range(0, 5):
            brute = sum(math.prod(trees[p] for p in parts)
                        for parts in itertools.product(range(n + 1), repeat=r) if sum(parts) == n)
            assert count_forests(n, r) == brute


# forests and snakes -------------------------------------------------------

def random_forest(rng, r, max_edges=5):
    floor = [int(rng.integers(-2, 3))]
    for _ in range(r):
        floor.append(floor[-1] + int(rng.integers(-1, 2)))
    trees = []
    for i in range(r):
        k = int(rng.integers(0, max_edges + 1))
        t = LabeledTree.single(floor[i]) if k == 0 else sample_labeled_tree(k, rng).shifted(floor[i])
        trees.append(t)
    return LabeledForest(tuple(trees), MotzkinWalk(floor))


def test_single_vertex_trees_snake():
    f = LabeledForest(tuple(LabeledTree.single(x) for x in (0, 1, 1)), MotzkinWalk((0, 1, 1, 0)))
    s = snake_of_forest(f)
    assert s.zeta == (3, 2, 1, 0)
    assert s.W == ((0, 1, 1, 0), (0, 1, 1), (0, 1), (0,))
    assert all(snake_identities(s, f).values())
    assert forest_of_snake(s) == f


def test_printed_contour_identity_fails_on_trivial_forest():
    # r = 2 single-vertex trees: C_F = (2, 1, 0) while r + 1 + zeta - min zeta = 3
    f = LabeledForest((LabeledTree.single(0), LabeledTree.single(0)), MotzkinWalk((0, 0, 0)))
    C, _ = forest_contour(f)
    s = snake_of_forest(f)
    run = list(itertools.accumulate(s.zeta, min))
    assert C == (2, 1, 0)
    assert [f.r + 1 + z - m for z, m in zip(s.zeta, run)] == [3, 3, 3]
    assert tuple(s.zeta) == C


def test_four_tree_forest_fixture():
    # 4 trees, 9 tree edges: 2*9 tree darts + 4 floor edges = 22 oriented edges
    t1 = LabeledTree((-1, 0, 0, 2), (0, 1, 0, 1))
    t2 = LabeledTree((-1, 0, 1), (1, 2, 1))
    t3 = LabeledTree((-1, 0, 1, 1), (1, 2, 1, 2))
    t4 = LabeledTree((-1, 0), (0, -1))
    f = LabeledForest((t1, t2, t3, t4), MotzkinWalk((0, 1, 1, 0, 0)))
    assert f.n_oriented_edges == 22
    C, L = forest_contour(f)
    assert len(C) == f.n_oriented_edges + 1
    assert C[0] == 4 and C[-1] == 0
    s = snake_of_forest(f)
    # step 15 sits on a leaf of the third tree, two levels above the floor
    assert C[15] == 3 and s.zeta[15] == 3
    assert s.W[15] == (f.floor[4], f.floor[3], f.floor[2], 2)
    assert L[15] == 2
    # step 19 is the root of the fourth tree, step 20 its leaf
    assert s.W[19] == (f.floor[4], f.floor[3])
    assert s.W[20] == (0, 0, -1)
    assert all(snake_identities(s, f).values())
    assert forest_of_snake(s) == f


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 6), st.integers(0, 2 ** 32 - 1))
def test_forest_snake_roundtrip(r, seed):
    f = random_forest(np.random.default_rng(seed), r)
    s = snake_of_forest(f)
    assert len(s.zeta) == 2 * f.n_edges + r + 1
    assert all(snake_identities(s, f).values())
    assert forest_of_snake(s) == f


def test_forest_snake_roundtrip_bulk():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        f = random_forest(rng, int(rng.integers(0, 6)), 4)
        assert forest_of_snake(snake_of_forest(f)) == f


def test_malformed_snake():
    f = random_forest(np.random.default_rng(3), 3)
    s = snake_of_forest(f)
    W = list(s.W)
    W[1] = W[1][:-1] + (W[1][-1] + 5,)
    with pytest.raises(MalformedSnake):
        forest_of_snake(DiscreteSnake(s.zeta, tuple(W)))
    with pytest.raises(MalformedSnake):
        forest_of_snake(DiscreteSnake(s.zeta[:-1], s.W))


@pytest.mark.slow
def test_max_label_scaling_slope():
    rng = np.random.default_rng(2024)
    ns = [2 ** k for k in range(10, 17)]
    means = []
    for n in ns:
        vals = [np.abs(sample_labeled_tree(n, rng).labels).max() for _ in range(200)]
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert 0.23 <= slope <= 0.27
