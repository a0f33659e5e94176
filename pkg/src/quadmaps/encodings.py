"""Labeled trees and forests, contour and label sequences, Motzkin walks,
discrete snakes, and exact walk counts.

Plane trees are stored by their preorder parent array: vertex 0 is the root,
vertices are numbered in depth-first order and the children of a vertex are
ordered by increasing id.  The contour of a tree with n edges visits 2n+1
corners; ``C`` carries the extra final value -1.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools
import math

import numpy as np

from .errors import MalformedContour, MalformedSnake

__all__ = [
    "LabeledTree",
    "ContourEncoding",
    "MotzkinWalk",
    "LabeledForest",
    "DiscreteSnake",
    "contour_of_tree",
    "tree_of_contour",
    "contour_vertices",
    "contour_walk",
    "forest_contour",
    "snake_of_forest",
    "forest_of_snake",
    "snake_identities",
    "motzkin_count",
    "motzkin_count_positive",
    "motzkin_count_nonnegative",
    "sample_labeled_tree",
    "sample_plane_tree",
    "enumerate_plane_trees",
    "enumerate_labeled_trees",
    "count_forests",
]


@dataclass(frozen=True, eq=True)
class LabeledTree:
    """Plane tree in preorder with an integer label per vertex.

    ``parent[0] == -1``; labels of adjacent vertices differ by at most one.
    The root label is free (trees grafted on a floor carry the floor label);
    trees fed to the CVS bijection have root label 0.
    """

    parent: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(int(p) for p in self.parent))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))

    def validate(self):
        p, lab = self.parent, self.labels
        if len(p) == 0 or len(p) != len(lab) or p[0] != -1:
            raise ValueError("bad parent array")
        # the parent of v must lie on the ancestral line of v-1
        line = [0]
        for v in range(1, len(p)):
            while line and line[-1] != p[v]:
                line.pop()
            if not line:
                raise ValueError("parent array is not in preorder")
            if abs(lab[v] - lab[p[v]]) > 1:
                raise ValueError("label jump larger than 1 on edge %d" % v)
            line.append(v)
        return self

    @property
    def n_edges(self):
        return len(self.parent) - 1

    @property
    def n_vertices(self):
        return len(self.parent)

    @property
    def root_label(self):
        return self.labels[0]

    def children(self):
        ch = [[] for _ in self.parent]
        for v in range(1, len(self.parent)):
            ch[self.parent[v]].append(v)
        return ch

    def depth(self):
        d = [0] * len(self.parent)
        for v in range(1, len(self.parent)):
            d[v] = d[self.parent[v]] + 1
        return d

    def shifted(self, delta):
        return LabeledTree(self.parent, tuple(x + delta for x in self.labels))

    @staticmethod
    def single(label=0):
        return LabeledTree((-1,), (label,))

    def to_dict(self):
        return {"parent": list(self.parent), "labels": list(self.labels)}

    @staticmethod
    def from_dict(d):
        return LabeledTree(tuple(d["parent"]), tuple(d["labels"])).validate()


@dataclass(frozen=True)
class ContourEncoding:
    """Contour ``C`` (length 2n+2, last value -1) and labels ``L`` (2n+1)."""

    C: tuple
    L: tuple

    @property
    def n(self):
        return (len(self.C) - 2) // 2

    def validate(self):
        C, L = self.C, self.L
        if len(C) < 2 or len(C) % 2 or len(L) != len(C) - 1:
            raise MalformedContour("lengths must be 2n+2 and 2n+1")
        two_n = len(C) - 2
        if C[0] != 0 or C[two_n] != 0 or C[-1] != -1:
            raise MalformedContour("contour must start and end at 0 and finish at -1")
        for i in range(two_n + 1):
            if abs(C[i + 1] - C[i]) != 1:
                raise MalformedContour("contour step %d is not +-1" % i)
            if i < two_n and C[i] < 0:
                raise MalformedContour("contour negative at %d" % i)
        for i in range(two_n):
            if abs(L[i + 1] - L[i]) > 1:
                raise MalformedContour("label step %d larger than 1" % i)
        return self

    def to_csv(self):
        rows = ["step,C,L"]
        for i, (c, l) in enumerate(zip(self.C, self.L)):
            rows.append("%d,%d,%d" % (i, c, l))
        return "\n".join(rows) + "\n"


def contour_vertices(C):
    """Preorder vertex id visited at each contour step 0..2n."""
    two_n = len(C) - 2
    out = [0] * (two_n + 1)
    stack = [0]
    nxt = 1
    for i in range(two_n):
        if C[i + 1] > C[i]:
            stack.append(nxt)
            nxt += 1
        else:
            stack.pop()
        out[i + 1] = stack[-1]
    return out


def contour_walk(parent):
    """Heights and visited vertex ids along the contour of a preorder tree
    (2n+1 entries each, no trailing -1)."""
    C = [0]
    V = [0]
    h = 0
    u = 0
    for v in range(1, len(parent)):
        p = parent[v]
        while u != p:
            u = parent[u]
            h -= 1
            C.append(h)
            V.append(u)
        u = v
        h += 1
        C.append(h)
        V.append(v)
    while u != 0:
        u = parent[u]
        h -= 1
        C.append(h)
        V.append(u)
    return C, V


def contour_of_tree(t):
    """Contour and label sequences of a labeled tree."""
    C, V = contour_walk(t.parent)
    lab = t.labels
    C.append(-1)
    return ContourEncoding(tuple(C), tuple([lab[v] for v in V]))


def tree_of_contour(c):
    """Inverse of :func:`contour_of_tree`; raises MalformedContour."""
    c.validate()
    C, L = c.C, c.L
    parent = [-1]
    labels = [L[0]]
    stack = [0]
    for i in range(len(C) - 2):
        if C[i + 1] > C[i]:
            v = len(parent)
            parent.append(stack[-1])
            labels.append(L[i + 1])
            stack.append(v)
        else:
            stack.pop()
            if labels[stack[-1]] != L[i + 1]:
                raise MalformedContour("label mismatch on return to a vertex at step %d" % (i + 1))
    return LabeledTree(tuple(parent), tuple(labels))


@dataclass(frozen=True)
class MotzkinWalk:
    values: tuple

    def __post_init__(self):
        v = tuple(int(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if not v:
            raise ValueError("a walk has at least one value")
        for a, b in zip(v, v[1:]):
            if abs(a - b) > 1:
                raise ValueError("Motzkin increments must lie in {-1,0,1}")

    @property
    def r(self):
        return len(self.values) - 1

    def reversed(self):
        return MotzkinWalk(self.values[::-1])

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LabeledForest:
    """Sequence of r labeled trees with floor labels M(0..r); tree i hangs
    from floor vertex i and has root label M(i)."""

    trees: tuple
    floor: MotzkinWalk

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if not isinstance(self.floor, MotzkinWalk):
            object.__setattr__(self, "floor", MotzkinWalk(self.floor))
        if len(self.floor) != len(self.trees) + 1:
            raise ValueError("floor must have one more vertex than trees")
        for i, t in enumerate(self.trees):
            if t.root_label != self.floor[i]:
                raise ValueError("root label of tree %d differs from the floor" % i)

    @property
    def r(self):
        return len(self.trees)

    @property
    def n_edges(self):
        return sum(t.n_edges for t in self.trees)

    @property
    def n_oriented_edges(self):
        """Tree edges in both orientations plus the r floor edges, each
        oriented along the floor (the length of the contour)."""
        return 2 * self.n_edges + self.r


def forest_contour(f):
    """(C_F, L_F) of a forest: concatenated shifted tree contours, length
    2n + r + 1, ending at height 0 on the extra floor vertex."""
    r = f.r
    C, L = [], []
    for j, t in enumerate(f.trees):
        c = contour_of_tree(t)
        shift = r - j
        C.extend(x + shift for x in c.C[:-1])
        L.extend(c.L)
    C.append(0)
    L.append(f.floor[r])
    return tuple(C), tuple(L)


@dataclass(frozen=True)
class DiscreteSnake:
    """Path-valued encoding of a labeled forest.

    ``zeta[i]`` is the distance from the vertex visited at step i to the
    extra floor vertex along the floor-rooted tree; ``W[i][j]`` is the label of
    its ancestor at distance j from that vertex.
    """

    zeta: tuple
    W: tuple

    def to_dict(self):
        return {"zeta": list(self.zeta), "W": [list(w) for w in self.W]}

    @staticmethod
    def from_dict(d):
        return DiscreteSnake(tuple(d["zeta"]), tuple(tuple(w) for w in d["W"]))


def snake_of_forest(f):
    """Discrete snake of a labeled forest."""
    r = f.r
    stack = [f.floor[j] for j in range(r, -1, -1)]
    zeta, W = [], []

    def record():
        zeta.append(len(stack) - 1)
        W.append(tuple(stack))

    for t in f.trees:
        ch = t.children()
        record()
        work = [(0, 0)]
        while work:
            v, k = work[-1]
            if k < len(ch[v]):
                work[-1] = (v, k + 1)
                w = ch[v][k]
                work.append((w, 0))
                stack.append(t.labels[w])
                record()
            else:
                work.pop()
                if work:
                    stack.pop()
                    record()
        stack.pop()
    record()
    return DiscreteSnake(tuple(zeta), tuple(W))


def _first_hits(zeta, r):
    hits = [None] * (r + 1)
    for i, z in enumerate(zeta):
        j = r - z
        if 0 <= j <= r and hits[j] is None:
            hits[j] = i
    return hits


def forest_of_snake(s):
    """Inverse of :func:`snake_of_forest`; raises MalformedSnake."""
    zeta, W = s.zeta, s.W
    if not zeta or len(zeta) != len(W):
        raise MalformedSnake("zeta and W must have the same positive length")
    for i in range(len(zeta)):
        if len(W[i]) != zeta[i] + 1:
            raise MalformedSnake("W(%d) has length %d, expected %d" % (i, len(W[i]), zeta[i] + 1))
        w = W[i]
        if any(abs(a - b) > 1 for a, b in zip(w, w[1:])):
            raise MalformedSnake("W(%d) is not a Motzkin walk" % i)
    r = zeta[0]
    if zeta[-1] != 0 or min(zeta) < 0:
        raise MalformedSnake("zeta must end at 0 and stay non-negative")
    for i in range(len(zeta) - 1):
        if zeta[i + 1] == zeta[i] + 1:
            if W[i + 1][:-1] != W[i]:
                raise MalformedSnake("W(%d) does not extend W(%d)" % (i + 1, i))
        elif zeta[i + 1] == zeta[i] - 1:
            if W[i + 1] != W[i][:-1]:
                raise MalformedSnake("W(%d) is not a prefix of W(%d)" % (i + 1, i))
        else:
            raise MalformedSnake("zeta step %d is not +-1" % i)
    floor = [W[0][r - j] for j in range(r + 1)]
    hits = _first_hits(zeta, r)
    trees = []
    for j in range(r):
        a, b = hits[j], hits[j + 1]
        base = r - j
        C = [z - base for z in zeta[a:b]] + [-1]
        L = [W[i][-1] for i in range(a, b)]
        try:
            trees.append(tree_of_contour(ContourEncoding(tuple(C), tuple(L))))
        except MalformedContour as exc:
            raise MalformedSnake("tree %d: %s" % (j, exc)) from None
    return LabeledForest(tuple(trees), MotzkinWalk(floor))


def snake_identities(s, f):
    """Check the reconstruction identities linking a snake to its forest.

    Returns a dict of booleans: ``contour`` (C_F = zeta), ``tree_index``
    (r + 1 - running min of zeta is the index of the current tree),
    ``height`` (zeta - running min is the height inside the current tree),
    ``label`` (L_F(i) = W(i, zeta(i))) and ``floor``
    (M(j) = W(first time zeta = r - j, r - j)).
    """
    r = f.r
    C, L = forest_contour(f)
    zeta, W = s.zeta, s.W
    out = {"contour": tuple(zeta) == tuple(C)}
    out["label"] = all(W[i][zeta[i]] == L[i] for i in range(len(zeta)))
    hits = _first_hits(zeta, r)
    out["floor"] = all(hits[j] is not None and W[hits[j]][r - j] == f.floor[j]
                       for j in range(r + 1))
    idx, heights = [], []
    for j, t in enumerate(f.trees):
        h = contour_of_tree(t).C[:-1]
        idx.extend([j + 1] * len(h))
        heights.extend(h)
    run = list(itertools.accumulate(zeta, min))
    out["tree_index"] = all(r + 1 - run[i] == idx[i] for i in range(len(idx)))
    out["height"] = all(zeta[i] - run[i] == heights[i] for i in range(len(idx)))
    return out


# counting ----------------------------------------------------------------

def motzkin_count(a, b, r):
    """Number of Motzkin walks of duration r from a to b (a trinomial
    coefficient)."""
    if r < 0:
        raise ValueError("duration must be non-negative")
    return _trinomial(r, b - a)


@lru_cache(maxsize=None)
def _trinomial(r, k):
    k = abs(k)
    if k > r:
        return 0
    # walks with u up-steps, u+k down-steps... choose positions
    total = 0
    for up in range(0, (r - k) // 2 + 1):
        down = up + k
        flat = r - up - down
        total += math.factorial(r) // (math.factorial(up) * math.factorial(down) * math.factorial(flat))
    return total


@lru_cache(maxsize=None)
def _count_above(a, b, r, floor):
    """Walks a -> b of duration r whose interior values are >= floor."""
    if r == 0:
        return 1 if a == b else 0
    if abs(a - b) > r:
        return 0
    if r == 1:
        return 1
    total = 0
    for d in (-1, 0, 1):
        x = a + d
        if x >= floor:
            total += _count_above(x, b, r - 1, floor) if r - 1 > 0 else (1 if x == b else 0)
    return total


def motzkin_count_positive(a, b, r):
    """Walks of duration r from a to b whose values are > 0 except possibly
    at the two endpoints."""
    if r < 0 or (r == 0 and a != b):
        raise ValueError("need r >= 1 or (a == b and r == 0)")
    return _count_above(a, b, r, 1)


def motzkin_count_nonnegative(a, b, r):
    """Walks of duration r from a to b whose interior values are >= 0."""
    if r < 0:
        raise ValueError("duration must be non-negative")
    return _count_above(a, b, r, 0)


def count_forests(n_edges, r):
    """Plane forests with r trees and n_edges edges in total:
    (r / (2n + r)) * binom(2n + r, n)."""
    if r == 0:
        return 1 if n_edges == 0 else 0
    return r * math.comb(2 * n_edges + r, n_edges) // (2 * n_edges + r)


# sampling and enumeration ------------------------------------------------

def sample_plane_tree(n, rng):
    """Uniform plane tree with n edges as a preorder parent array.

    A uniformly shuffled sequence of n up-steps and n+1 down-steps has
    exactly one rotation whose partial sums stay >= 0 before the last step
    (the cycle lemma); dropping that last step leaves a uniform Dyck path.
    """
    steps = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n + 1, dtype=np.int64)])
    steps = rng.permutation(steps)
    s = np.cumsum(steps)
    k = int(np.argmin(s)) + 1
    dyck = np.concatenate([steps[k:], steps[:k]])[:-1]
    parent = np.empty(n + 1, dtype=np.int64)
    parent[0] = -1
    stack = [0]
    nxt = 1
    for step in dyck.tolist():
        if step > 0:
            parent[nxt] = stack[-1]
            stack.append(nxt)
            nxt += 1
        else:
            stack.pop()
    return parent


def sample_labeled_tree(n, rng):
    """Uniform labeled tree with n edges and root label 0: uniform plane
    tree, independent uniform increments in {-1, 0, 1} along edges."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parent = sample_plane_tree(n, rng)
    inc = rng.integers(-1, 2, size=n + 1)
    labels = [0] * (n + 1)
    par = parent.tolist()
    incl = inc.tolist()
    for v in range(1, n + 1):
        labels[v] = labels[par[v]] + incl[v]
    return LabeledTree(tuple(par), tuple(labels))


def enumerate_plane_trees(n):
    """All plane trees with n edges (preorder parent arrays)."""
    out = []

    def rec(parent, stack, ups, downs):
        if ups == n and downs == n:
            out.append(tuple(parent))
            return
        if ups < n:
            v = len(parent)
            parent.append(stack[-1])
            stack.append(v)
            rec(parent, stack, ups + 1, downs)
            stack.pop()
            parent.pop()
        if downs < ups:
            top = stack.pop()
            rec(parent, stack, ups, downs + 1)
            stack.append(top)

    rec([-1], [0], 0, 0)
    return out


def enumerate_labeled_trees(n, root_label=0):
    """All 3^n * Catalan(n) labeled trees with n edges."""
    out = []
    for parent in enumerate_plane_trees(n):
        for inc in itertools.product((-1, 0, 1), repeat=n):
            labels = [root_label] * (n + 1)
            for v in range(1, n + 1):
                labels[v] = labels[parent[v]] + inc[v - 1]
            out.append(LabeledTree(parent, tuple(labels)))
    return out
