"""Schemes and the decomposition of labeled maps with several faces.

A labeled map of LM^(k+1) is cut into

* its scheme: the 2-core (degree-1 vertices pruned repeatedly) with the
  degree-2 vertices erased, plus distinguished null vertices;
* an admissible labeling of the scheme vertices;
* a walk network: the labels along the chain that replaces each edge;
* one labeled forest per oriented edge, grafted on the left of its chain;
* the position of the root among the oriented edges of the forests.

Conventions.  The face of dart d (its orbit under phi = sigma∘alpha) is the
face to the left of d, and the corner of d lies between sigma^-1(d) and d.
Tree i of the forest F_e hangs in the corner of the (i+1)-th chain dart of
e, so walking around the face of e meets tree 0, chain dart 1, tree 1, ...,
tree r-1, chain dart r: the contour order of F_e.  The root of m is stored
as (e*, index of the root in that order).

Planted schemes keep the root inside the scheme.  The path from the root
vertex v* down to the 2-core becomes the pendant edge e** (from the core
vertex x to v**, duration R >= 0), and x counts as a branch vertex.

* F_{e**} has R+1 trees: the subtrees left of the path, the last one being
  the subtrees of v* met before the root dart.  Its floor is extended by a
  virtual vertex with the label of v*.
* F_{ē**} has R+1 trees: the subtrees of v* from the root dart on, the
  subtrees right of the path, and last the tree that hangs in the corner of
  the first chain dart of e' = sigma(e**) (the stolen tree).  Its floor is
  extended by M_{e'}(1).
* F_{e'} has r_{e'} - 1 trees (positions 1..r_{e'}-1), floor M_{e'}(1..r).

The root of m is the first oriented edge of F_{ē**}.  When R = 0 and the root
lies on the core, F_{ē**} is a single one-vertex tree.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools
import math
from typing import Optional

from .encodings import (
    _count_above,
    LabeledForest,
    LabeledTree,
    MotzkinWalk,
    motzkin_count,
    motzkin_count_nonnegative,
    motzkin_count_positive,
    sample_labeled_tree,
)
from .errors import IncompatibleComponents, NotLabeledMap, TooLarge
from .multipoint import LabeledMap
from .planar_map import (
    HalfEdgeMap,
    add_pendant,
    canonical_code,
    canonical_form,
    enumerate_unrooted_maps,
    unrooted_canonical_code,
)

__all__ = [
    "PreScheme",
    "Scheme",
    "AdmissibleLabeling",
    "WalkNetwork",
    "SchemeDecomposition",
    "FREE",
    "POSITIVE",
    "POSITIVE_TO_ZERO",
    "THIN",
    "subdivide",
    "make_scheme",
    "enumerate_preschemes",
    "enumerate_schemes",
    "walk_count",
    "decompose",
    "reconstruct",
    "decompose_planted",
    "reconstruct_planted",
    "random_decomposition",
    "trivial_decomposition",
    "count_labeled_maps_exact",
    "scheme_census",
]

# walk constraints per canonical edge
FREE = "free"                   # E_O: any Motzkin walk
POSITIVE = "positive"           # E_I: values > 0
POSITIVE_TO_ZERO = "positive_to_zero"    # non-thin E_N: > 0 except the end, ends at 0
THIN = "thin"                   # thin E_N: values >= 0, ends at 0


def subdivide(m, d):
    """Insert a degree-2 vertex on the edge of ``d``.

    Old darts keep their ids.  New darts: ``2E`` (from the new vertex back to
    the origin of d, in the face of alpha(d)) and ``2E+1`` (from the new
    vertex on to the head of d, in the face of d).
    """
    n = m.n_darts
    a, b = n, n + 1
    d2 = m.alpha[d]
    alpha = list(m.alpha) + [d, d2]
    alpha[d] = a
    alpha[d2] = b
    sigma = list(m.sigma) + [b, a]
    return HalfEdgeMap(alpha, sigma, m.root, check=False)


def _segment(sigma, start, stop):
    """Darts from ``start`` (inclusive) to ``stop`` (exclusive) around a vertex."""
    out = []
    d = start
    while d != stop:
        out.append(d)
        d = sigma[d]
    return out


# pre-schemes --------------------------------------------------------------

@dataclass(frozen=True)
class PreScheme:
    """Unrooted map with k+1 named faces and all degrees >= 3."""

    m: HalfEdgeMap
    face_names: tuple

    @property
    def k(self):
        return len(self.face_names) - 1

    @property
    def dominant(self):
        return self.m.n_edges == 3 * self.k - 3

    def dart_names(self):
        inv = {f: i for i, f in enumerate(self.face_names)}
        return [inv[f] for f in self.m.face_of]

    def is_valid(self):
        m = self.m
        if m.n_faces != self.k + 1 or any(len(v) < 3 for v in m.vertices):
            return False
        names = self.dart_names()
        around = [{names[d] for d in v} for v in m.vertices]
        return all(any({0, i} <= s for s in around) for i in range(1, self.k + 1))

    def code(self, inner_names=True):
        names = self.dart_names()
        data = names if inner_names else [x == 0 for x in names]
        return unrooted_canonical_code(self.m, data)[0]


def enumerate_preschemes(k, dominant_only=False):
    """All pre-schemes with k+1 named faces, one per isomorphism class.

    Euler's formula with degrees >= 3 gives at most 3k-3 edges; each
    unrooted map is tried with every naming of its faces and namings related
    by an automorphism are merged through the decorated canonical code.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out = {}
    lo = 3 * k - 3 if dominant_only else k
    for n_edges in range(max(lo, 1), 3 * k - 2):
        for m in enumerate_unrooted_maps(n_edges, max_faces=k + 1):
            if m.n_faces != k + 1 or any(len(v) < 3 for v in m.vertices):
                continue
            for perm in itertools.permutations(range(k + 1)):
                p = PreScheme(m, perm)
                if p.is_valid():
                    out.setdefault(p.code(), p)
    return list(out.values())


# schemes ------------------------------------------------------------------

@dataclass(frozen=True)
class Scheme:
    """Scheme in canonical dart numbering.

    ``face_names[i]`` is the face id of f_i, ``null_vertices`` the null
    vertex ids and ``v_star_star`` the degree-1 vertex of a planted scheme.
    """

    m: HalfEdgeMap
    face_names: tuple
    null_vertices: frozenset
    v_star_star: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "face_names", tuple(int(x) for x in self.face_names))
        object.__setattr__(self, "null_vertices", frozenset(int(x) for x in self.null_vertices))

    @property
    def k(self):
        return len(self.face_names) - 1

    @property
    def planted(self):
        return self.v_star_star is not None

    @cached_property
    def dart_names(self):
        inv = {f: i for i, f in enumerate(self.face_names)}
        return tuple(inv[f] for f in self.m.face_of)

    @cached_property
    def vertex_face_names(self):
        nm = self.dart_names
        return tuple(frozenset(nm[d] for d in v) for v in self.m.vertices)

    def degree(self, v):
        return len(self.m.vertices[v])

    def tail(self, d):
        return self.m.vertex_of[d]

    def head(self, d):
        return self.m.vertex_of[self.m.alpha[d]]

    def on_boundary(self, v):
        """v is incident to f_0 and to some f_i, i >= 1."""
        s = self.vertex_face_names[v]
        return 0 in s and len(s) > 1

    def edge_on_boundary(self, d):
        a, b = self.dart_names[d], self.dart_names[self.m.alpha[d]]
        return a != b and 0 in (a, b)

    def vertex_class(self, v):
        if v in self.null_vertices:
            return "N"
        return "I" if self.on_boundary(v) else "O"

    def edge_class(self, d):
        if not self.edge_on_boundary(d):
            return "O"
        ends = (self.tail(d), self.head(d))
        return "N" if any(v in self.null_vertices for v in ends) else "I"

    @cached_property
    def canonical_darts(self):
        """One dart per edge (edges ordered by their smaller dart).

        e** points to v**; E_N edges point to a null vertex, a degree-2 one
        when there is a choice; remaining ties go to the smaller dart id.
        """
        alpha = self.m.alpha
        out = []
        for d in range(self.m.n_darts):
            if d > alpha[d]:
                continue
            pair = (d, alpha[d])
            if self.planted and self.v_star_star in (self.head(d), self.tail(d)):
                out.append(d if self.head(d) == self.v_star_star else alpha[d])
            elif self.edge_class(d) == "N":
                cands = [x for x in pair if self.head(x) in self.null_vertices]
                cands.sort(key=lambda x: (self.degree(self.head(x)) != 2, x))
                out.append(cands[0])
            else:
                out.append(d)
        return tuple(out)

    @cached_property
    def edge_index(self):
        """Per dart: index of its edge in ``canonical_darts``."""
        idx = [0] * self.m.n_darts
        for i, e in enumerate(self.canonical_darts):
            idx[e] = idx[self.m.alpha[e]] = i
        return tuple(idx)

    def is_canonical(self, d):
        return self.canonical_darts[self.edge_index[d]] == d

    def is_thin(self, e):
        """Thin edges: the E_N edge pointing to a degree-2 null vertex with
        f_0 on its left, and every E_N edge touching a null vertex of
        degree >= 3."""
        if self.edge_class(e) != "N":
            return False
        h = self.head(e)
        if self.degree(h) == 2 and h in self.null_vertices:
            return self.dart_names[e] == 0
        return True

    def walk_kind(self, e):
        """Constraint on M_e for the canonical dart e."""
        c = self.edge_class(e)
        if c == "O":
            return FREE
        if c == "I":
            return POSITIVE
        return THIN if self.is_thin(e) else POSITIVE_TO_ZERO

    @property
    def e_star_star(self):
        if not self.planted:
            return None
        return next(e for e in self.canonical_darts if self.head(e) == self.v_star_star)

    @property
    def e_prime(self):
        """The dart following e** around its origin."""
        e = self.e_star_star
        return None if e is None else self.m.sigma[e]

    def partition_sizes(self):
        """((|V_N|, |V_I|, |V_O|), (|E_N|, |E_I|, |E_O|))."""
        vc = [self.vertex_class(v) for v in range(self.m.n_vertices)]
        ec = [self.edge_class(e) for e in self.canonical_darts]
        return (tuple(vc.count(c) for c in "NIO"), tuple(ec.count(c) for c in "NIO"))

    @property
    def dominant(self):
        nulls = self.null_vertices
        if len(nulls) != self.k or any(self.degree(v) != 2 for v in nulls):
            return False
        return all(self.degree(v) == 3 for v in range(self.m.n_vertices)
                   if v not in nulls and v != self.v_star_star)

    def defects(self):
        """Violated scheme conditions (empty when the scheme is valid)."""
        m, k = self.m, self.k
        out = []
        if sorted(self.face_names) != list(range(m.n_faces)):
            return ["face names are not a bijection onto the faces"]
        vf = self.vertex_face_names
        for i in range(1, k + 1):
            if not any({0, i} <= s for s in vf):
                out.append(f"f_0 and f_{i} share no vertex")
            if not any(i in vf[v] for v in self.null_vertices):
                out.append(f"f_{i} has no null vertex")
        ones = [v for v in range(m.n_vertices) if self.degree(v) == 1]
        if self.planted:
            if ones != [self.v_star_star]:
                out.append("a planted scheme has exactly one degree-1 vertex, v**")
        elif ones:
            out.append("degree-1 vertex in a scheme")
        for v in range(m.n_vertices):
            if v == self.v_star_star:
                continue
            if self.degree(v) == 2:
                if not self.on_boundary(v):
                    out.append(f"degree-2 vertex {v} is not incident to f_0 and another face")
                if v not in self.null_vertices:
                    out.append(f"degree-2 vertex {v} is not null")
        for v in self.null_vertices:
            if not self.on_boundary(v):
                out.append(f"null vertex {v} is not incident to f_0 and another face")
        for e in self.canonical_darts:
            u, w = self.tail(e), self.head(e)
            if u == w:
                continue
            du, dw = self.degree(u), self.degree(w)
            if du == 2 and dw == 2:
                out.append(f"adjacent degree-2 vertices {u}, {w}")
            for a, b, da in ((u, w, du), (w, u, dw)):
                if da == 2 and a in self.null_vertices and b in self.null_vertices:
                    out.append(f"degree-2 null vertex {a} next to null vertex {b}")
        return out

    def validate(self):
        bad = self.defects()
        if bad:
            raise IncompatibleComponents("scheme", "; ".join(bad))
        return self

    def dart_data(self):
        vo = self.m.vertex_of
        return [(self.dart_names[d], vo[d] in self.null_vertices, vo[d] == self.v_star_star)
                for d in range(self.m.n_darts)]

    @cached_property
    def code(self):
        return canonical_code(self.m, self.dart_data())

    def to_dict(self):
        return {"map": self.m.to_dict(), "face_names": list(self.face_names),
                "null_vertices": sorted(self.null_vertices),
                "v_star_star": self.v_star_star}

    @classmethod
    def from_dict(cls, d):
        mm = d["map"]
        m = HalfEdgeMap(mm["alpha"], mm["sigma"], mm["root"])
        return cls(m, tuple(d["face_names"]), frozenset(d["null_vertices"]), d["v_star_star"])


def make_scheme(m, dart_names, null_darts=(), vss_dart=None):
    """Scheme in canonical numbering from per-dart face names, darts whose
    origin is null and (planted) a dart whose origin is v**.

    Returns (scheme, old-to-new dart map).
    """
    vo = m.vertex_of
    nulls = {vo[d] for d in null_darts}
    vss = None if vss_dart is None else vo[vss_dart]
    data = [(dart_names[d], vo[d] in nulls, vo[d] == vss) for d in range(m.n_darts)]
    _, roots = unrooted_canonical_code(m, data)
    if len(roots) != 1:
        raise IncompatibleComponents("scheme", "non-trivial automorphism group")
    cm, cdata, lab = canonical_form(m, data, root=roots[0])
    names = [x[0] for x in cdata]
    face_names = [None] * (max(names) + 1)
    for d, i in enumerate(names):
        face_names[i] = cm.face_of[d]
    cvo = cm.vertex_of
    null_set = frozenset(cvo[d] for d in range(cm.n_darts) if cdata[d][1])
    vnew = None
    if vss is not None:
        vnew = cvo[lab[vss_dart]]
    return Scheme(cm, tuple(face_names), null_set, vnew), lab


def _boundary_darts(m, names):
    """One dart per edge incident to f_0 and another face."""
    out = []
    for d in range(m.n_darts):
        a = m.alpha[d]
        if d < a and names[d] != names[a] and 0 in (names[d], names[a]):
            out.append(d)
    return out


def _null_choices(m, names, k, vss_dart=None, dominant_only=False):
    """Schemes obtained from a map with face names by choosing null vertices
    of degree >= 3 and edges to split with a degree-2 null vertex."""
    vo = m.vertex_of
    around = [{names[d] for d in v} for v in m.vertices]
    cand = [v for v in range(m.n_vertices)
            if len(m.vertices[v]) >= 3 and 0 in around[v] and len(around[v]) > 1]
    bdry = _boundary_darts(m, names)
    sizes = [0] if dominant_only else range(len(cand) + 1)
    for size in sizes:
        for S in itertools.combinations(cand, size):
            Sset = set(S)
            free = [d for d in bdry if vo[d] not in Sset and vo[m.alpha[d]] not in Sset]
            tsizes = [k] if dominant_only else range(len(free) + 1)
            for tsize in tsizes:
                for T in itertools.combinations(free, tsize):
                    mm, nm = m, list(names)
                    null_darts = [m.vertices[v][0] for v in S]
                    for d in T:
                        n = mm.n_darts
                        nm += [nm[mm.alpha[d]], nm[d]]
                        mm = subdivide(mm, d)
                        null_darts.append(n)
                    s, _ = make_scheme(mm, nm, null_darts, vss_dart)
                    if not s.defects():
                        yield s


def _planted_bases(p):
    """(map, per-dart names, dart at v**) for every way to attach the pendant
    edge to a pre-scheme: in a corner of a vertex, or on a new degree-3
    vertex subdividing an edge (two sides)."""
    m, names = p.m, p.dart_names()
    for d in range(m.n_darts):
        yield add_pendant(m, d), names + [names[d], names[d]], m.n_darts + 1, False
    for d in range(m.n_darts):
        if d > m.alpha[d]:
            continue
        n = m.n_darts
        m2 = subdivide(m, d)
        nm2 = names + [names[m.alpha[d]], names[d]]
        for corner in (n, n + 1):
            yield (add_pendant(m2, corner), nm2 + [nm2[corner], nm2[corner]],
                   m2.n_darts + 1, True)


def enumerate_schemes(k, dominant_only=False, planted=False):
    """All schemes (or planted schemes) with k+1 named faces."""
    out = {}
    for p in enumerate_preschemes(k, dominant_only=dominant_only):
        if planted:
            bases = [(m, nm, vss) for m, nm, vss, on_edge in _planted_bases(p)
                     if on_edge or not dominant_only]
        else:
            bases = [(p.m, p.dart_names(), None)]
        for m, nm, vss in bases:
            for s in _null_choices(m, nm, k, vss, dominant_only):
                if dominant_only and not s.dominant:
                    continue
                out.setdefault(s.code, s)
    return list(out.values())


# components -----------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleLabeling:
    """Label per scheme vertex: 0 on V_N, > 0 on V_I."""

    ell: tuple

    def __post_init__(self):
        object.__setattr__(self, "ell", tuple(int(x) for x in self.ell))

    def defects(self, scheme):
        if len(self.ell) != scheme.m.n_vertices:
            return ["one label per scheme vertex expected"]
        out = []
        for v, x in enumerate(self.ell):
            c = scheme.vertex_class(v)
            if c == "N" and x != 0:
                out.append(f"null vertex {v} has label {x}")
            if c == "I" and x <= 0:
                out.append(f"vertex {v} of V_I has label {x}")
        return out


@dataclass(frozen=True)
class WalkNetwork:
    """Walk M_e per canonical dart, in the order of ``scheme.canonical_darts``."""

    walks: tuple

    def __post_init__(self):
        object.__setattr__(self, "walks", tuple(
            w if isinstance(w, MotzkinWalk) else MotzkinWalk(w) for w in self.walks))

    def walk(self, scheme, d):
        w = self.walks[scheme.edge_index[d]]
        return w if scheme.is_canonical(d) else w.reversed()

    def duration(self, scheme, d):
        return self.walks[scheme.edge_index[d]].r

    @property
    def total_duration(self):
        return sum(w.r for w in self.walks)

    def defects(self, scheme, labeling):
        if len(self.walks) != len(scheme.canonical_darts):
            return ["one walk per edge expected"]
        out = []
        ell = labeling.ell
        ess = scheme.e_star_star
        for e, w in zip(scheme.canonical_darts, self.walks):
            if w.r < 1 and e != ess:
                out.append(f"walk on edge {e} has duration {w.r}")
            if w[0] != ell[scheme.tail(e)] or w[w.r] != ell[scheme.head(e)]:
                out.append(f"walk on edge {e} does not join the labels of its ends")
            kind = scheme.walk_kind(e)
            vals = w.values
            if kind == POSITIVE and min(vals) < 1:
                out.append(f"walk on E_I edge {e} is not positive")
            elif kind == POSITIVE_TO_ZERO and (vals[-1] != 0 or min(vals[:-1]) < 1):
                out.append(f"walk on E_N edge {e} is not positive before its end at 0")
            elif kind == THIN and (vals[-1] != 0 or min(vals) < 0):
                out.append(f"walk on thin edge {e} is not non-negative ending at 0")
        return out


def walk_count(kind, a, b, r):
    """Number of walks a -> b of duration r obeying the constraint ``kind``.

    A thin walk is shifted up by one and given one more step down to 0, so
    its count is the positive count W+(a+1, 0; r+1).
    """
    if r < 0:
        return 0
    if kind == FREE:
        return motzkin_count(a, b, r)
    if kind == POSITIVE:
        if a < 1 or b < 1:
            return 0
        return motzkin_count_positive(a, b, r) if r > 0 or a == b else 0
    if b != 0:
        return 0
    if kind == POSITIVE_TO_ZERO:
        return motzkin_count_positive(a, 0, r) if a > 0 and r > 0 else 0
    if kind == THIN:
        return motzkin_count_nonnegative(a, 0, r) if a >= 0 else 0
    raise ValueError(f"unknown walk constraint {kind!r}")


@dataclass(frozen=True)
class SchemeDecomposition:
    """Scheme, labeling, walk network, one forest per dart and the root.

    ``root`` is (dart e*, index in the contour of F_{e*}); planted
    decompositions carry ``root = None`` (the root is implied).
    """

    scheme: Scheme
    labeling: AdmissibleLabeling
    walks: WalkNetwork
    forests: tuple
    root: Optional[tuple] = None

    @property
    def n_edges(self):
        return sum(f.n_oriented_edges for f in self.forests) // 2

    def expected_floor(self, d):
        s = self.scheme
        w = self.walks.walk(s, d).values
        if s.planted:
            ess = s.e_star_star
            if d == ess:
                return w + (w[-1],)
            if d == s.m.alpha[ess]:
                return w + (self.walks.walk(s, s.e_prime)[1],)
            if d == s.e_prime:
                return w[1:]
        return w

    def defects(self):
        """Violations as (constraint, message) pairs."""
        s = self.scheme
        out = [("scheme", x) for x in s.defects()]
        out += [("labeling", x) for x in self.labeling.defects(s)]
        if out:
            return out
        out += [("walk", x) for x in self.walks.defects(s, self.labeling)]
        if out:
            return out
        if len(self.forests) != s.m.n_darts:
            return [("forest", "one forest per dart expected")]
        for d, f in enumerate(self.forests):
            if f.floor.values != self.expected_floor(d):
                out.append(("forest", f"forest of dart {d} does not sit on its walk"))
        if s.planted:
            if self.root is not None:
                out.append(("root", "planted decompositions carry no explicit root"))
        elif self.root is None:
            out.append(("root", "missing root"))
        else:
            e, i = self.root
            if not (0 <= e < s.m.n_darts and 0 <= i < self.forests[e].n_oriented_edges):
                out.append(("root", f"root {self.root} outside the forests"))
        return out


# decomposition ----------------------------------------------------------------

def _prune(m):
    """Darts of the 2-core, and for each pruned vertex its dart toward the core."""
    alive = [True] * m.n_darts
    vo, alpha = m.vertex_of, m.alpha
    deg = [len(v) for v in m.vertices]
    up = [-1] * m.n_vertices
    stack = [v for v in range(m.n_vertices) if deg[v] == 1]
    while stack:
        v = stack.pop()
        if deg[v] != 1:
            continue
        d = next(x for x in m.vertices[v] if alive[x])
        alive[d] = alive[alpha[d]] = False
        up[v] = d
        deg[v] = 0
        w = vo[alpha[d]]
        deg[w] -= 1
        if deg[w] == 1:
            stack.append(w)
    return alive, up


def _rotation_in(m, alive):
    """Next and previous live dart around each vertex, for live darts."""
    nxt, prv = {}, {}
    sigma = m.sigma
    for d in range(m.n_darts):
        if alive[d]:
            e = sigma[d]
            while not alive[e]:
                e = sigma[e]
            nxt[d] = e
            prv[e] = d
    return nxt, prv


def _tree_from_segment(m, seg, labels, root_label):
    """Labeled tree hanging on the rotation segment ``seg`` at one vertex,
    and its darts in contour order."""
    if not seg:
        return LabeledTree.single(root_label), []
    sigma, alpha, phi, vo = m.sigma, m.alpha, m.phi, m.vertex_of
    stop = sigma[seg[-1]]
    parent, lab, stack, seen, darts = [-1], [root_label], [0], set(), []
    d = seg[0]
    while d != stop:
        darts.append(d)
        if alpha[d] in seen:
            stack.pop()
        else:
            parent.append(stack[-1])
            lab.append(labels[vo[alpha[d]]])
            stack.append(len(parent) - 1)
        seen.add(d)
        d = phi[d]
    return LabeledTree(tuple(parent), tuple(lab)), darts


def _check_lm(lm):
    lm.validate()
    if lm.k < 2:
        raise NotLabeledMap("schemes need at least 3 faces")
    bad = lm.lm_defect()
    if bad:
        raise NotLabeledMap(bad)


def _cut(lm, alive, branch, vss=None, virtual=None):
    """Chains of the live part between branch vertices, split at null
    vertices of degree 2, as a scheme plus the m-darts of each scheme dart.

    ``virtual = (x, d0)`` adds a pendant scheme edge of duration 0 at x,
    placed just before the chain starting with d0.
    """
    m = lm.m
    vo, alpha = m.vertex_of, m.alpha
    lab = lm.labels
    fname = [lm.face_index()[f] for f in m.face_of]
    nxt, _ = _rotation_in(m, alive)
    starts = [d for d in range(m.n_darts) if alive[d] and vo[d] in branch]
    chains = {}
    for d in starts:
        seq = [d]
        while vo[alpha[seq[-1]]] not in branch:
            seq.append(nxt[alpha[seq[-1]]])
        chains[d] = seq

    def rev(seq):
        return [alpha[c] for c in reversed(seq)]

    pieces = []          # pairs (chain, reverse chain)
    split_vertices = []
    done = set()
    for d in starts:
        if d in done:
            continue
        seq = chains[d]
        done.add(d)
        done.add(alpha[seq[-1]])
        a, b = fname[seq[0]], fname[alpha[seq[0]]]
        if a != b and 0 in (a, b):
            if a != 0:
                seq = rev(seq)
            ls = [lab[vo[seq[0]]]] + [lab[vo[alpha[c]]] for c in seq]
            zeros = [i for i in range(1, len(seq)) if ls[i] == 0]
            if ls[0] > 0 and ls[-1] > 0 and zeros:
                t = zeros[-1]
                first, second = seq[:t], rev(seq[t:])
                pieces += [(first, rev(first)), (second, rev(second))]
                split_vertices.append(vo[alpha[seq[t - 1]]])
                continue
        pieces.append((seq, rev(seq)))

    chain_of = []
    for p, q in pieces:
        chain_of += [p, q]
    n_sd = len(chain_of)
    first_of = {c[0]: i for i, c in enumerate(chain_of)}
    s_alpha = [i ^ 1 for i in range(n_sd)]
    s_sigma = [first_of[nxt[c[0]]] for c in chain_of]
    names = [fname[c[0]] for c in chain_of]
    vlabel = [lab[vo[c[0]]] for c in chain_of]
    if virtual is not None:
        x, d0 = virtual
        e, eb = n_sd, n_sd + 1
        chain_of += [[], []]
        s_alpha += [eb, e]
        target = first_of[d0]
        before = s_sigma.index(target)
        s_sigma[before] = e
        s_sigma += [target, eb]
        names += [fname[d0], fname[d0]]
        vlabel += [lab[x], lab[x]]
        vss_dart = eb
    else:
        vss_dart = None if vss is None else first_of[next(d for d in starts if vo[d] == vss)]
    sm = HalfEdgeMap(s_alpha, s_sigma, 0, check=False)
    null_darts = []
    for i, c in enumerate(chain_of):
        if not c:
            continue
        v = vo[c[0]]
        if v in split_vertices:
            null_darts.append(i)
        elif v != vss and lab[v] == 0:
            around = {fname[x] for x in m.vertices[v]}
            if 0 in around and len(around) > 1:
                null_darts.append(i)
    scheme, relab = make_scheme(sm, names, null_darts, vss_dart)
    new_chain = [None] * len(chain_of)
    new_label = [0] * scheme.m.n_vertices
    for old, new in enumerate(relab):
        new_chain[new] = chain_of[old]
        new_label[scheme.m.vertex_of[new]] = vlabel[old]
    return scheme, new_chain, new_label


def _walks(scheme, chains, ell, labels, vo, alpha):
    walks = []
    for e in scheme.canonical_darts:
        vals = [ell[scheme.tail(e)]] + [labels[vo[alpha[c]]] for c in chains[e]]
        walks.append(MotzkinWalk(vals))
    return WalkNetwork(tuple(walks))


def decompose(lm):
    """Scheme decomposition of a rooted labeled map of LM^(k+1), k >= 2."""
    _check_lm(lm)
    m = lm.m
    alive, _ = _prune(m)
    vo, alpha, sigma = m.vertex_of, m.alpha, m.sigma
    cdeg = [0] * m.n_vertices
    for d in range(m.n_darts):
        cdeg[vo[d]] += alive[d]
    branch = {v for v in range(m.n_vertices) if cdeg[v] >= 3}
    scheme, chains, ell = _cut(lm, alive, branch)
    walks = _walks(scheme, chains, ell, lm.labels, vo, alpha)
    _, prv = _rotation_in(m, alive)
    forests, root = [], None
    for d, ch in enumerate(chains):
        trees, order = [], []
        for c in ch:
            t, darts = _tree_from_segment(m, _segment(sigma, sigma[prv[c]], c),
                                          lm.labels, lm.labels[vo[c]])
            trees.append(t)
            order += darts + [c]
        if m.root in order:
            root = (d, order.index(m.root))
        forests.append(LabeledForest(tuple(trees), walks.walk(scheme, d)))
    return SchemeDecomposition(scheme, AdmissibleLabeling(tuple(ell)), walks,
                               tuple(forests), root)


def decompose_planted(lm):
    """Planted scheme decomposition: the root is carried by the pendant edge
    e** (see the module docstring for the conventions)."""
    _check_lm(lm)
    m = lm.m
    core, up = _prune(m)
    vo, alpha, sigma = m.vertex_of, m.alpha, m.sigma
    root = m.root
    vstar = vo[root]
    path = []                       # darts from v* toward the core
    v = vstar
    while up[v] >= 0:
        path.append(up[v])
        v = vo[alpha[up[v]]]
    x = v
    R = len(path)
    if R:
        d0 = sigma[alpha[path[-1]]]
        while not core[d0]:
            d0 = sigma[d0]
    else:
        d0 = root
        while not core[d0]:
            d0 = sigma[d0]
    live = list(core)
    for d in path:
        live[d] = live[alpha[d]] = True
    ldeg = [0] * m.n_vertices
    for d in range(m.n_darts):
        ldeg[vo[d]] += live[d]
    branch = {u for u in range(m.n_vertices) if ldeg[u] >= 3} | {x}
    if R:
        branch.add(vstar)
        scheme, chains, ell = _cut(lm, live, branch, vss=vstar)
    else:
        scheme, chains, ell = _cut(lm, live, branch, virtual=(x, d0))
    walks = _walks(scheme, chains, ell, lm.labels, vo, alpha)
    ess = scheme.e_star_star
    eb = scheme.m.alpha[ess]
    ep = scheme.e_prime
    _, prv = _rotation_in(m, live)
    labels = lm.labels

    def tree(seg, at):
        return _tree_from_segment(m, seg, labels, labels[at])[0]

    # the virtual corner at v*, split at the root dart
    if R:
        u = path[0]
        tip_start, tip_end = sigma[u], u
    else:
        tip_start, tip_end = sigma[prv[d0]], d0
    before = _segment(sigma, tip_start, root) if root != tip_start else []
    after = _segment(sigma, root, tip_end)
    forests = []
    for d, ch in enumerate(chains):
        floor = walks.walk(scheme, d).values
        if d == ep:
            trees = [tree(_segment(sigma, sigma[prv[c]], c), vo[c]) for c in ch[1:]]
            floor = floor[1:]
        else:
            trees = [tree(_segment(sigma, sigma[prv[c]], c), vo[c]) for c in ch]
            if d == ess:
                trees.append(tree(before, vstar))
                floor = floor + (floor[-1],)
            elif d == eb:
                if R:
                    trees[0] = tree(after, vstar)
                    trees.append(tree(_segment(sigma, sigma[prv[d0]], d0), x))
                else:
                    trees = [tree(after, vstar)]
                floor = floor + (walks.walk(scheme, ep)[1],)
        forests.append(LabeledForest(tuple(trees), MotzkinWalk(floor)))
    return SchemeDecomposition(scheme, AdmissibleLabeling(tuple(ell)), walks, tuple(forests))


# reconstruction ---------------------------------------------------------------

class _Builder:
    """Growing map: darts come in alpha pairs, rotations are set per vertex."""

    def __init__(self):
        self.alpha = []
        self.sigma = []
        self.label = []             # label of the origin of each dart

    def edge(self):
        n = len(self.alpha)
        self.alpha += [n + 1, n]
        self.sigma += [-1, -1]
        self.label += [None, None]
        return n, n + 1

    def vertex(self, rot, label):
        for a, b in zip(rot, rot[1:] + rot[:1]):
            self.sigma[a] = b
        for a in rot:
            self.label[a] = label

    def tree(self, t):
        """Darts of a labeled tree: (root rotation, contour order)."""
        ch = t.children()
        down = [None] * t.n_vertices
        for v in range(1, t.n_vertices):
            down[v] = self.edge()[0]
        for v in range(1, t.n_vertices):
            rot = [self.alpha[down[v]]] + [down[c] for c in ch[v]]
            self.vertex(rot, t.labels[v])
        contour = []
        stack = [(0, 0)]
        while stack:
            v, i = stack.pop()
            if i < len(ch[v]):
                c = ch[v][i]
                stack.append((v, i + 1))
                contour.append(down[c])
                stack.append((c, 0))
            elif v:
                contour.append(self.alpha[down[v]])
        return [down[c] for c in ch[0]], contour


def _assemble(dec):
    bad = dec.defects()
    if bad:
        raise IncompatibleComponents(bad[0][0], "; ".join(msg for _, msg in bad))
    s = dec.scheme
    sm = s.m
    alpha_s = sm.alpha
    walks = dec.walks
    ell = dec.labeling.ell
    planted = s.planted
    ess = s.e_star_star
    eb = alpha_s[ess] if planted else None
    ep = s.e_prime
    b = _Builder()
    chain = [None] * sm.n_darts
    for e in s.canonical_darts:
        r = walks.duration(s, e)
        pairs = [b.edge() for _ in range(r)]
        chain[e] = [p[0] for p in pairs]
        chain[alpha_s[e]] = [p[1] for p in reversed(pairs)]

    grafted = {}

    def graft(d, j):
        """Root rotation of tree j (chain position) of the forest of d."""
        if (d, j) not in grafted:
            trees = dec.forests[d].trees
            if d == ep:
                t = trees[j - 1] if j >= 1 else None
            else:
                t = trees[j]
            grafted[(d, j)] = b.tree(t) if t is not None else ([], [])
        return grafted[(d, j)][0]

    for v, darts in enumerate(sm.vertices):
        if v == s.v_star_star:
            continue
        d = darts[0]
        rot = []
        for _ in darts:
            if planted and d == ess:
                R = len(chain[ess])
                rot += graft(ess, 0)
                if R:
                    rot.append(chain[ess][0])
                rot += graft(eb, R)
            elif planted and d == ep:
                rot.append(chain[ep][0])
            else:
                rot += graft(d, 0) + [chain[d][0]]
            d = sm.sigma[d]
        b.vertex(rot, ell[v])
    for e in s.canonical_darts:
        r = len(chain[e])
        eb_ = alpha_s[e]
        w = walks.walk(s, e)
        for j in range(1, r):
            rot = graft(e, j) + [chain[e][j]] + graft(eb_, r - j) + [chain[eb_][r - j]]
            b.vertex(rot, w[j])
    if planted:
        R = len(chain[ess])
        if R:
            rot = [chain[eb][0]] + graft(ess, R) + graft(eb, 0)
            b.vertex(rot, ell[s.v_star_star])

    def order(d):
        """Darts of the forest of d in contour order (tree, floor, ...)."""
        out = []
        for j, c in enumerate(chain[d]):
            out += grafted[(d, j)][1] + [c]
        return out

    if planted:
        R = len(chain[ess])
        first = grafted[(eb, 0)][1]
        if first:
            root = first[0]
        else:
            root = chain[eb][0] if R else chain[ep][0]
    else:
        e_root, idx = dec.root
        root = order(e_root)[idx]
    m = HalfEdgeMap(b.alpha, b.sigma, root)
    labels = [0] * m.n_vertices
    for d, v in enumerate(m.vertex_of):
        labels[v] = b.label[d]
    face_names = [None] * (s.k + 1)
    for d in range(sm.n_darts):
        if chain[d]:
            face_names[s.dart_names[d]] = m.face_of[chain[d][0]]
    return LabeledMap(m, tuple(face_names), tuple(labels))


def reconstruct(dec):
    """Rooted labeled map of a plain scheme decomposition."""
    if dec.scheme.planted:
        raise ValueError("use reconstruct_planted for planted decompositions")
    return _assemble(dec)


def reconstruct_planted(dec):
    """Rooted labeled map of a planted scheme decomposition."""
    if not dec.scheme.planted:
        raise ValueError("use reconstruct for plain decompositions")
    return _assemble(dec)


# random components ----------------------------------------------------------------

def _sample_walk(kind, a, b, r, rng):
    """Uniform walk a -> b of duration r under the constraint ``kind``."""
    lo = {FREE: None, THIN: 0}.get(kind, 1)
    vals = [a]
    for i in range(r):
        x = vals[-1]
        left = r - i - 1
        opts, weights = [], []
        for y in (x - 1, x, x + 1):
            if left == 0:
                w = int(y == b)
            elif lo is None:
                w = motzkin_count(y, b, left)
            else:
                w = _count_above(y, b, left, lo) if y >= lo else 0
            if w:
                opts.append(y)
                weights.append(w)
        u = int(rng.integers(sum(weights)))
        for y, w in zip(opts, weights):
            if u < w:
                vals.append(y)
                break
            u -= w
    return MotzkinWalk(vals)


def _random_tree(label, max_edges, rng):
    n = int(rng.integers(0, max_edges + 1))
    if n == 0:
        return LabeledTree.single(label)
    return sample_labeled_tree(n, rng).shifted(label)


def random_decomposition(scheme, rng, extra=2, max_tree=3, label_range=3):
    """Random valid decomposition on ``scheme`` (not uniform; for tests)."""
    s = scheme
    ell = []
    for v in range(s.m.n_vertices):
        c = s.vertex_class(v)
        if c == "N":
            ell.append(0)
        elif c == "I":
            ell.append(int(rng.integers(1, label_range + 1)))
        else:
            ell.append(int(rng.integers(-label_range + 1, label_range + 1)))
    walks = []
    ess = s.e_star_star
    for e in s.canonical_darts:
        a, b = ell[s.tail(e)], ell[s.head(e)]
        kind = s.walk_kind(e)
        r = max(abs(a - b), 0 if e == ess else 1) + int(rng.integers(0, extra + 1))
        while walk_count(kind, a, b, r) == 0:
            r += 1
        walks.append(_sample_walk(kind, a, b, r, rng))
    net = WalkNetwork(tuple(walks))
    dec = SchemeDecomposition(s, AdmissibleLabeling(tuple(ell)), net, ())
    forests = []
    for d in range(s.m.n_darts):
        floor = dec.expected_floor(d)
        trees = [_random_tree(floor[j], max_tree, rng) for j in range(len(floor) - 1)]
        forests.append(LabeledForest(tuple(trees), MotzkinWalk(floor)))
    root = None
    if not s.planted:
        sizes = [f.n_oriented_edges for f in forests]
        i = int(rng.integers(sum(sizes)))
        for d, z in enumerate(sizes):
            if i < z:
                root = (d, i)
                break
            i -= z
    return SchemeDecomposition(s, dec.labeling, net, tuple(forests), root)


def trivial_decomposition(scheme):
    """Smallest components: label 1 off V_N, shortest monotone walks and
    one-vertex trees everywhere; the root is the first dart of F_0."""
    s = scheme
    ell = tuple(0 if s.vertex_class(v) == "N" else 1 for v in range(s.m.n_vertices))
    ess = s.e_star_star
    walks = []
    for e in s.canonical_darts:
        a, b = ell[s.tail(e)], ell[s.head(e)]
        r = max(abs(a - b), 0 if e == ess else 1)
        step = (b > a) - (b < a)
        walks.append(MotzkinWalk([a + step * min(i, abs(b - a)) for i in range(r + 1)]))
    net = WalkNetwork(tuple(walks))
    dec = SchemeDecomposition(s, AdmissibleLabeling(ell), net, ())
    forests = []
    for d in range(s.m.n_darts):
        floor = dec.expected_floor(d)
        forests.append(LabeledForest(tuple(LabeledTree.single(x) for x in floor[:-1]),
                                     MotzkinWalk(floor)))
    return SchemeDecomposition(s, dec.labeling, net, tuple(forests),
                               None if s.planted else (0, 0))


def _inner_unlabeled_code(s):
    data = [(nm == 0, s.m.vertex_of[d] in s.null_vertices, s.m.vertex_of[d] == s.v_star_star)
            for d, nm in enumerate(s.dart_names)]
    return unrooted_canonical_code(s.m, data)[0]


def scheme_census(k, dominant_only=False, planted=False):
    """Counts of pre-schemes and schemes with k+1 faces, as a dict."""
    pre = enumerate_preschemes(k, dominant_only=dominant_only)
    schemes = enumerate_schemes(k, dominant_only=dominant_only, planted=planted)
    shapes = sorted({(s.m.n_edges, s.m.n_vertices) for s in schemes})
    return {
        "k": k,
        "dominant_only": dominant_only,
        "planted": planted,
        "preschemes": len(pre),
        "preschemes_inner_unlabeled": len({p.code(inner_names=False) for p in pre}),
        "schemes": len(schemes),
        "schemes_inner_unlabeled": len({_inner_unlabeled_code(s) for s in schemes}),
        "dominant_schemes": sum(s.dominant for s in schemes),
        "edges_vertices": [list(x) for x in shapes],
    }


# exact counting --------------------------------------------------------------------

def count_labeled_maps_exact(scheme, n, max_terms=5_000_000):
    """Number of maps of LM^(k+1) with n edges whose scheme is ``scheme``:

        2 * sum over labelings and lengths of
            3^(n-r) * r * binom(2n, n-r) * prod_e W^(e)(l(e-), l(e+); r_e)

    with r the total length.  Every scheme vertex is joined to a null vertex
    (label 0) through edges of total length <= r, so |labels| <= r.
    """
    s = scheme
    if s.planted:
        raise ValueError("the formula is for plain schemes")
    edges = s.canonical_darts
    kinds = [s.walk_kind(e) for e in edges]
    ends = [(s.tail(e), s.head(e)) for e in edges]
    free = [v for v in range(s.m.n_vertices) if s.vertex_class(v) != "N"]
    inner = {v for v in free if s.vertex_class(v) == "I"}
    n_e = len(edges)
    total = 0
    terms = 0
    for r in range(n_e, n + 1):
        forest_factor = 2 * 3 ** (n - r) * r * math.comb(2 * n, n - r)
        ranges = [range(1, r + 1) if v in inner else range(-r, r + 1) for v in free]
        work = math.prod(len(x) for x in ranges) * math.comb(r - 1, n_e - 1)
        terms += work
        if terms > max_terms:
            raise TooLarge(f"label and length sums exceed {max_terms} terms")
        inner_sum = 0
        ell = [0] * s.m.n_vertices
        for labs in itertools.product(*ranges):
            for v, x in zip(free, labs):
                ell[v] = x
            per_edge = [[walk_count(kd, ell[u], ell[w], rr) for rr in range(r + 1)]
                        for kd, (u, w) in zip(kinds, ends)]
            inner_sum += _composition_sum(per_edge, r)
        total += forest_factor * inner_sum
    return total


def _composition_sum(per_edge, r):
    """Sum over r_e >= 1 with sum r_e = r of prod per_edge[e][r_e]."""
    dist = [1] + [0] * r
    for table in per_edge:
        new = [0] * (r + 1)
        for used, c in enumerate(dist):
            if c:
                for x in range(1, r - used + 1):
                    if table[x]:
                        new[used + x] += c * table[x]
        dist = new
    return dist[r]
