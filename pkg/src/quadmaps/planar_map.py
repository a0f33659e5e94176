"""Rooted plane maps stored as a pair of permutations on darts.

Darts are the integers ``0 .. 2E-1``.  ``alpha`` pairs the two darts of an
edge and ``sigma`` rotates the darts around their common origin.  Faces are
the cycles of ``phi = sigma o alpha``: ``phi[d] = sigma[alpha[d]]`` is the dart
following ``d`` along the face that contains it.  That face is called the face
to the left of ``d``, and the corner of ``d`` is the angular sector at the
origin of ``d`` lying between ``sigma^-1(d)`` and ``d``; it belongs to the
face of ``d``.  Every other module uses this convention.

Vertices are numbered by increasing smallest dart, and so are faces.
"""

import json
from collections import deque
from dataclasses import dataclass

from .errors import (
    Disconnected,
    FaceDegreeNot4,
    MapError,
    NonPlanar,
    NotInvolution,
    TooLarge,
)

__all__ = [
    "HalfEdgeMap",
    "Quadrangulation",
    "CanonicalCode",
    "build_map",
    "faces",
    "check_quadrangulation",
    "canonical_code",
    "canonical_form",
    "unrooted_canonical_code",
    "automorphism_roots",
    "enumerate_rooted_quadrangulations",
    "enumerate_rooted_maps",
    "enumerate_unrooted_maps",
    "add_pendant",
    "add_chord",
    "map_from_json",
    "map_to_json",
]

QUAD_ORACLE_MAX = 5


def normalize_cycles(cycles, n):
    """Rotate each cycle to start at its smallest element, sort cycles by
    that element, and build the owner index (the layout used for orbits)."""
    rot = []
    for c in cycles:
        i = c.index(min(c))
        rot.append(c[i:] + c[:i] if i else c)
    rot.sort(key=lambda c: c[0])
    owner = [0] * n
    for k, c in enumerate(rot):
        for d in c:
            owner[d] = k
    return rot, owner


def _cycles(perm):
    """Cycles of a permutation, each started at its smallest element,
    listed by increasing smallest element; also returns the index map."""
    n = len(perm)
    owner = [-1] * n
    cycles = []
    for start in range(n):
        if owner[start] >= 0:
            continue
        c = len(cycles)
        cyc = []
        d = start
        while owner[d] < 0:
            owner[d] = c
            cyc.append(d)
            d = perm[d]
        if d != start:
            raise MapError("not a permutation")
        cycles.append(cyc)
    return cycles, owner


class HalfEdgeMap:
    """A rooted plane map.

    Instances are immutable; derived data (faces, vertices, adjacency) is
    computed lazily and cached.
    """

    def __init__(self, alpha, sigma, root=0, check=True):
        self.alpha = tuple(map(int, alpha))
        self.sigma = tuple(map(int, sigma))
        self.root = int(root)
        self._cache = {}
        if check:
            self._validate()

    @classmethod
    def _raw(cls, alpha, sigma, root, vertices=None, faces=None, vertex_of=None):
        """Unchecked constructor for trusted integer sequences; optional
        precomputed (cycles, owner) pairs for vertices and faces, or just the
        vertex owner list (which must follow the smallest-dart numbering)."""
        m = cls.__new__(cls)
        m.alpha = tuple(alpha)
        m.sigma = tuple(sigma)
        m.root = root
        m._cache = {}
        if vertices is not None:
            m._cache["v"] = vertices
        if faces is not None:
            m._cache["f"] = faces
        if vertex_of is not None:
            m._cache["vo"] = vertex_of
            m._cache["nv"] = max(vertex_of) + 1
        return m

    def _validate(self):
        a, s = self.alpha, self.sigma
        n = len(a)
        if len(s) != n:
            raise MapError("alpha and sigma have different sizes")
        if n == 0 or n % 2:
            raise MapError("dart count must be positive and even")
        if sorted(s) != list(range(n)):
            raise MapError("sigma is not a permutation")
        for d in range(n):
            e = a[d]
            if not 0 <= e < n or e == d or a[e] != d:
                raise NotInvolution("alpha is not a fixed-point-free involution at dart %d" % d)
        if not 0 <= self.root < n:
            raise MapError("root dart out of range")
        seen = [False] * n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            d = stack.pop()
            for e in (a[d], s[d]):
                if not seen[e]:
                    seen[e] = True
                    count += 1
                    stack.append(e)
        if count != n:
            raise Disconnected("alpha and sigma do not act transitively")
        if self.euler_characteristic() != 2:
            raise NonPlanar("Euler characteristic %d" % self.euler_characteristic())

    # basic counts -------------------------------------------------------
    @property
    def n_darts(self):
        return len(self.alpha)

    @property
    def n_edges(self):
        return len(self.alpha) // 2

    @property
    def n_vertices(self):
        nv = self._cache.get("nv")
        if nv is None:
            nv = len(self.vertices)
        return nv

    @property
    def n_faces(self):
        return len(self.faces)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    # derived permutations and orbits ------------------------------------
    @property
    def phi(self):
        if "phi" not in self._cache:
            s, a = self.sigma, self.alpha
            self._cache["phi"] = tuple(s[a[d]] for d in range(len(a)))
        return self._cache["phi"]

    @property
    def sigma_inv(self):
        if "sigma_inv" not in self._cache:
            inv = [0] * len(self.sigma)
            for d, e in enumerate(self.sigma):
                inv[e] = d
            self._cache["sigma_inv"] = tuple(inv)
        return self._cache["sigma_inv"]

    def _orbits(self, key):
        got = self._cache.get(key)
        if got is None and key == "v" and "vo" in self._cache:
            cycles, owner = _cycles(self.sigma)
            got = (cycles, self._cache["vo"])
        if got is None:
            got = _cycles(self.sigma if key == "v" else self.phi)
            self._cache[key] = got
        return got

    @property
    def vertices(self):
        """Vertex rotations: list of dart cycles of sigma."""
        return self._orbits("v")[0]

    @property
    def vertex_of(self):
        """Origin vertex id of every dart."""
        vo = self._cache.get("vo")
        if vo is not None:
            return vo
        return self._orbits("v")[1]

    @property
    def faces(self):
        """Face boundaries: list of dart cycles of phi, in facial order."""
        return self._orbits("f")[0]

    @property
    def face_of(self):
        """Face id (to the left) of every dart."""
        return self._orbits("f")[1]

    def head(self, d):
        return self.vertex_of[self.alpha[d]]

    def tail(self, d):
        return self.vertex_of[d]

    def degree(self, v):
        return len(self.vertices[v])

    def face_degree(self, f):
        return len(self.faces[f])

    @property
    def adjacency(self):
        """Neighbour lists (with multiplicity) in rotation order."""
        if "adj" not in self._cache:
            vo, a = self.vertex_of, self.alpha
            self._cache["adj"] = [[vo[a[d]] for d in cyc] for cyc in self.vertices]
        return self._cache["adj"]

    def edge_list(self):
        """One (u, v) pair per edge, from the smaller dart of each edge."""
        vo, a = self.vertex_of, self.alpha
        return [(vo[d], vo[a[d]]) for d in range(len(a)) if d < a[d]]

    # rebuilding ---------------------------------------------------------
    def with_root(self, root):
        m = HalfEdgeMap(self.alpha, self.sigma, root, check=False)
        m._cache = self._cache
        return m

    def relabel(self, new_id):
        """Rename dart d to new_id[d]."""
        n = self.n_darts
        alpha = [0] * n
        sigma = [0] * n
        for d in range(n):
            alpha[new_id[d]] = new_id[self.alpha[d]]
            sigma[new_id[d]] = new_id[self.sigma[d]]
        return HalfEdgeMap(alpha, sigma, new_id[self.root], check=False)

    def __eq__(self, other):
        if not isinstance(other, HalfEdgeMap):
            return NotImplemented
        return (self.alpha, self.sigma, self.root) == (other.alpha, other.sigma, other.root)

    def __hash__(self):
        return hash((self.alpha, self.sigma, self.root))

    def __repr__(self):
        return "%s(V=%d, E=%d, F=%d, root=%d)" % (
            type(self).__name__, self.n_vertices, self.n_edges, self.n_faces, self.root)

    def to_dict(self):
        return {"darts": self.n_darts, "alpha": list(self.alpha),
                "sigma": list(self.sigma), "root": self.root}


class Quadrangulation(HalfEdgeMap):
    """A plane map whose faces all have degree 4."""

    @property
    def underlying(self):
        return HalfEdgeMap(self.alpha, self.sigma, self.root, check=False)

    def bipartition(self):
        """0/1 colour per vertex (BFS parity from vertex 0)."""
        adj = self.adjacency
        colour = [-1] * len(adj)
        colour[0] = 0
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if colour[w] < 0:
                    colour[w] = colour[u] ^ 1
                    queue.append(w)
                elif colour[w] == colour[u]:
                    raise MapError("quadrangulation is not bipartite")
        return colour


def build_map(alpha, sigma, root=0):
    """Validated map from two permutations; raises NotInvolution,
    Disconnected or NonPlanar."""
    return HalfEdgeMap(alpha, sigma, root, check=True)


def faces(m):
    """Face cycles of ``m`` (orbits of sigma o alpha)."""
    return [list(f) for f in m.faces]


def check_quadrangulation(m):
    """Return ``m`` as a Quadrangulation or raise FaceDegreeNot4."""
    for i, f in enumerate(m.faces):
        if len(f) != 4:
            raise FaceDegreeNot4(i, len(f))
    q = Quadrangulation(m.alpha, m.sigma, m.root, check=False)
    q._cache = m._cache
    if q.n_vertices != q.n_faces + 2:
        raise NonPlanar("vertex count is not faces + 2")
    q.bipartition()
    return q


# canonical codes --------------------------------------------------------

@dataclass(frozen=True, order=True)
class CanonicalCode:
    code: tuple


def _bfs_order(alpha, sigma, root):
    n = len(alpha)
    lab = [-1] * n
    lab[root] = 0
    order = [root]
    i = 0
    while i < len(order):
        d = order[i]
        i += 1
        for e in (alpha[d], sigma[d]):
            if lab[e] < 0:
                lab[e] = len(order)
                order.append(e)
    return order, lab


def _code_from_root(m, root, dart_data):
    alpha, sigma = m.alpha, m.sigma
    order, lab = _bfs_order(alpha, sigma, root)
    out = [len(order)]
    for d in order:
        out.append(lab[alpha[d]])
        out.append(lab[sigma[d]])
    if dart_data is not None:
        out.extend(dart_data[d] for d in order)
    return tuple(out)


def canonical_code(m, dart_data=None, root=None):
    """Code of the rooted map: darts renamed in BFS order from the root
    (visiting alpha then sigma), followed by optional per-dart decorations.

    Two decorated rooted maps have equal codes iff some root-preserving
    isomorphism also preserves the decorations.
    """
    r = m.root if root is None else root
    return CanonicalCode(_code_from_root(m, r, dart_data))


def canonical_form(m, dart_data=None, root=None):
    """Relabel darts in canonical BFS order; returns (map rooted at 0,
    relabeled decorations or None, old-to-new dart map)."""
    r = m.root if root is None else root
    order, lab = _bfs_order(m.alpha, m.sigma, r)
    cm = m.relabel(lab).with_root(0)
    data = None
    if dart_data is not None:
        data = [dart_data[d] for d in order]
    return cm, data, lab


def unrooted_canonical_code(m, dart_data=None):
    """Smallest rooted code over all choices of root, with the list of
    roots achieving it (the orbit of the canonical root under automorphisms)."""
    best = None
    roots = []
    for r in range(m.n_darts):
        c = _code_from_root(m, r, dart_data)
        if best is None or c < best:
            best = c
            roots = [r]
        elif c == best:
            roots.append(r)
    return CanonicalCode(best), roots


def automorphism_roots(m, dart_data=None):
    """Darts d such that re-rooting at d gives an isomorphic decorated map."""
    ref = _code_from_root(m, m.root, dart_data)
    return [r for r in range(m.n_darts) if _code_from_root(m, r, dart_data) == ref]


# local modifications ----------------------------------------------------

def add_pendant(m, d):
    """New edge in the corner of ``d`` leading to a new degree-1 vertex.

    The new darts are ``2E`` (at the origin of d) and ``2E+1`` (the leaf).
    """
    n = m.n_darts
    alpha = list(m.alpha) + [n + 1, n]
    sigma = list(m.sigma) + [d, n + 1]
    sigma[m.sigma_inv[d]] = n
    return HalfEdgeMap(alpha, sigma, m.root, check=False)


def add_chord(m, d1, d2, loop_order=0):
    """New edge from the corner of ``d1`` to the corner of ``d2``, both
    corners in the same face (so the face is split in two).

    New darts: ``2E`` in the corner of d1, ``2E+1`` in the corner of d2.
    When d1 == d2 a loop is drawn and ``loop_order`` selects which of the two
    new darts comes first in the rotation.
    """
    n = m.n_darts
    a, b = n, n + 1
    alpha = list(m.alpha) + [b, a]
    sigma = list(m.sigma) + [0, 0]
    if d1 == d2:
        p = m.sigma_inv[d1]
        first, second = (a, b) if loop_order == 0 else (b, a)
        sigma[p] = first
        sigma[first] = second
        sigma[second] = d1
    else:
        p1, p2 = m.sigma_inv[d1], m.sigma_inv[d2]
        sigma[p1] = a
        sigma[a] = d1
        sigma[p2] = b
        sigma[b] = d2
    return HalfEdgeMap(alpha, sigma, m.root, check=False)


# enumeration oracles ----------------------------------------------------

def enumerate_rooted_quadrangulations(n, max_faces=QUAD_ORACLE_MAX):
    """All rooted quadrangulations with ``n`` faces, each exactly once.

    Squares are glued edge by edge.  Square s owns darts 4s..4s+3 with
    phi(4s+j) = 4s+(j+1)%4.  The smallest unmatched dart of the opened squares
    is paired either with another unmatched dart or with dart 0 of the next
    unopened square; this numbering is canonical for a map rooted at dart 0,
    so no duplicates are produced.  Gluings of genus 0 are kept.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_faces:
        raise TooLarge("quadrangulation oracle bounded by %d faces" % max_faces)
    D = 4 * n
    alpha = [-1] * D
    out = []

    def phi(d):
        return 4 * (d // 4) + (d % 4 + 1) % 4

    def emit():
        sigma = [phi(alpha[d]) for d in range(D)]
        m = HalfEdgeMap(alpha, sigma, 0, check=False)
        if m.n_vertices == n + 2:
            out.append(check_quadrangulation(m))

    def rec(opened, start):
        d = start
        limit = 4 * opened
        while d < limit and alpha[d] >= 0:
            d += 1
        if d == limit:
            if opened == n:
                emit()
            return
        for e in range(d + 1, limit):
            if alpha[e] < 0:
                alpha[d], alpha[e] = e, d
                rec(opened, d + 1)
                alpha[d] = alpha[e] = -1
        if opened < n:
            e = limit
            alpha[d], alpha[e] = e, d
            rec(opened + 1, d + 1)
            alpha[d] = alpha[e] = -1

    rec(1, 0)
    return out


def _one_edge_maps():
    bridge = HalfEdgeMap([1, 0], [0, 1], 0)
    loop = HalfEdgeMap([1, 0], [1, 0], 0)
    return [bridge, loop]


def _extensions(m):
    for f in m.faces:
        for i, d1 in enumerate(f):
            yield add_pendant(m, d1)
            yield add_chord(m, d1, d1, 0)
            yield add_chord(m, d1, d1, 1)
            for d2 in f[i + 1:]:
                yield add_chord(m, d1, d2)


def enumerate_unrooted_maps(n_edges, max_vertices=None, max_faces=None):
    """Unrooted plane maps with ``n_edges`` edges, one representative each.

    Maps grow one edge at a time (pendant edge or chord inside a face); any
    map with at least one edge arises from a smaller one by removing a leaf
    edge or a non-bridge edge.  Vertex and face counts never decrease along
    the growth, so the optional bounds prune without losing maps.
    """
    if n_edges < 1:
        raise ValueError("need at least one edge")

    def ok(m):
        return ((max_vertices is None or m.n_vertices <= max_vertices)
                and (max_faces is None or m.n_faces <= max_faces))

    level = {}
    for m in _one_edge_maps():
        if ok(m):
            level[unrooted_canonical_code(m)[0]] = m
    for _ in range(n_edges - 1):
        nxt = {}
        for m in level.values():
            for x in _extensions(m):
                if not ok(x):
                    continue
                key = unrooted_canonical_code(x)[0]
                if key not in nxt:
                    nxt[key] = x
        level = nxt
    return [canonical_form(m, root=roots[0])[0]
            for m, roots in ((m, unrooted_canonical_code(m)[1]) for m in level.values())]


def enumerate_rooted_maps(n_edges, max_vertices=None, max_faces=None):
    """Rooted plane maps with ``n_edges`` edges in canonical form (root 0)."""
    out = []
    for m in enumerate_unrooted_maps(n_edges, max_vertices, max_faces):
        seen = set()
        for r in range(m.n_darts):
            c = canonical_code(m, root=r)
            if c not in seen:
                seen.add(c)
                out.append(canonical_form(m, root=r)[0])
    return out


# JSON ------------------------------------------------------------------

def map_to_json(m, **extra):
    d = m.to_dict()
    d.update(extra)
    return json.dumps(d)


def map_from_json(text_or_dict, check=True):
    d = json.loads(text_or_dict) if isinstance(text_or_dict, str) else text_or_dict
    if len(d["alpha"]) != d["darts"] or len(d["sigma"]) != d["darts"]:
        raise MapError("dart count does not match permutation sizes")
    return HalfEdgeMap(d["alpha"], d["sigma"], d.get("root", 0), check=check)
