"""Multi-pointed quadrangulations with delays and the reverse map from
labeled maps.

A labeled map is a rooted plane map with k+1 named faces f_0..f_k and an
integer label per vertex, labels differing by at most one along edges.
``phi_reverse`` adds a sink vertex v_i inside each face f_i and draws the
successor arcs face by face (see :mod:`quadmaps.cvs`); the result is a
quadrangulation with marked vertices v_0..v_k and delays
tau_i = min label on f_i minus 1.
"""

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
import itertools
from typing import NamedTuple

import numpy as np

from .cvs import RootChoice, arc_construction, face_successors, tree_map
from .encodings import sample_labeled_tree
from .errors import NotGeodesicStar, NotLabeledMap, TooLarge
from .planar_map import HalfEdgeMap, add_chord, canonical_code, enumerate_rooted_maps

__all__ = [
    "LabeledMap",
    "DelayedQuadrangulation",
    "LiquidPartition",
    "SinkCorner",
    "bfs_distances",
    "check_delays",
    "delays_for_star",
    "is_geodesic_star",
    "phi_reverse",
    "successor",
    "leftmost_geodesic",
    "leftmost_chain",
    "liquid_partition",
    "image_code",
    "labelings",
    "enumerate_labeled_maps",
    "enumerate_lm",
    "count_delayed_quadrangulations",
    "random_labeled_map",
    "star_to_labeled_map",
    "STAR_ORACLE_MAX",
]

STAR_ORACLE_MAX = 5


def bfs_distances(m, source):
    """Graph distances in ``m`` from vertex ``source`` (plain BFS)."""
    adj = m.adjacency
    dist = [-1] * m.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = du
                queue.append(w)
    return dist


# labeled maps -------------------------------------------------------------

@dataclass(frozen=True)
class LabeledMap:
    """Rooted map with named faces and vertex labels.

    ``face_names[i]`` is the face id (in ``m.faces``) of f_i and
    ``labels[v]`` the label of vertex v of ``m``.
    """

    m: HalfEdgeMap
    face_names: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "face_names", tuple(int(x) for x in self.face_names))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))

    @property
    def k(self):
        return len(self.face_names) - 1

    @property
    def n_edges(self):
        return self.m.n_edges

    def validate(self):
        m = self.m
        if sorted(self.face_names) != list(range(m.n_faces)):
            raise NotLabeledMap("face names are not a bijection onto the faces")
        if len(self.labels) != m.n_vertices:
            raise NotLabeledMap("one label per vertex expected")
        for u, w in m.edge_list():
            if abs(self.labels[u] - self.labels[w]) > 1:
                raise NotLabeledMap(f"labels differ by more than 1 on edge {u}-{w}")
        return self

    def dart_labels(self):
        """Label of the corner of each dart (its origin vertex)."""
        lab = self.labels
        return [lab[v] for v in self.m.vertex_of]

    def face_index(self):
        """Per face id of m: its name i."""
        inv = [0] * len(self.face_names)
        for i, f in enumerate(self.face_names):
            inv[f] = i
        return inv

    def face_vertices(self, i):
        """Vertices incident to f_i."""
        vo = self.m.vertex_of
        return {vo[d] for d in self.m.faces[self.face_names[i]]}

    def lm_defect(self):
        """None when the map is in LM^(k+1), otherwise the reason."""
        v0 = self.face_vertices(0)
        for i in range(1, self.k + 1):
            common = v0 & self.face_vertices(i)
            if not common:
                return f"f_0 and f_{i} share no vertex"
            low = min(self.labels[v] for v in common)
            if low != 0:
                return f"min label on V(f_0 ∩ f_{i}) is {low}, not 0"
        return None

    def in_lm(self):
        return self.lm_defect() is None

    def shifted(self, c):
        return LabeledMap(self.m, self.face_names, tuple(x + c for x in self.labels))

    def code(self, up_to_shift=False):
        """Canonical code of the decorated rooted map."""
        lab = self.dart_labels()
        if up_to_shift:
            base = self.labels[self.m.vertex_of[self.m.root]]
            lab = [x - base for x in lab]
        fi = self.face_index()
        fo = self.m.face_of
        return canonical_code(self.m, [(lab[d], fi[fo[d]]) for d in range(self.m.n_darts)])

    def to_dict(self):
        return {"map": self.m.to_dict(), "face_names": list(self.face_names),
                "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, d):
        mm = d["map"]
        m = HalfEdgeMap(mm["alpha"], mm["sigma"], mm["root"])
        return cls(m, tuple(d["face_names"]), tuple(d["labels"])).validate()


# delayed quadrangulations -------------------------------------------------

@dataclass
class DelayedQuadrangulation:
    """Quadrangulation with marked vertices v_0..v_k and delays tau.

    ``labels`` (per vertex of q) and ``construction`` are filled in when the
    object comes out of :func:`phi_reverse`.
    """

    q: HalfEdgeMap
    v: tuple
    tau: tuple
    labels: list = None
    construction: object = field(default=None, repr=False)
    source: LabeledMap = field(default=None, repr=False)

    def check(self):
        return check_delays(self.q, self.v, self.tau)

    def distances(self):
        """BFS distance arrays from each v_i (memoized)."""
        cached = getattr(self, "_dist", None)
        if cached is None:
            cached = [bfs_distances(self.q, x) for x in self.v]
            self._dist = cached
        return cached

    def label_formula(self):
        """min_i (d(v, v_i) + tau_i) for every vertex v of q."""
        ds = self.distances()
        return [min(d[u] + t for d, t in zip(ds, self.tau)) for u in range(self.q.n_vertices)]


def check_delays(q, v, tau):
    """True iff |tau_i - tau_j| < d(v_i, v_j) and d(v_i, v_j) + tau_i - tau_j
    is even for all i != j."""
    if len(set(v)) != len(v):
        raise ValueError("marked vertices must be distinct")
    dists = [bfs_distances(q, x) for x in v]
    for i, j in itertools.combinations(range(len(v)), 2):
        d = dists[i][v[j]]
        diff = tau[i] - tau[j]
        if abs(diff) >= d or (d + diff) % 2:
            return False
    return True


def delays_for_star(q, v, r_prime):
    """tau_0 = -r', tau_i = r' - d(v_0, v_i)."""
    d0 = bfs_distances(q, v[0])
    return (-r_prime,) + tuple(r_prime - d0[x] for x in v[1:])


def is_geodesic_star(q, v, r, k=None, dists=None):
    """Membership of (q, v) in G(r, k).

    First condition: a vertex at distance >= r from v_0 lies on geodesics
    from v_0 to at most one v_i.  Second: no three distinct marked vertices
    are aligned in any order and every d(v_0, v_i) >= 3r.
    """
    if k is None:
        k = len(v) - 1
    if len(v) != k + 1:
        raise ValueError("need k + 1 vertices")
    if len(set(v)) != len(v):
        raise ValueError("marked vertices must be distinct")
    if dists is None:
        dists = [bfs_distances(q, x) for x in v]
    D = [np.asarray(d) for d in dists]
    if min(D[0][x] for x in v[1:]) < 3 * r:
        return False
    for a, b, c in itertools.permutations(range(k + 1), 3):
        if D[a][v[b]] + D[b][v[c]] == D[a][v[c]]:
            return False
    far = D[0] >= r
    hits = np.zeros(len(D[0]), dtype=np.int64)
    for i in range(1, k + 1):
        hits += (D[0] + D[i] == D[0][v[i]]) & far
    return bool(hits.max(initial=0) <= 1)


# the reverse construction -------------------------------------------------

def phi_reverse(lm, root_choice=RootChoice.FORWARD, check=True, require_lm=False):
    """Delayed quadrangulation built from a labeled map by successor arcs.

    Returns ``(DelayedQuadrangulation, root_choice)``.  With ``require_lm``
    the input must belong to LM^(k+1).
    """
    if check:
        lm.validate()
        if require_lm:
            why = lm.lm_defect()
            if why:
                raise NotLabeledMap(why)
    ac = arc_construction(lm.m, lm.dart_labels(), root_choice, check=check)
    v = tuple(ac.sink_vertex[f] for f in lm.face_names)
    tau = tuple(ac.tau[f] for f in lm.face_names)
    dq = DelayedQuadrangulation(ac.q, v, tau, list(ac.labels), ac, lm)
    return dq, RootChoice(root_choice)


class SinkCorner(NamedTuple):
    """The single corner c_i of the extra vertex of face f_i."""

    face: int


def successor(lm, corner):
    """First corner after ``corner`` in its face with label one less, or the
    sink corner of that face."""
    m = lm.m
    fid = m.face_of[corner]
    f = m.faces[fid]
    j = face_successors(f, lm.dart_labels())[f.index(corner)]
    if j < 0:
        return SinkCorner(lm.face_index()[fid])
    return f[j]


def leftmost_geodesic(dq, start_corner):
    """Vertices of q visited by the successor chain from a corner of m down
    to its sink."""
    ac = dq.construction
    if ac is None:
        raise ValueError("construction metadata missing; use phi_reverse output")
    m = dq.source.m
    vo = m.vertex_of
    chain = [ac.vertex_map[vo[start_corner]]]
    c = start_corner
    while True:
        s = ac.succ[c]
        if s < 0:
            chain.append(ac.sink_vertex[ac.arc_face[c]])
            return chain
        chain.append(ac.vertex_map[vo[s]])
        c = s


def _next_leftmost(q, labels, e, vo, heads):
    """Next dart of the leftmost decreasing chain after dart e of q."""
    w = heads[e]
    target = labels[w] - 1
    d = q.sigma[q.alpha[e]]
    start = d
    while True:
        if labels[heads[d]] == target:
            return d
        d = q.sigma[d]
        if d == start:
            return -1


def leftmost_chain(q, labels, e):
    """Darts of the chain from dart e (pointing to a lower label) turning
    toward the next face at every step, defined on q alone."""
    vo = q.vertex_of
    heads = [vo[a] for a in q.alpha]
    out = [e]
    while True:
        nxt = _next_leftmost(q, labels, out[-1], vo, heads)
        if nxt < 0:
            return out
        out.append(nxt)


@dataclass
class LiquidPartition:
    """``assignment[d]`` is the source index of dart d of q, or -1 when d
    points to a larger label."""

    assignment: list

    def cell(self, i):
        return [d for d, a in enumerate(self.assignment) if a == i]


def liquid_partition(dq):
    """Assign each label-decreasing dart of q to the source where its
    leftmost chain ends."""
    q, labels = dq.q, dq.labels
    if labels is None:
        labels = dq.label_formula()
    vo = q.vertex_of
    heads = [vo[a] for a in q.alpha]
    source_of = {x: i for i, x in enumerate(dq.v)}
    out = [-1] * q.n_darts
    for e in range(q.n_darts):
        if out[e] >= 0 or labels[heads[e]] != labels[vo[e]] - 1:
            continue
        path = [e]
        while True:
            h = heads[path[-1]]
            if h in source_of:
                res = source_of[h]
                break
            nxt = _next_leftmost(q, labels, path[-1], vo, heads)
            if out[nxt] >= 0:
                res = out[nxt]
                break
            path.append(nxt)
        for d in path:
            out[d] = res
    return LiquidPartition(out)


def image_code(dq):
    """Code of (q rooted, ordered v, tau up to a common shift)."""
    vo = dq.q.vertex_of
    idx = {x: i for i, x in enumerate(dq.v)}
    t0 = dq.tau[0]
    data = []
    for d in range(dq.q.n_darts):
        i = idx.get(vo[d], -1)
        data.append((i, dq.tau[i] - t0) if i >= 0 else (-1, 0))
    return canonical_code(dq.q, data)


# enumeration oracles -------------------------------------------------------

def labelings(m):
    """All labelings of ``m`` with root vertex label 0 and |difference| <= 1
    along edges (one representative per class modulo a common shift)."""
    adj = m.adjacency
    start = m.vertex_of[m.root]
    order, parent = [start], {start: -1}
    for u in order:
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                order.append(w)
    edges = m.edge_list()
    out = []
    lab = [0] * m.n_vertices
    rest = order[1:]
    for steps in itertools.product((-1, 0, 1), repeat=len(rest)):
        for u, s in zip(rest, steps):
            lab[u] = lab[parent[u]] + s
        if all(abs(lab[a] - lab[b]) <= 1 for a, b in edges):
            out.append(tuple(lab))
    return out


@lru_cache(maxsize=None)
def _maps_with_faces(n_edges, n_faces):
    return tuple(m for m in enumerate_rooted_maps(n_edges, max_faces=n_faces)
                 if m.n_faces == n_faces)


def enumerate_labeled_maps(n_edges, n_faces, max_edges=STAR_ORACLE_MAX):
    """All labeled maps with ``n_faces`` named faces and ``n_edges`` edges,
    labels up to a common shift (root vertex label 0)."""
    if n_edges > max_edges:
        raise TooLarge(f"labeled map oracle limited to {max_edges} edges")
    out = []
    for m in _maps_with_faces(n_edges, n_faces):
        labs = labelings(m)
        for names in itertools.permutations(range(n_faces)):
            for lab in labs:
                out.append(LabeledMap(m, names, lab))
    return out


def enumerate_lm(n_edges, k=2, max_edges=STAR_ORACLE_MAX):
    """All elements of LM^(k+1) with ``n_edges`` edges.

    For each labeling class the shift is forced by min over V(f_0 ∩ f_1) = 0;
    the class is kept when the other constraints then hold.
    """
    out = []
    for lm in enumerate_labeled_maps(n_edges, k + 1, max_edges):
        v0 = lm.face_vertices(0)
        shift = None
        ok = True
        for i in range(1, k + 1):
            common = v0 & lm.face_vertices(i)
            if not common:
                ok = False
                break
            low = min(lm.labels[v] for v in common)
            if shift is None:
                shift = low
            elif low != shift:
                ok = False
                break
        if ok:
            out.append(lm.shifted(-shift))
    return out


def count_delayed_quadrangulations(n, k=2):
    """#{(q, v, tau)}: rooted quadrangulations with n faces, ordered distinct
    v_0..v_k and delays modulo a common shift satisfying the strict triangle
    and parity conditions."""
    from .planar_map import enumerate_rooted_quadrangulations

    total = 0
    for q in enumerate_rooted_quadrangulations(n):
        V = q.n_vertices
        dist = np.array([bfs_distances(q, u) for u in range(V)])
        for v in itertools.permutations(range(V), k + 1):
            total += _count_delays(dist, v)
    return total


def _count_delays(dist, v):
    k = len(v) - 1
    ranges = []
    for i in range(1, k + 1):
        d = int(dist[v[0], v[i]])
        if d < 2:
            return 0
        ranges.append(range(-d + 2, d - 1, 2))
    count = 0
    for taus in itertools.product(*ranges):
        t = (0,) + taus
        if all(abs(t[i] - t[j]) < dist[v[i], v[j]] and (dist[v[i], v[j]] + t[i] - t[j]) % 2 == 0
               for i, j in itertools.combinations(range(1, k + 1), 2)):
            count += 1
    return count


def random_labeled_map(n_tree, k, rng):
    """Labeled map with k+1 faces: a random labeled tree with ``n_tree``
    edges plus k chords between corners of a common face whose labels differ
    by at most one.  Not uniform; meant for property tests."""
    t = sample_labeled_tree(n_tree, rng)
    m, dart_lab, _ = tree_map(t)
    m = HalfEdgeMap(m.alpha, m.sigma, m.root, check=False)
    for _ in range(k):
        faces = m.faces
        f = faces[int(rng.integers(len(faces)))]
        while True:
            a, b = (f[int(x)] for x in rng.integers(len(f), size=2))
            if abs(dart_lab[a] - dart_lab[b]) <= 1:
                break
        m = add_chord(m, a, b, int(rng.integers(2)))
        # old darts keep their ids; new darts sit in the corners of a and b
        dart_lab = dart_lab + [dart_lab[a], dart_lab[b]]
    vlab = [0] * m.n_vertices
    for d, v in enumerate(m.vertex_of):
        vlab[v] = dart_lab[d]
    names = tuple(int(x) for x in rng.permutation(m.n_faces))
    return LabeledMap(m, names, tuple(vlab))


# preimages of stars ---------------------------------------------------------

@lru_cache(maxsize=None)
def _preimage_index(n_edges, n_faces):
    index = {}
    for lm in enumerate_labeled_maps(n_edges, n_faces):
        for choice in RootChoice:
            dq, _ = phi_reverse(lm, choice, check=False)
            index[image_code(dq)] = (lm, dq.tau[0])
    return index


def star_to_labeled_map(q, v, r, r_prime, max_faces=STAR_ORACLE_MAX):
    """The labeled map whose image is (q, v, tau^(r')), for (q, v) in G(r, k).

    The preimage is located in an exhaustive index of images, so ``q`` must
    be small.  Labels are normalized so that tau_0 = -r'.
    """
    if not r + 1 <= r_prime <= 2 * r:
        raise ValueError("r' must lie in r+1..2r")
    if not is_geodesic_star(q, v, r):
        raise NotGeodesicStar("(q, v) is not in G(r, k)")
    if q.n_faces > max_faces:
        raise TooLarge(f"preimage index limited to {max_faces} faces")
    tau = delays_for_star(q, v, r_prime)
    target = image_code(DelayedQuadrangulation(q, tuple(v), tau))
    lm, t0 = _preimage_index(q.n_faces, len(v))[target]
    return lm.shifted(tau[0] - t0)
