"""Successor arcs and the Cori-Vauquelin-Schaeffer construction.

The arc engine takes any plane map with corner labels (labels differing by
at most one along edges) and builds the quadrangulation made of the arcs
``corner -> successor``.  Each face f_i gets an extra vertex v_i receiving
the arcs of the corners with face-minimal label.  The CVS bijection is the
one-face case (a labeled tree).

Arc darts: the arc leaving corner c is dart ``2c`` and its reverse is
``2c + 1``.  Around an original vertex, the rotation of the quadrangulation
lists, corner by corner, the incoming arcs (closest predecessor first) and
then the outgoing arc.  Around v_i the incoming arcs appear in decreasing
facial position.  The quadrangulation is rooted at ``2 * root + choice``.
"""

from dataclasses import dataclass
from enum import IntEnum
import math

import numpy as np

from .encodings import contour_walk, sample_labeled_tree
from .errors import ArcPlanarityFailure
from .planar_map import HalfEdgeMap, Quadrangulation, check_quadrangulation, normalize_cycles

__all__ = [
    "RootChoice",
    "ArcConstruction",
    "PointedQuadrangulation",
    "face_successors",
    "arc_construction",
    "tree_map",
    "cvs_reverse",
    "sample_quadrangulation",
    "count_quadrangulations",
    "cvs_edge_list",
]


class RootChoice(IntEnum):
    """Which of the two darts of the root arc roots the quadrangulation."""

    FORWARD = 0
    BACKWARD = 1


def _successors_sorted(labels):
    """Vectorised successor search on one face given its corner labels.

    Because labels move by at most one between consecutive corners, the
    successor of corner i is the next corner (cyclically) with label
    exactly labels[i] - 1; it is found by binary search among the corners of
    that label sorted by position.
    """
    lab = np.asarray(labels, dtype=np.int64)
    k = len(lab)
    shift = lab - lab.min()
    keys = shift * k + np.arange(k)
    order = np.sort(keys)
    want = (shift - 1) * k + np.arange(k)
    j = np.searchsorted(order, want, side="right")
    j = np.minimum(j, k - 1)
    hit = (order[j] // k) == shift - 1
    # wrap around: first corner of the target label
    first = np.searchsorted(order, (shift - 1) * k, side="left")
    first = np.minimum(first, k - 1)
    hit_wrap = (order[first] // k) == shift - 1
    out = np.where(hit, order[j] % k, np.where(hit_wrap, order[first] % k, -1))
    out[shift == 0] = -1
    return out.tolist()


def face_successors(face, dart_label):
    """Successor of each corner of one face.

    ``face`` lists the darts of the face in facial order.  Returns a list
    aligned with ``face`` holding the index (in ``face``) of the successor,
    or -1 when the corner has the minimal label of the face.  Small faces use
    two sweeps with a stack per label; large faces a sorted search.
    """
    k = len(face)
    if k > 256:
        return _successors_sorted([dart_label[d] for d in face])
    succ = [-1] * k
    waiting = {}
    for j in range(2 * k):
        i = j % k
        x = dart_label[face[i]]
        w = waiting.pop(x + 1, None)
        if w:
            for a in w:
                succ[a] = i
        if j < k:
            lst = waiting.get(x)
            if lst is None:
                waiting[x] = [i]
            else:
                lst.append(i)
    return succ


@dataclass
class ArcConstruction:
    """Output of the arc engine with the metadata needed downstream."""

    q: Quadrangulation
    succ: list            # per dart of m: successor dart, or -1 for the sink
    arc_face: list        # per dart of m: face id of m containing the corner
    sink_vertex: list     # per face id of m: vertex id of v_i in q
    vertex_map: list      # per vertex of m: vertex id in q
    tau: list             # per face id of m: min label of the face minus 1
    labels: list          # per vertex of q: label (tau_i on v_i)


def arc_construction(m, dart_label, root_choice=RootChoice.FORWARD, check=True):
    """Quadrangulation formed by the successor arcs of a labeled map."""
    D = m.n_darts
    faces = m.faces
    pos = [0] * D
    succ = [-1] * D
    sinks = []
    tau = []
    for f in faces:
        for i, d in enumerate(f):
            pos[d] = i
        s = face_successors(f, dart_label)
        sink = []
        for i, j in enumerate(s):
            if j >= 0:
                succ[f[i]] = f[j]
            else:
                sink.append(f[i])
        sinks.append(sink)
        tau.append(min(dart_label[d] for d in f) - 1)
    # incoming arcs of every corner, listed by increasing facial position
    incoming = [None] * D
    for f in faces:
        for a in f:
            t = succ[a]
            if t >= 0:
                lst = incoming[t]
                if lst is None:
                    incoming[t] = [a]
                else:
                    lst.append(a)
    face_of = m.face_of
    sq = [0] * (2 * D)
    qcycles = []
    for cyc in m.vertices:
        seq = []
        for d in cyc:
            ins = incoming[d]
            if ins is not None:
                if len(ins) == 1:
                    seq.append(2 * ins[0] + 1)
                else:
                    # closest predecessor first: corners before d in the
                    # face sweep, then those after it, both backwards
                    pd = pos[d]
                    before = [2 * a + 1 for a in ins if pos[a] < pd]
                    after = [2 * a + 1 for a in ins if pos[a] > pd]
                    seq.extend(before[::-1])
                    seq.extend(after[::-1])
            seq.append(2 * d)
        for x, y in zip(seq, seq[1:]):
            sq[x] = y
        sq[seq[-1]] = seq[0]
        qcycles.append(seq)
    for sink in sinks:
        seq = [2 * a + 1 for a in sorted(sink, key=lambda a: pos[a], reverse=True)]
        for x, y in zip(seq, seq[1:]):
            sq[x] = y
        sq[seq[-1]] = seq[0]
        qcycles.append(seq)
    alpha = [x ^ 1 for x in range(2 * D)]
    root = 2 * m.root + int(root_choice)
    qm = HalfEdgeMap._raw(alpha, sq, root, vertices=normalize_cycles(qcycles, 2 * D))
    if check:
        try:
            qm._validate()
            q = check_quadrangulation(qm)
        except Exception as exc:
            raise ArcPlanarityFailure(str(exc)) from None
        if q.n_faces != m.n_edges:
            raise ArcPlanarityFailure("face count differs from edge count")
    else:
        q = Quadrangulation._raw(qm.alpha, qm.sigma, root)
        q._cache = qm._cache
    qv = q.vertex_of
    vertex_map = [qv[2 * cyc[0]] for cyc in m.vertices]
    sink_vertex = [qv[2 * s[0] + 1] for s in sinks]
    labels = [0] * q.n_vertices
    for u, cyc in enumerate(m.vertices):
        labels[vertex_map[u]] = dart_label[cyc[0]]
    for i, v in enumerate(sink_vertex):
        labels[v] = tau[i]
    return ArcConstruction(q, succ, list(face_of), sink_vertex, vertex_map, tau, labels)


def tree_map(t):
    """Plane map of a labeled tree with darts numbered along the contour:
    dart i goes from the i-th to the (i+1)-th visited corner, phi(i) = i+1.
    Returns the map, the label of each dart's origin and the preorder vertex
    visited at each contour step."""
    C, V = contour_walk(t.parent)
    two_n = len(C) - 1
    alpha = [0] * two_n
    stack = []
    for i in range(two_n):
        if C[i + 1] > C[i]:
            stack.append(i)
        else:
            j = stack.pop()
            alpha[i] = j
            alpha[j] = i
    sigma = [(alpha[d] + 1) % two_n for d in range(two_n)]
    rot = [[] for _ in range(t.n_vertices)]
    for i in range(two_n):
        rot[V[i]].append(i)
    owner = V[:-1]
    m = HalfEdgeMap._raw(alpha, sigma, 0, vertices=(rot, owner),
                         faces=([list(range(two_n))], [0] * two_n))
    lab = t.labels
    return m, [lab[v] for v in owner], V


@dataclass
class PointedQuadrangulation:
    """Quadrangulation with a distinguished vertex v* and the label of every
    vertex (label of v* is min - 1), so that d(v*, v) = label(v) - label(v*)."""

    q: Quadrangulation
    v_star: int
    vertex_labels: list
    tree_vertex: list = None   # per tree vertex (preorder): vertex id in q

    def distance_profile(self):
        base = self.vertex_labels[self.v_star]
        return [x - base for x in self.vertex_labels]


def _cvs_vectorised(t, root_choice):
    """Same output as the generic engine on ``tree_map(t)``, built with
    array sorts instead of per-vertex loops."""
    C, V = contour_walk(t.parent)
    D = len(C) - 1
    n1 = t.n_vertices
    lab_v = np.asarray(t.labels, dtype=np.int64)
    Vc = np.asarray(V[:-1], dtype=np.int64)
    L = lab_v[Vc]
    succ = np.asarray(_successors_sorted(L), dtype=np.int64)
    c = np.arange(D, dtype=np.int64)
    sink = succ < 0
    tgt = np.where(sink, 0, succ)
    # rotation keys: (vertex, corner, rank inside the corner)
    grp = np.concatenate([Vc, np.where(sink, n1, Vc[tgt])])
    corner = np.concatenate([c, np.where(sink, 0, tgt)])
    rank = np.concatenate([np.full(D, D), np.where(sink, D - c, (tgt - c) % D)])
    darts = np.concatenate([2 * c, 2 * c + 1])
    order = np.lexsort((rank, corner, grp))
    seq = darts[order]
    g = grp[order]
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    ends = np.r_[starts[1:], len(seq)]
    nxt = np.empty_like(seq)
    nxt[:-1] = seq[1:]
    nxt[ends - 1] = seq[starts]
    sigma = np.empty(2 * D, dtype=np.int64)
    sigma[seq] = nxt
    gmin = np.minimum.reduceat(seq, starts)
    vid = np.empty(len(starts), dtype=np.int64)
    vid[np.argsort(gmin, kind="stable")] = np.arange(len(starts))
    owner = np.empty(2 * D, dtype=np.int64)
    owner[seq] = np.repeat(vid, ends - starts)
    alpha = np.arange(2 * D, dtype=np.int64) ^ 1
    root = int(root_choice)
    q = Quadrangulation._raw(alpha.tolist(), sigma.tolist(), root, vertex_of=owner.tolist())
    labels = np.empty(len(starts), dtype=np.int64)
    labels[vid[:n1]] = lab_v
    labels[vid[n1]] = lab_v.min() - 1
    return PointedQuadrangulation(q, int(vid[n1]), labels.tolist(), vid[:n1].tolist())


def cvs_reverse(t, root_choice=RootChoice.FORWARD, check=True):
    """CVS construction: labeled tree with n >= 1 edges to a pointed
    quadrangulation with n faces."""
    if t.n_edges < 1:
        raise ValueError("tree must have at least one edge")
    if not check:
        return _cvs_vectorised(t, root_choice)
    m, dl, _ = tree_map(t)
    ac = arc_construction(m, dl, root_choice, check=check)
    # tree_map numbers its vertices by preorder already
    tree_vertex = list(ac.vertex_map)
    return PointedQuadrangulation(ac.q, ac.sink_vertex[0], ac.labels, tree_vertex)


def sample_quadrangulation(n, seed=None, rng=None, check=False):
    """Uniform pointed rooted quadrangulation with n faces."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    t = sample_labeled_tree(n, rng)
    choice = RootChoice(int(rng.integers(0, 2)))
    pq = cvs_reverse(t, choice, check=check)
    return pq, t


def count_quadrangulations(n):
    """#Q_n = 2 * 3^n * binom(2n, n) / ((n + 1)(n + 2))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2 * 3 ** n * math.comb(2 * n, n) // ((n + 1) * (n + 2))


def cvs_edge_list(t):
    """Edges of the CVS quadrangulation of ``t`` as two integer arrays,
    without building the rotation system.  Tree vertices keep their preorder
    ids and v* is vertex ``n + 1``."""
    _, V = contour_walk(t.parent)
    cv = V[:-1]
    lab = t.labels
    L = [lab[v] for v in cv]
    succ = face_successors(list(range(len(L))), L)
    n1 = t.n_vertices
    src = np.asarray(cv, dtype=np.int64)
    dst = np.asarray([cv[j] if j >= 0 else n1 for j in succ], dtype=np.int64)
    return n1 + 1, src, dst, n1
