"""Graph metrics on quadrangulations and on contour encodings.

Distances come from unweighted shortest paths (scipy's csgraph BFS) over a
CSR adjacency built once per map.  Balls are open: B(v, r) = {w : d(v, w) < r}.
Event radii are expressed through the scale (8n/9)^(1/4), with n the number
of faces.

Geodesic facts used throughout:

* w lies on some geodesic u -> x iff d(u, w) + d(w, x) = d(u, x);
* every geodesic u -> x meets a vertex set B iff deleting B makes x
  unreachable from u or strictly farther;
* two geodesics u -> x and u -> y sharing a vertex w exist iff w lies on
  some geodesic of each kind, since geodesic pieces can be chosen freely.
"""

from dataclasses import dataclass, field
from functools import cached_property
import itertools

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import csgraph_from_dense, floyd_warshall, shortest_path

from .encodings import contour_vertices
from .errors import TooLarge
from .planar_map import HalfEdgeMap

__all__ = [
    "MetricGraph",
    "DistanceField",
    "StarReport",
    "DiscretePseudoMetrics",
    "as_graph",
    "scale",
    "bfs",
    "aligned",
    "geodesic",
    "every_geodesic_meets",
    "event_A1",
    "event_A1_report",
    "event_A2",
    "event_A2_report",
    "star_points_on_geodesic",
    "covering_number",
    "packing_number",
    "separated_points",
    "discrete_pseudo_metrics",
    "PSEUDO_METRIC_MAX_STEPS",
]

PSEUDO_METRIC_MAX_STEPS = 2000


def scale(n):
    """(8n/9)^(1/4), the distance scale of a quadrangulation with n faces."""
    return (8 * n / 9) ** 0.25


class MetricGraph:
    """Simple undirected graph (CSR) with memoised BFS per source."""

    def __init__(self, n_vertices, src, dst):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        keep = src != dst
        src, dst = src[keep], dst[keep]
        ones = np.ones(2 * len(src), dtype=np.int8)
        a = coo_matrix((ones, (np.r_[src, dst], np.r_[dst, src])),
                       shape=(n_vertices, n_vertices)).tocsr()
        a.data[:] = 1
        self.n_vertices = n_vertices
        self.csr = a
        self._dist = {}

    @classmethod
    def from_map(cls, m):
        e = np.asarray(m.edge_list(), dtype=np.int64).reshape(-1, 2)
        return cls(m.n_vertices, e[:, 0], e[:, 1])

    def neighbours(self, v):
        a = self.csr
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def dist(self, source):
        """Distances from ``source`` as an int array (-1 when unreachable)."""
        d = self._dist.get(source)
        if d is None:
            raw = shortest_path(self.csr, unweighted=True, directed=False, indices=source)
            d = np.where(np.isinf(raw), -1, raw).astype(np.int64)
            d.setflags(write=False)
            self._dist[source] = d
        return d

    def masked_path(self, source, target, removed):
        """Shortest path source -> target avoiding the ``removed`` mask, or None."""
        keep = ~np.asarray(removed, dtype=bool)
        if not (keep[source] and keep[target]):
            return None
        a = self.csr
        rows = np.repeat(np.arange(self.n_vertices), np.diff(a.indptr))
        ok = keep[rows] & keep[a.indices]
        sub = csr_matrix((a.data[ok], (rows[ok], a.indices[ok])), shape=a.shape)
        raw, pred = shortest_path(sub, unweighted=True, directed=False, indices=source,
                                  return_predecessors=True)
        if np.isinf(raw[target]):
            return None
        path = [target]
        while path[-1] != source:
            path.append(int(pred[path[-1]]))
        return path[::-1]


def as_graph(q):
    """MetricGraph of a map (cached on the map) or the graph itself."""
    if isinstance(q, MetricGraph):
        return q
    if isinstance(q, HalfEdgeMap):
        g = q._cache.get("metric_graph")
        if g is None:
            g = q._cache["metric_graph"] = MetricGraph.from_map(q)
        return g
    raise TypeError(f"expected a map or MetricGraph, got {type(q).__name__}")


@dataclass(frozen=True)
class DistanceField:
    source: int
    dist: np.ndarray

    def __getitem__(self, v):
        return int(self.dist[v])


def bfs(q, source):
    """Graph distances from ``source``."""
    return DistanceField(source, as_graph(q).dist(source))


def aligned(q, x, y, z):
    """d(x, y) + d(y, z) = d(x, z)."""
    g = as_graph(q)
    dy = g.dist(y)
    return int(dy[x]) + int(dy[z]) == int(g.dist(x)[z])


def geodesic(q, x, y):
    """The geodesic x -> y with lexicographically smallest vertex sequence."""
    g = as_graph(q)
    dy = g.dist(y)
    if dy[x] < 0:
        raise ValueError("vertices are not connected")
    path = [x]
    while path[-1] != y:
        u = path[-1]
        path.append(int(min(w for w in g.neighbours(u) if dy[w] == dy[u] - 1)))
    return path


def every_geodesic_meets(q, u, w, blocked):
    """True when every geodesic u -> w visits a vertex of the ``blocked`` mask.
    Otherwise returns the avoiding geodesic found (a list) as the witness."""
    g = as_graph(q)
    path = g.masked_path(u, w, blocked)
    if path is None or len(path) - 1 > g.dist(u)[w]:
        return True
    return path


def _not_aligned_any_order(g, pts):
    """None when no three of ``pts`` are aligned in any order, else a witness."""
    for a, b, c in itertools.combinations(pts, 3):
        for x, y, z in ((b, a, c), (a, b, c), (a, c, b)):
            if int(g.dist(y)[x]) + int(g.dist(y)[z]) == int(g.dist(x)[z]):
                return (x, y, z)
    return None


@dataclass(frozen=True)
class StarReport:
    """Outcome of an event or star-point query.

    ``bullets`` holds one flag per condition of an event, ``witnesses`` maps
    a failed condition to its counterexample (paths or aligned triples).
    ``geodesic`` and ``star`` describe the chosen geodesic and its star
    points; ``star_witness[i]`` is a vertex of the geodesic through which a
    geodesic from the reference point reaches point i (-1 for star points).
    """

    holds: bool
    bullets: tuple = ()
    witnesses: dict = field(default_factory=dict)
    geodesic: tuple = ()
    star: tuple = ()
    star_witness: tuple = ()

    def star_points(self):
        return [v for v, s in zip(self.geodesic, self.star) if s]


def event_A1_report(q, v0, v1, v2, eps, beta, n):
    g = as_graph(q)
    s = scale(n)
    d0, d1, d2 = g.dist(v0), g.dist(v1), g.dist(v2)
    wit = {}
    ball = d0 < eps * s
    b1 = every_geodesic_meets(g, v1, v2, ball)
    if b1 is not True:
        wit["ball"] = b1
        b1 = False
    far = eps ** (1 - beta) * s
    bad = (d0 > far) & (d1 + d2 != d1[v2])
    b2 = False
    for target in (v1, v2):
        r = every_geodesic_meets(g, v0, target, bad)
        if r is True:
            b2 = True
            break
        wit[f"aligned_tail_{target}"] = r
    trip = _not_aligned_any_order(g, (v0, v1, v2))
    b3 = trip is None and min(d0[v1], d0[v2]) >= 3 * far
    if trip is not None:
        wit["aligned"] = trip
    bullets = (bool(b1), bool(b2), bool(b3))
    return StarReport(all(bullets), bullets, wit)


def event_A1(q, v0, v1, v2, eps, beta, n):
    """Discrete event A1(eps, beta) for the points v0, v1, v2, evaluated with
    the cheap conditions first."""
    g = as_graph(q)
    s = scale(n)
    d0, d1, d2 = g.dist(v0), g.dist(v1), g.dist(v2)
    far = eps ** (1 - beta) * s
    if min(d0[v1], d0[v2]) < 3 * far or _not_aligned_any_order(g, (v0, v1, v2)):
        return False
    bad = (d0 > far) & (d1 + d2 != d1[v2])
    if not any(every_geodesic_meets(g, v0, t, bad) is True for t in (v1, v2)):
        return False
    return every_geodesic_meets(g, v1, v2, d0 < eps * s) is True


def event_A2_report(q, v0, v1, v2, v3, eps, n):
    g = as_graph(q)
    s = scale(n)
    d0 = g.dist(v0)
    wit = {}
    ball = d0 < eps * s
    b1 = every_geodesic_meets(g, v1, v2, ball)
    if b1 is not True:
        wit["ball"] = b1
        b1 = False
    on = {}
    for v in (v1, v2, v3):
        on[v] = d0 + g.dist(v) == d0[v]
    b2 = True
    for a, b in itertools.combinations((v1, v2, v3), 2):
        shared = np.flatnonzero(on[a] & on[b] & ~ball)
        if len(shared):
            b2 = False
            wit["shared"] = (a, b, int(shared[0]))
            break
    pts = (v0, v1, v2, v3)
    trip = _not_aligned_any_order(g, pts)
    b3 = trip is None and min(d0[v1], d0[v2], d0[v3]) >= 3 * eps * s
    if trip is not None:
        wit["aligned"] = trip
    bullets = (bool(b1), b2, bool(b3))
    return StarReport(all(bullets), bullets, wit)


def event_A2(q, v0, v1, v2, v3, eps, n):
    """Discrete event A2(eps) for the points v0, ..., v3, evaluated with the
    cheap conditions first."""
    g = as_graph(q)
    s = scale(n)
    d0 = g.dist(v0)
    if min(d0[v1], d0[v2], d0[v3]) < 3 * eps * s or _not_aligned_any_order(g, (v0, v1, v2, v3)):
        return False
    ball = d0 < eps * s
    on = [d0 + g.dist(v) == d0[v] for v in (v1, v2, v3)]
    if any((a & b & ~ball).any() for a, b in itertools.combinations(on, 2)):
        return False
    return every_geodesic_meets(g, v1, v2, ball) is True


def star_points_on_geodesic(q, v1, v2, v3, path=None):
    """Star points of the geodesic v1 -> v2 seen from v3.

    y on the geodesic is a star point when no other vertex y' of the
    geodesic satisfies d(v3, y') + d(y', y) = d(v3, y), i.e. no geodesic
    from v3 to y touches the geodesic before y.  ``path`` overrides the
    default lexicographically smallest geodesic.
    """
    g = as_graph(q)
    gam = list(geodesic(g, v1, v2) if path is None else path)
    d3 = g.dist(v3)
    idx = np.asarray(gam)
    flags, wit = [], []
    for y in gam:
        dy = g.dist(y)
        hit = (d3[idx] + dy[idx] == d3[y]) & (idx != y)
        w = int(idx[np.argmax(hit)]) if hit.any() else -1
        flags.append(w < 0)
        wit.append(w)
    return StarReport(any(flags), (), {}, tuple(gam), tuple(flags), tuple(wit))


# covers and packings --------------------------------------------------------------

def _balls(points, q, eps):
    """Per vertex of q: bitmask of the points in its open eps-ball."""
    g = as_graph(q)
    masks = np.zeros(g.n_vertices, dtype=object)
    masks[:] = 0
    for i, p in enumerate(points):
        d = g.dist(p)
        for v in np.flatnonzero((d >= 0) & (d < eps)):
            masks[v] |= 1 << i
    return masks


def covering_number(points, q, eps, method="greedy"):
    """Number of open eps-balls (centres anywhere in q) covering ``points``.

    ``greedy`` is the greedy set cover (an upper bound on the minimum);
    ``exact`` is a branch and bound search, allowed for at most 20 points.
    """
    points = list(dict.fromkeys(points))
    if not points:
        return 0
    if eps <= 0:
        raise ValueError("radius must be positive")
    full = (1 << len(points)) - 1
    masks = [int(x) for x in _balls(points, q, eps)]
    if method == "greedy":
        left, count = full, 0
        while left:
            best = max(range(len(masks)), key=lambda v: (bin(masks[v] & left).count("1"), -v))
            left &= ~masks[best]
            count += 1
        return count
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    if len(points) > 20:
        raise TooLarge("exact covering limited to 20 points")
    cand = sorted({m for m in masks if m}, reverse=True)
    cand = [m for m in cand if not any(o != m and o & m == m for o in cand)]
    best = [covering_number(points, q, eps, "greedy")]

    def search(left, used):
        if not left:
            best[0] = min(best[0], used)
            return
        if used + 1 >= best[0]:
            return
        low = (left & -left).bit_length() - 1
        for m in cand:
            if m >> low & 1:
                search(left & ~m, used + 1)

    search(full, 0)
    return best[0]


def packing_number(points, q, eps):
    """Size of a greedy set of ``points`` at pairwise distance >= 2 eps.

    An open eps-ball holds at most one of them, so this is a lower bound for
    every covering number."""
    g = as_graph(q)
    chosen = []
    for p in dict.fromkeys(points):
        d = g.dist(p)
        if all(d[c] >= 2 * eps for c in chosen):
            chosen.append(p)
    return len(chosen)


def separated_points(path, q, eta):
    """Points of a vertex chain at pairwise distance >= 2 eta.

    s_0 = 0 and s_{i+1} is the index right after the last one within
    distance < 2 eta of path[s_i].  With integer distances the spacing is
    ceil(2 eta), and at least floor(d(ends) / ceil(2 eta)) + 1 points come out.
    """
    g = as_graph(q)
    path = list(path)
    if not path:
        return []
    for a, b in zip(path, path[1:]):
        if a != b and b not in set(g.neighbours(a).tolist()):
            raise ValueError("path is not a chain of adjacent vertices")
    idx = np.asarray(path)
    out = []
    s = 0
    while True:
        out.append(path[s])
        close = np.flatnonzero(g.dist(path[s])[idx] < 2 * eta)
        nxt = int(close[-1]) + 1
        if nxt >= len(path):
            return out
        s = nxt


# pseudo-metrics of a labeled tree ---------------------------------------------------

@dataclass(frozen=True)
class DiscretePseudoMetrics:
    """d_e, D° on contour steps 0..2n-1 and D* on the classes {d_e = 0}.

    Arcs are cyclic: for j < i the arc from i to j is i..2n-1, 0..j.
    """

    C: np.ndarray
    L: np.ndarray
    d_e: np.ndarray
    D_circ: np.ndarray
    classes: np.ndarray          # class (tree vertex) of every step

    @property
    def s_star(self):
        return int(np.argmin(self.L))

    @property
    def n_classes(self):
        return int(self.classes.max()) + 1

    @cached_property
    def D_circ_classes(self):
        """Min of D° over representatives, per pair of classes."""
        k = self.n_classes
        out = np.full((k, k), np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(out, (self.classes[:, None], self.classes[None, :]), self.D_circ)
        return out

    @cached_property
    def D_star(self):
        """Chained infimum of D° over classes (shortest paths)."""
        w = self.D_circ_classes.astype(float)
        np.fill_diagonal(w, 0)
        return floyd_warshall(csgraph_from_dense(w, null_value=np.inf)).round().astype(np.int64)

    def label_of_class(self):
        out = np.zeros(self.n_classes, dtype=np.int64)
        out[self.classes] = self.L
        return out


def _arc_minima(x):
    """M[i, k] = min(x[i], ..., x[i + k]) with cyclic indices."""
    N = len(x)
    idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
    return np.minimum.accumulate(x[idx], axis=1)


def discrete_pseudo_metrics(c, max_steps=PSEUDO_METRIC_MAX_STEPS):
    """Tables of d_e, D° and (lazily) D* for a contour encoding."""
    two_n = len(c.C) - 2
    N = max(two_n, 1)
    if N > max_steps:
        raise TooLarge(f"pseudo-metric tables limited to {max_steps} contour steps")
    C = np.asarray(c.C[:N], dtype=np.int64)
    L = np.asarray(c.L[:N], dtype=np.int64)
    i = np.arange(N)
    di = (i[None, :] - i[:, None]) % N          # offset of j from i
    MC = np.minimum.accumulate(C[(i[:, None] + i[None, :]) % N], axis=1)
    lo, hi = np.minimum(i[:, None], i[None, :]), np.maximum(i[:, None], i[None, :])
    minC = MC[lo, hi - lo]
    d_e = C[:, None] + C[None, :] - 2 * minC
    ML = _arc_minima(L)
    fwd = ML[i[:, None], di]                     # arc i -> j
    bwd = ML[i[None, :], di.T]                   # arc j -> i
    D_circ = L[:, None] + L[None, :] - 2 * np.maximum(fwd, bwd)
    classes = np.asarray(contour_vertices(c.C)[:N], dtype=np.int64)
    return DiscretePseudoMetrics(C, L, d_e, D_circ, classes)
