"""Monte Carlo experiments, census verification and exponent fitting.

Every replica draws from its own stream ``SeedSequence(seed, spawn_key=(n,
replica))``, and results are merged in (n, replica) order, so the output
bytes depend only on the configuration, never on the number of workers.
Wall times go to a sidecar ``<out>.timing.csv``.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, fields, replace
import io
import json
import math
from pathlib import Path
import time

import numpy as np
from scipy import stats

from .cvs import cvs_edge_list
from .encodings import sample_labeled_tree
from .errors import DegenerateData
from .metrics import (
    MetricGraph,
    covering_number,
    event_A1,
    event_A2,
    packing_number,
    scale,
    star_points_on_geodesic,
)

__all__ = [
    "ExperimentConfig",
    "parse_keyvalue",
    "load_config",
    "replica_rng",
    "sample_graph",
    "run_scaling",
    "run_star_events",
    "run_covering",
    "summarize_events",
    "wilson_interval",
    "verify_census",
    "CheckResult",
    "fit_exponent",
    "FitResult",
    "mean_by",
    "write_csv",
    "read_csv",
    "SCHEMAS",
]

KINDS = ("scaling", "stars", "covering")

SCHEMAS = {
    "scaling": ["n", "replica", "v1", "v2", "distance", "rescaled"],
    "stars": ["n", "replica", "eps", "beta", "A1", "A2"],
    "covering": ["n", "replica", "eps", "beta", "geodesic_length", "star_points",
                 "star_points_far", "cover", "packing"],
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "scaling"
    ns: tuple = (1024,)
    replicas: int = 10
    eps: tuple = (0.1,)
    beta: float = 0.25
    seed: int = 0
    threads: int = 1
    out: str = ""
    oracle_max: int = 5

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(x) for x in _as_tuple(self.ns)))
        object.__setattr__(self, "eps", tuple(float(x) for x in _as_tuple(self.eps)))

    def validate(self):
        if self.kind not in KINDS + ("verify",):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.ns or any(n < 1 for n in self.ns):
            raise ValueError("ns must be a non-empty list of positive sizes")
        if not self.eps or any(e <= 0 for e in self.eps):
            raise ValueError("eps must be a non-empty list of positive radii")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        return self

    def to_dict(self):
        d = asdict(self)
        d["ns"], d["eps"] = list(self.ns), list(self.eps)
        return d


def _as_tuple(x):
    if isinstance(x, (list, tuple)):
        return tuple(x)
    return (x,)


def _parse_value(text):
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        pass
    if "," in text:
        return [_parse_value(p) for p in text.split(",") if p.strip()]
    return text.strip("\"'")


def parse_keyvalue(text):
    """``key = value`` lines; ``#`` starts a comment, lists are ``[..]`` or
    comma separated, section headers ``[name]`` are ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and "=" not in line):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_value(value)
    return out


def load_config(sources=(), **overrides):
    """Config from key=value files or inline ``key=value`` strings, later
    entries winning, then keyword overrides (None values are skipped)."""
    names = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for src in sources:
        p = Path(src)
        text = p.read_text(encoding="utf-8") if p.is_file() else src
        values.update(parse_keyvalue(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**values).validate()


def replica_rng(seed, n, replica):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, replica)))


def sample_graph(n, rng):
    """Uniform quadrangulation with n faces as a MetricGraph."""
    t = sample_labeled_tree(n, rng)
    nv, src, dst, _ = cvs_edge_list(t)
    return MetricGraph(nv, src, dst)


# replicas ------------------------------------------------------------------------

def _scaling_replica(cfg, n, rep):
    rng = replica_rng(cfg.seed, n, rep)
    g = sample_graph(n, rng)
    v1, v2 = (int(x) for x in rng.integers(g.n_vertices, size=2))
    d = int(g.dist(v1)[v2])
    return [[n, rep, v1, v2, d, d / scale(n)]]


def _stars_replica(cfg, n, rep):
    rng = replica_rng(cfg.seed, n, rep)
    g = sample_graph(n, rng)
    v = [int(x) for x in rng.integers(g.n_vertices, size=4)]
    rows = []
    for e in cfg.eps:
        a1 = event_A1(g, v[0], v[1], v[2], e, cfg.beta, n)
        a2 = event_A2(g, v[0], v[1], v[2], v[3], e, n)
        rows.append([n, rep, e, cfg.beta, int(a1), int(a2)])
    return rows


def _covering_replica(cfg, n, rep):
    rng = replica_rng(cfg.seed, n, rep)
    g = sample_graph(n, rng)
    v1, v2, v3 = (int(x) for x in rng.integers(g.n_vertices, size=3))
    rows = []
    report = star_points_on_geodesic(g, v1, v2, v3)
    pts = report.star_points()
    s = scale(n)
    d = [g.dist(x) for x in (v1, v2, v3)]
    for e in cfg.eps:
        cut = 8 * e ** (1 - cfg.beta) * s
        far = [p for p in pts if all(dx[p] >= cut for dx in d)]
        radius = e * s
        cover = max(1, covering_number(far, g, radius)) if far else 1
        pack = packing_number(far, g, radius)
        rows.append([n, rep, e, cfg.beta, len(report.geodesic) - 1, len(pts), len(far),
                     cover, pack])
    return rows


_REPLICA = {"scaling": _scaling_replica, "stars": _stars_replica,
            "covering": _covering_replica}


def _timed(job):
    kind, cfg, n, rep = job
    t0 = time.perf_counter()
    rows = _REPLICA[kind](cfg, n, rep)
    return rows, time.perf_counter() - t0


def _run(kind, cfg):
    cfg = replace(cfg, kind=kind).validate()
    jobs = [(kind, cfg, n, rep) for n in cfg.ns for rep in range(cfg.replicas)]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_timed, jobs, chunksize=max(1, len(jobs) // (8 * cfg.threads))))
    else:
        results = [_timed(j) for j in jobs]
    rows = [r for rr, _ in results for r in rr]
    timing = [[n, rep, round(sec, 6)] for (_, _, n, rep), (_, sec) in zip(jobs, results)]
    if cfg.out:
        write_csv(cfg.out, SCHEMAS[kind], rows)
        write_csv(cfg.out + ".timing.csv", ["n", "replica", "seconds"], timing)
    return rows


def run_scaling(cfg):
    """Rows (n, replica, v1, v2, d(v1, v2), d / (8n/9)^(1/4)) for uniform pairs."""
    return _run("scaling", cfg)


def run_star_events(cfg):
    """Rows (n, replica, eps, beta, A1, A2) for uniform v0..v3; all radii of a
    replica share the same map and points."""
    return _run("stars", cfg)


def run_covering(cfg):
    """Greedy covers and packings of the star points of a geodesic v1 -> v2
    seen from v3, far from the three marked points."""
    return _run("covering", cfg)


# summaries -------------------------------------------------------------------------

def wilson_interval(k, m, z=1.959963984540054):
    """Wilson score interval for k successes out of m."""
    if m == 0:
        return (0.0, 1.0)
    p = k / m
    den = 1 + z * z / m
    centre = (p + z * z / (2 * m)) / den
    half = z * math.sqrt(p * (1 - p) / m + z * z / (4 * m * m)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def summarize_events(rows, column="A2"):
    """Per (n, eps): (count, trials, frequency, wilson_low, wilson_high)."""
    idx = SCHEMAS["stars"].index(column)
    acc = {}
    for r in rows:
        key = (int(r[0]), float(r[2]))
        k, m = acc.get(key, (0, 0))
        acc[key] = (k + int(r[idx]), m + 1)
    out = {}
    for key in sorted(acc):
        k, m = acc[key]
        out[key] = (k, m, k / m) + wilson_interval(k, m)
    return out


def mean_by(rows, key_col, value_col, header=None):
    """Mean and standard error of ``value_col`` grouped by ``key_col``."""
    header = header or SCHEMAS["scaling"]
    ki, vi = header.index(key_col), header.index(value_col)
    groups = {}
    for r in rows:
        groups.setdefault(r[ki], []).append(float(r[vi]))
    return {k: (float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0)
            for k, v in sorted(groups.items())}


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    stderr: float
    points: int


def fit_exponent(data, x_col=None, y_col=None):
    """Least-squares slope of log y against log x with a 95% interval.

    ``data`` is a CSV path, a list of dict rows, or a pair of sequences.
    """
    if isinstance(data, (str, Path)):
        data = read_csv(data)
    if isinstance(data, tuple) and len(data) == 2:
        xs, ys = data
    else:
        xs = [float(r[x_col]) for r in data]
        ys = [float(r[y_col]) for r in data]
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 3:
        raise DegenerateData("need at least 3 points")
    if (x <= 0).any() or (y <= 0).any():
        raise DegenerateData("log-log fit needs positive values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DegenerateData("all x values are equal")
    res = stats.linregress(lx, ly)
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    half = float(stats.t.ppf(0.975, len(x) - 2)) * stderr
    slope = float(res.slope)
    return FitResult(slope, float(res.intercept), slope - half, slope + half, stderr, len(x))


# csv -----------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise ValueError("row does not match the header")
        w.writerow([_fmt(v) for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# census verification ---------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _golden_dir(cfg_dir=None):
    if cfg_dir:
        return Path(cfg_dir)
    from importlib import resources
    return Path(str(resources.files("quadmaps").joinpath("data")))


def verify_census(golden_dir=None, max_n=3):
    """Exact checks over small censuses; failures are report entries."""
    from .cvs import count_quadrangulations, cvs_reverse
    from .encodings import (
        contour_of_tree,
        enumerate_labeled_trees,
        motzkin_count,
        motzkin_count_positive,
        tree_of_contour,
    )
    from .multipoint import (
        count_delayed_quadrangulations,
        enumerate_labeled_maps,
        enumerate_lm,
        image_code,
        phi_reverse,
    )
    from .planar_map import canonical_code, enumerate_rooted_quadrangulations
    from .schemes import (
        count_labeled_maps_exact,
        decompose,
        enumerate_schemes,
        reconstruct,
        scheme_census,
    )

    results = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:          # failures are reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))

    def quad_census():
        got = [len(enumerate_rooted_quadrangulations(n)) for n in range(1, max_n + 1)]
        want = [count_quadrangulations(n) for n in range(1, max_n + 1)]
        return got == want, f"enumerated {got}, closed formula {want}"

    def cvs_census():
        bad = []
        for n in range(1, max_n + 1):
            codes = set()
            for t in enumerate_labeled_trees(n):
                for c in (0, 1):
                    pq = cvs_reverse(t, c)
                    codes.add((canonical_code(pq.q), pq.v_star))
            full = {canonical_code(q) for q in enumerate_rooted_quadrangulations(n)}
            if {c for c, _ in codes} != full:
                bad.append(n)
        return not bad, f"CVS images miss quadrangulations at n = {bad}" if bad else "all hit"

    def contour_roundtrip():
        for n in range(1, max_n + 1):
            for t in enumerate_labeled_trees(n):
                if tree_of_contour(contour_of_tree(t)) != t:
                    return False, f"tree {t} fails"
        return True, "all trees"

    def motzkin():
        for a in range(1, 9):
            for b in range(1, 9):
                for r in range(1, 9):
                    if motzkin_count_positive(a, b, r) != motzkin_count(a, b, r) - motzkin_count(a, -b, r):
                        return False, f"reflection fails at {(a, b, r)}"
            for r in range(1, 9):
                if r * motzkin_count_positive(a, 0, r) != a * motzkin_count(a, 0, r):
                    return False, f"cyclic lemma fails at {(a, r)}"
        return True, "arguments <= 8"

    def two_to_one():
        for n in range(1, max_n + 1):
            lms = enumerate_labeled_maps(n, 3)
            images = set()
            for lm in lms:
                for c in (0, 1):
                    dq, _ = phi_reverse(lm, c, check=False)
                    images.add(image_code(dq))
            if len(images) != 2 * len(lms) or count_delayed_quadrangulations(n) != 2 * len(lms):
                return False, f"n = {n}: {len(images)} images for {len(lms)} maps"
        return True, f"n <= {max_n}"

    def golden_census():
        path = _golden_dir(golden_dir) / "scheme_census.json"
        stored = json.loads(path.read_text(encoding="utf-8"))
        for c in stored:
            if c["k"] != 2:
                continue
            got = scheme_census(c["k"], c["dominant_only"], c["planted"])
            if got != c:
                return False, f"{path.name}: stored {c} differs from enumerated {got}"
        pre = scheme_census(3, True, False)
        ref = next(c for c in stored if c["k"] == 3 and c["dominant_only"] and not c["planted"])
        if pre != ref:
            return False, f"{path.name}: stored {ref} differs from enumerated {pre}"
        return True, f"{path.name} matches"

    def scheme_counts():
        schemes = enumerate_schemes(2)
        for n in range(1, max_n + 1):
            total = sum(count_labeled_maps_exact(s, n) for s in schemes)
            got = len(enumerate_lm(n, k=2))
            if total != got:
                return False, f"n = {n}: formula {total}, enumeration {got}"
        return True, f"n <= {max_n}"

    def scheme_roundtrip():
        for n in range(2, max_n + 1):
            for lm in enumerate_lm(n, k=2):
                if reconstruct(decompose(lm)).code() != lm.code():
                    return False, f"roundtrip fails for {lm.to_dict()}"
        return True, f"n <= {max_n}"

    check("quadrangulation census", quad_census)
    check("cvs bijection census", cvs_census)
    check("contour roundtrip", contour_roundtrip)
    check("motzkin identities", motzkin)
    check("two-to-one images", two_to_one)
    check("golden scheme census", golden_census)
    check("labeled map count formula", scheme_counts)
    check("scheme decomposition roundtrip", scheme_roundtrip)
    return results
