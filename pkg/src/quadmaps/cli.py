"""Command line entry point: ``quadmaps <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

import argparse
import json
from pathlib import Path
import sys

import numpy as np

from .errors import QuadmapsError

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


# subcommands ---------------------------------------------------------------------

def cmd_sample(args):
    from .cvs import sample_quadrangulation
    from .planar_map import map_to_json

    pq, t = sample_quadrangulation(args.faces, seed=args.seed or 0)
    extra = {"v_star": pq.v_star, "labels": list(pq.vertex_labels)}
    if args.with_tree:
        extra["tree"] = t.to_dict()
    _emit(map_to_json(pq.q, **extra) + "\n", args.out)
    return EXIT_OK


def cmd_phi_reverse(args):
    from .cvs import RootChoice
    from .multipoint import LabeledMap, phi_reverse

    lm = LabeledMap.from_dict(_read_json(args.input))
    dq, choice = phi_reverse(lm, RootChoice(args.choice))
    out = {"map": dq.q.to_dict(), "v": list(dq.v), "tau": list(dq.tau),
           "labels": list(dq.labels), "root_choice": int(choice)}
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK if dq.check() else EXIT_CHECK


def cmd_star_check(args):
    from .multipoint import is_geodesic_star, star_to_labeled_map
    from .planar_map import map_from_json

    q = map_from_json(_read_json(args.input))
    v = _ints(args.vertices)
    ok = is_geodesic_star(q, v, args.radius)
    out = {"vertices": v, "radius": args.radius, "in_G": bool(ok)}
    if ok and args.r_prime is not None:
        out["labeled_map"] = star_to_labeled_map(q, v, args.radius, args.r_prime).to_dict()
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_scheme_census(args):
    from .schemes import scheme_census

    c = scheme_census(args.k, dominant_only=args.dominant, planted=args.planted)
    _emit(json.dumps(c, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_metrics(args):
    from .experiments import write_csv
    from .metrics import as_graph, scale
    from .planar_map import map_from_json

    q = map_from_json(_read_json(args.input))
    g = as_graph(q)
    rng = np.random.default_rng(args.seed or 0)
    rows = []
    for i in range(args.pairs):
        u, w = (int(x) for x in rng.integers(g.n_vertices, size=2))
        d = int(g.dist(u)[w])
        rows.append([i, u, w, d, d / scale(q.n_faces)])
    header = ["pair", "u", "v", "distance", "rescaled"]
    target = args.csv or args.out
    if target:
        write_csv(target, header, rows)
    else:
        sys.stdout.write(",".join(header) + "\n")
        for r in rows:
            sys.stdout.write(",".join(str(x) for x in r) + "\n")
    return EXIT_OK


def cmd_dstar(args):
    from .encodings import LabeledTree, contour_of_tree
    from .experiments import write_csv
    from .metrics import discrete_pseudo_metrics

    t = LabeledTree.from_dict(_read_json(args.tree))
    pm = discrete_pseudo_metrics(contour_of_tree(t))
    cls, Ds = pm.classes, pm.D_star
    N = len(cls)
    rows = [[i, j, int(cls[i]), int(cls[j]), int(pm.d_e[i, j]), int(pm.D_circ[i, j]),
             int(Ds[cls[i], cls[j]])] for i in range(N) for j in range(N)]
    header = ["i", "j", "class_i", "class_j", "d_e", "D_circ", "D_star"]
    if not args.out:
        raise ValueError("dstar needs --out")
    write_csv(args.out, header, rows)
    return EXIT_OK


def _config(args, kind):
    from .experiments import load_config

    over = {"kind": kind, "seed": args.seed, "threads": args.threads, "out": args.out,
            "replicas": getattr(args, "replicas", None), "beta": getattr(args, "beta", None)}
    if getattr(args, "ns", None):
        over["ns"] = _ints(args.ns)
    if getattr(args, "eps", None):
        over["eps"] = _floats(args.eps)
    return load_config(args.config or (), **over)


def cmd_scaling(args):
    from .experiments import fit_exponent, mean_by, run_scaling

    cfg = _config(args, "scaling")
    rows = run_scaling(cfg)
    means = mean_by(rows, "n", "distance")
    for n, (m, se) in means.items():
        print(f"n={n} mean_distance={m:.4f} se={se:.4f}")
    if len(means) >= 3:
        f = fit_exponent((list(means), [m for m, _ in means.values()]))
        print(f"slope={f.slope:.4f} ci=[{f.ci_low:.4f}, {f.ci_high:.4f}]")
    return EXIT_OK


def cmd_stars(args):
    from .experiments import run_star_events, summarize_events

    cfg = _config(args, "stars")
    rows = run_star_events(cfg)
    for col in ("A1", "A2"):
        for (n, e), (k, m, p, lo, hi) in summarize_events(rows, col).items():
            print(f"{col} n={n} eps={e} hits={k}/{m} freq={p:.5f} wilson=[{lo:.5f}, {hi:.5f}]")
    return EXIT_OK


def cmd_covering(args):
    from .experiments import SCHEMAS, mean_by, run_covering

    cfg = _config(args, "covering")
    rows = run_covering(cfg)
    h = SCHEMAS["covering"]
    for e, (m, se) in mean_by(rows, "eps", "cover", header=h).items():
        print(f"eps={e} mean_cover={m:.3f} se={se:.3f}")
    bad = [r for r in rows if r[h.index("cover")] < r[h.index("packing")]]
    return EXIT_CHECK if bad else EXIT_OK


def cmd_verify(args):
    from .experiments import verify_census

    res = verify_census(golden_dir=args.golden_dir, max_n=args.max_n)
    for r in res:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    if args.out:
        Path(args.out).write_text(json.dumps([r.__dict__ for r in res], indent=1) + "\n",
                                  encoding="utf-8")
    return EXIT_OK if all(r.passed for r in res) else EXIT_CHECK


def cmd_fit(args):
    from .experiments import fit_exponent, read_csv

    rows = read_csv(args.input)
    if args.mean:
        groups = {}
        for r in rows:
            groups.setdefault(float(r[args.x]), []).append(float(r[args.y]))
        data = (list(groups), [float(np.mean(v)) for v in groups.values()])
        f = fit_exponent(data)
    else:
        f = fit_exponent(rows, args.x, args.y)
    print(json.dumps(f.__dict__))
    return EXIT_OK


# parser ----------------------------------------------------------------------------

def _globals(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="master seed")
    p.add_argument("--threads", type=int, default=d, help="worker processes")
    p.add_argument("--config", action="append", default=d,
                   help="key=value file or inline key=value (repeatable)")
    p.add_argument("--out", default=d, help="output path")


def build_parser():
    parser = argparse.ArgumentParser(prog="quadmaps", description=__doc__.splitlines()[0])
    _globals(parser, False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("sample", cmd_sample, "uniform quadrangulation as JSON")
    p.add_argument("--faces", type=int, required=True)
    p.add_argument("--with-tree", action="store_true")

    p = add("phi-reverse", cmd_phi_reverse, "delayed quadrangulation of a labeled map")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--choice", type=int, choices=(0, 1), default=0)

    p = add("star-check", cmd_star_check, "membership of marked vertices in G(r, k)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--vertices", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--r-prime", type=int, default=None)

    p = add("scheme-census", cmd_scheme_census, "count pre-schemes and schemes")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dominant", action="store_true")
    p.add_argument("--planted", action="store_true")

    p = add("metrics", cmd_metrics, "distances between random vertex pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--csv", default=None)

    p = add("dstar", cmd_dstar, "d_e, D° and D* tables of a labeled tree")
    p.add_argument("--tree", required=True)

    for name, fn, help_ in (("scaling", cmd_scaling, "pair distances across n"),
                            ("stars", cmd_stars, "star event frequencies"),
                            ("covering", cmd_covering, "covers of star points")):
        p = add(name, fn, help_)
        p.add_argument("--ns", default=None, help="comma separated sizes")
        p.add_argument("--replicas", type=int, default=None)
        if name != "scaling":
            p.add_argument("--eps", default=None, help="comma separated radii")
            p.add_argument("--beta", type=float, default=None)

    p = add("verify", cmd_verify, "exact census checks")
    p.add_argument("--golden-dir", default=None)
    p.add_argument("--max-n", type=int, default=3)

    p = add("fit", cmd_fit, "log-log slope of a CSV column")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--mean", action="store_true", help="average y per x first")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.fn(args)
    except (QuadmapsError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
