"""Command-line driver: ``hypertest gen|exact|test|estimate|verify|ic|calibrate``.

Exit codes: 0 success, 2 guard violation or bad input, 3 failed
postcondition or verification.
"""

from __future__ import annotations

import argparse
import re
import sys

from . import harness as hz
from .counting import all_types, ic, ic_family
from .errors import GuardError, InputError, PostconditionError, PreconditionError
from .hypergraph import (complete_hypergraph, complete_partite, empty_hypergraph, make_hypergraph,
                         pr_density, random_kgraph, t_inj)
from .regularity import RegularityInstance, check_equitable_partition_of
from .rng import as_fraction
from .testers import (TesterConfig, c_lk, distance_to_property_exact, estimate_distance,
                      has_edges_property, hom_density_property, maxcut_exact, maxcut_property,
                      test_hom_density, test_maxcut, test_regularity_instance)


class VerificationFailed(Exception):
    pass


def named_graph(name, k=2):
    """K<n>, P<n>, C<n>, E<n> (empty), 'edge', or a path to a hypergraph JSON file."""
    m = re.fullmatch(r"([KPCE])(\d+)", name)
    if name == "edge":
        return complete_hypergraph(k, k)
    if m and k == 2:
        kind, n = m.group(1), int(m.group(2))
        if kind == "K":
            return complete_hypergraph(n, 2)
        if kind == "E":
            return empty_hypergraph(n, 2)
        if kind == "P":
            return make_hypergraph(n, 2, [(i, i + 1) for i in range(n - 1)])
        return make_hypergraph(n, 2, [(i, (i + 1) % n) for i in range(n)])
    if m and m.group(1) == "K":
        return complete_hypergraph(int(m.group(2)), k)
    return load_hypergraph(name)


def load_bundle(path):
    obj = hz.load_json(path)
    return obj if "hypergraph" in obj else {"hypergraph": obj}


def load_hypergraph(path):
    return hz.hypergraph_from_dict(load_bundle(path)["hypergraph"])


def _parts_vector(text):
    try:
        return tuple(int(v) for v in str(text).split(","))
    except ValueError as err:
        raise InputError(f"bad part vector {text!r}") from err


def _fraction(text):
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise InputError(f"bad number {text!r}") from err


def _emit(args, obj, csv_rows=None):
    if args.format == "csv":
        text = csv_rows if csv_rows is not None else _kv_csv(obj)
    else:
        text = hz.dumps(obj)
    hz.write_text(args.out, text)


def _kv_csv(obj):
    lines = ["key,value"]
    for key in sorted(obj):
        value = obj[key]
        if isinstance(value, (list, dict)):
            value = hz.json.dumps(value, sort_keys=True).replace(",", ";")
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen(args):
    n, k = args.n, args.k
    if args.kind == "planted":
        spec = hz.PlantedFixtureSpec(n, k, _parts_vector(args.a), grid=args.grid,
                                     epsilon=_fraction(args.epsilon))
        H, fam, d = hz.plant_fixture(spec, args.seed)
        out = {"hypergraph": hz.hypergraph_to_dict(H), "family": hz.family_to_dict(fam),
               "density": hz.density_to_dict(d), "schema": hz.SCHEMA}
    else:
        if args.kind == "random":
            H = random_kgraph(n, k, _fraction(args.p), args.seed)
        elif args.kind == "complete":
            H = complete_hypergraph(n, k)
        else:
            ell = args.ell
            parts = [list(range(n))[i::ell] for i in range(ell)]
            H = complete_partite(parts, k)
        out = {"hypergraph": hz.hypergraph_to_dict(H), "schema": hz.SCHEMA}
    _emit(args, out)


def cmd_exact(args):
    H = load_hypergraph(args.input)
    out = {"property": args.what, "n": H.n, "k": H.k, "schema": hz.SCHEMA}
    if args.what == "maxcut":
        value, witness = maxcut_exact(H, args.ell)
        out.update(value=hz.frac_str(value), ell=args.ell, witness=witness.sorted_parts(),
                   bound=hz.frac_str(c_lk(H.n, args.ell, H.k)))
    elif args.what == "tinj":
        F = named_graph(args.F, H.k)
        out.update(F=args.F, value=hz.frac_str(t_inj(F, H, None)))
    elif args.what == "pr":
        F = named_graph(args.F, H.k)
        out.update(F=args.F, value=hz.frac_str(pr_density([F], H, None)))
    elif args.what == "distance":
        prop = _property(args, H.k)
        out.update(value=hz.frac_str(distance_to_property_exact(H, prop)), target=prop.name)
    _emit(args, out)


def _property(args, k):
    if args.prop == "maxcut":
        return maxcut_property(args.ell, _fraction(args.c))
    if args.prop == "hom":
        return hom_density_property(named_graph(args.F, k), _fraction(args.p), _fraction(args.delta))
    return has_edges_property(1)


def _tester(args, H):
    alpha = _fraction(args.alpha)
    cfg = TesterConfig(q=args.q, nu=_fraction(args.nu))
    if args.what == "maxcut":
        c = _fraction(args.c) if args.c is not None else c_lk(H.n, args.ell, H.k)
        return "maxcut", lambda s: test_maxcut(H, args.ell, c, alpha, cfg, s)
    if args.what == "hom":
        F = named_graph(args.F, H.k)
        p, delta = _fraction(args.p), _fraction(args.delta)
        return "hom", lambda s: test_hom_density(H, F, p, delta, alpha, cfg, s)
    bundle = load_bundle(args.input)
    if "density" not in bundle:
        raise InputError("instance testing needs a bundle with a density function")
    d = hz.density_from_dict(bundle["density"])
    R = RegularityInstance(_fraction(args.epsilon), d.a, d)
    return "regularity-instance", lambda s: test_regularity_instance(H, R, alpha, cfg, s)


def cmd_test(args):
    H = load_hypergraph(args.input)
    name, tester = _tester(args, H)
    decisions = hz.run_trials(tester, args.trials, args.seed)
    report = hz.summarise(name, H.n, args.q, decisions, args.seed)
    _emit(args, report.to_dict(), hz.reports_to_csv([report.to_dict()]))


def cmd_estimate(args):
    H = load_hypergraph(args.input)
    prop = _property(args, H.k)
    cfg = TesterConfig(q=args.q)
    alpha, beta = _fraction(args.alpha), _fraction(args.beta)
    decisions = hz.run_trials(lambda s: estimate_distance(H, prop, alpha, beta, cfg, s),
                              args.trials, args.seed)
    report = hz.summarise(f"estimate:{prop.name}", H.n, args.q, decisions, args.seed)
    _emit(args, report.to_dict(), hz.reports_to_csv([report.to_dict()]))


def cmd_verify(args):
    bundle = load_bundle(args.input)
    H = hz.hypergraph_from_dict(bundle["hypergraph"])
    fam_doc = hz.load_json(args.family) if args.family else bundle.get("family")
    d_doc = hz.load_json(args.density) if args.density else bundle.get("density")
    if fam_doc is None or d_doc is None:
        raise InputError("verify needs a family and a density function")
    fam, d = hz.family_from_dict(fam_doc), hz.density_from_dict(d_doc)
    rep = check_equitable_partition_of(fam, H, _fraction(args.epsilon), d, seed=args.seed)
    out = {"property": "equitable-partition", "n": H.n, "ok": rep.ok, "exact": rep.exact,
           "violations": rep.violations, "epsilon": hz.frac_str(_fraction(args.epsilon)),
           "seed": args.seed, "schema": hz.SCHEMA}
    _emit(args, out)
    if not rep.ok:
        raise VerificationFailed("family is not an equitable partition of the input")


def cmd_ic(args):
    d = hz.density_from_dict(load_bundle(args.input).get("density") or hz.load_json(args.input))
    out = {"property": "ic", "k": d.k, "a": list(d.a), "schema": hz.SCHEMA}
    if args.F.startswith("all"):
        ell = args.ell
        types = all_types(ell, d.k)
        out["values"] = {f"type{i}": hz.frac_str(ic(F, d)) for i, F in enumerate(types)}
        out["total"] = hz.frac_str(ic_family(types, d))
    else:
        out["F"] = args.F
        out["value"] = hz.frac_str(ic(named_graph(args.F, d.k), d))
    _emit(args, out)


def cmd_calibrate(args):
    H = load_hypergraph(args.input)
    grid = [_fraction(v) for v in args.grid.split(",") if v.strip()] if args.grid else []
    alpha = _fraction(args.alpha)
    cfg = TesterConfig(q=args.q)
    if args.what == "maxcut":
        make = lambda c: (lambda s: test_maxcut(H, args.ell, c, alpha, cfg, s))
        param, expect = "c", "decreasing"
    else:
        F = named_graph(args.F, H.k)
        p = _fraction(args.p)
        make = lambda delta: (lambda s: test_hom_density(H, F, p, delta, alpha, cfg, s))
        param, expect = "delta", "increasing"
    cal = hz.calibrate(args.what, param, grid, make, H.n, args.q, args.trials, args.seed, expect)
    if args.format == "json":
        rows = []
        for row in cal.rows:
            dct = row.report.to_dict()
            dct[param] = hz.frac_str(row.value)
            rows.append(dct)
        hz.write_text(args.out, hz.dumps({"rows": rows, "flags": cal.flags, "schema": hz.SCHEMA}))
    else:
        hz.write_text(args.out, cal.to_csv())


# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--q", type=int, default=10)
    common.add_argument("--alpha", default="1/5")
    common.add_argument("--beta", default="1/10")
    common.add_argument("--out", default="-")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--ell", type=int, default=2)
    common.add_argument("--c", default=None)
    common.add_argument("--F", default="K3")
    common.add_argument("--p", default="1/2")
    common.add_argument("--delta", default="1/20")
    common.add_argument("--epsilon", default="1/5")
    common.add_argument("--nu", default="1/10")

    parser = argparse.ArgumentParser(prog="hypertest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a fixture")
    g.add_argument("kind", choices=["planted", "random", "complete", "partite"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--a", default="2")
    g.add_argument("--grid", type=int, default=8)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("exact", parents=[common], help="exact oracles")
    e.add_argument("what", choices=["maxcut", "tinj", "pr", "distance"])
    e.add_argument("--prop", choices=["maxcut", "hom", "edges"], default="maxcut")
    e.set_defaults(func=cmd_exact)

    t = sub.add_parser("test", parents=[common], help="run a sampling tester")
    t.add_argument("what", choices=["maxcut", "hom", "instance"])
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("estimate", parents=[common], help="distance estimation")
    s.add_argument("--prop", choices=["maxcut", "hom", "edges"], default="maxcut")
    s.set_defaults(func=cmd_estimate)

    v = sub.add_parser("verify", parents=[common], help="check an equitable partition")
    v.add_argument("--family")
    v.add_argument("--density")
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("ic", parents=[common], help="evaluate induced-copy densities")
    i.set_defaults(func=cmd_ic)

    c = sub.add_parser("calibrate", parents=[common], help="acceptance curve over a grid")
    c.add_argument("what", choices=["maxcut", "hom"])
    c.add_argument("--grid", default="")
    c.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "calibrate" else "json"
    needs_input = args.command not in ("gen",)
    try:
        if needs_input and not args.input:
            raise InputError("--input is required")
        if args.trials < 1:
            raise InputError("--trials must be at least 1")
        args.func(args)
    except (GuardError, InputError, PreconditionError) as err:
        print(f"hypertest: {err}", file=sys.stderr)
        return 2
    except (PostconditionError, VerificationFailed) as err:
        print(f"hypertest: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
