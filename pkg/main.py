#!/usr/bin/env python3
"""
DP Channel Lab
Main entry point: analyze, bound, build, compare, individual and curve commands

Every --eps flag is on the natural-log scale (--eps 0.693147 means e^eps = 2).
Leakage and leakage bounds are reported in bits.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from engine.channel import (load_matrix, matrix_to_csv_text, min_entropy_leakage,
                            pad_zero_columns, prior_from_spec, uniform_prior, write_matrix_csv)
from engine.errors import (ChannelLabError, GraphSpecError, HypothesisViolated, InvalidChannel,
                           InvalidParameter, MatrixFormatError, QuerySpecError, AlphabetMismatch)
from engine.graphs import GraphKind, build_graph, hamming_graph, line_graph, relabel
from engine.queries import build_universe, induced_adjacency, query_from_spec, utility_binary
from engine.settings import DEFAULT_SETTINGS, AnalysisSettings, load_preset
from mechanisms.factory import build_geometric, build_optimal_utility, build_tight_leakage
from analysis.privacy import (bound_individual, bound_range_restricted, bound_whole_database,
                              curve_bound, individual_channel, individual_leakage_check,
                              min_epsilon, utility_bound, verify_dp)
from analysis.report import AnalysisReport

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2

USAGE_ERRORS = (GraphSpecError, QuerySpecError, MatrixFormatError, InvalidParameter)
BOUND_TOL = 1e-6

# preset key -> argparse dest
PRESET_KEYS = {"lambda": "lam", "fixtures": "matrix"}
REPO_ROOT = Path(__file__).parent


class UsageError(Exception):
    """Missing or conflicting command-line options"""
    pass


def warn(text):
    print(f"⚠ {text}", file=sys.stderr)


def apply_preset(args):
    """Fill options left unset on the command line from a named preset"""
    if not getattr(args, "preset", None):
        return
    try:
        preset = load_preset(args.preset)
    except KeyError as e:
        raise UsageError(e.args[0]) from None
    for key, value in preset.items():
        dest = PRESET_KEYS.get(key, key)
        if key == "fixtures":
            value = [str(REPO_ROOT / path) for path in value]
        current = getattr(args, dest, None)
        if hasattr(args, dest) and (current is None or current is False):
            setattr(args, dest, value)


def need(args, *names):
    missing = [name for name in names if getattr(args, name, None) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def emit(report, args):
    """Print the report; failed checks make the run exit with EXIT_INVALID"""
    sys.stdout.write(report.render_json() if args.json else report.render_text())
    return finish(report)


def finish(report):
    for text in report.notes:
        warn(text)
    if report.all_passed:
        return EXIT_OK
    for name in report.failed_checks():
        print(f"✗ check failed: {name}", file=sys.stderr)
    return EXIT_INVALID


def graph_for(args, m=None, settings=DEFAULT_SETTINGS):
    """Graph from --graph or the adjacency induced by --query, aligned to m's rows"""
    if getattr(args, "query", None):
        g = induced_adjacency(query_from_spec(args.query), settings.universe_max)
    elif getattr(args, "graph", None):
        g = build_graph(args.graph)
    else:
        raise UsageError("give --graph or --query")
    if m is not None and g.nodes != m.input:
        if g.n != m.input.size:
            raise AlphabetMismatch(f"graph has {g.n} nodes, matrix has {m.input.size} rows")
        g = relabel(g, m.input)
    return g


# --- commands ---

def cmd_analyze(args):
    apply_preset(args)
    settings = AnalysisSettings.from_config()
    m = load_matrix(args.matrix, settings.stochastic_tol)
    g = graph_for(args, m, settings)
    p = prior_from_spec(args.prior or "uniform", m.input)

    report = AnalysisReport(f"Analysis of {args.matrix}", settings.report_digits)
    report.add("rows", m.input.size)
    report.add("columns", m.output.size)
    report.add("graph", repr(g))

    eps_star, witness = min_epsilon(m, g)
    report.add("min_epsilon", eps_star, "nats")
    if witness is not None:
        x, x2, z = witness
        report.add("witness", f"{m.input.labels[x]} ~ {m.input.labels[x2]} at {m.output.labels[z]}")
    if args.eps is not None:
        verdict = verify_dp(m, g, args.eps)
        report.add_check(f"{args.eps:g}-DP", verdict.satisfies)

    figures = min_entropy_leakage(p, m)
    report.add("h_inf_prior", figures.h_inf_prior, "bits")
    report.add("h_inf_posterior", figures.h_inf_posterior, "bits")
    report.add("leakage", figures.leakage, "bits")
    report.add("capacity", figures.capacity, "bits")

    utility = utility_binary(p, m)
    report.add("utility", utility.utility)
    report.add("remap", [m.input.labels[i] for i in utility.remap])
    report.add_check("-log2 utility = posterior min-entropy", utility.duality_ok)

    if g.kind == GraphKind.HAMMING:
        u, v = g.params
        whole = bound_whole_database(u, v, eps_star).bound_bits
        report.add("bound_whole_database", whole, "bits")
        report.add_check("capacity <= whole-database bound", figures.capacity <= whole + BOUND_TOL)

        r = len(m.nonzero_columns())
        if r < v ** u:
            ranged = bound_range_restricted(u, v, eps_star, r).bound_bits
            report.add("range_size", r)
            report.add("bound_range_restricted", ranged, "bits")
            report.add_check("capacity <= range-restricted bound", figures.capacity <= ranged + BOUND_TOL)

        if m.input.size <= settings.enumeration_max_entries:
            universe = build_universe(u, v)
            worst = max(individual_leakage_check(m, universe, target, eps_star)['leakage_bits'].max()
                        for target in range(u))
            single = bound_individual(eps_star).bound_bits
            report.add("individual_leakage_max", float(worst), "bits")
            report.add("bound_individual", single, "bits")
            report.add_check("individual leakage <= individual bound", worst <= single + BOUND_TOL)

    if g.kind in (GraphKind.RING, GraphKind.CLIQUE) and g.is_connected():
        uniform_utility = utility_binary(uniform_prior(m.input), m).utility
        best = utility_bound(g, eps_star)
        report.add("utility_uniform", uniform_utility)
        report.add("utility_bound", best)
        report.add_check("uniform utility <= utility bound", uniform_utility <= best + BOUND_TOL)

    if args.export:
        path = report.export(args.export)
        print(f"Exported {len(report.get_dataframe())} figures to {path}", file=sys.stderr)
    return emit(report, args)


def cmd_bound(args):
    apply_preset(args)
    need(args, "u", "v", "eps")
    settings = AnalysisSettings.from_config()
    report = AnalysisReport(f"Leakage bounds for u={args.u}, v={args.v}, eps={args.eps:g}",
                            settings.report_digits)
    report.add("e^eps", float(np.exp(args.eps)))
    report.add("B", bound_whole_database(args.u, args.v, args.eps).bound_bits, "bits")
    if args.r is not None:
        ranged = bound_range_restricted(args.u, args.v, args.eps, args.r)
        report.add("l", ranged.params["l"])
        report.add("B_range", ranged.bound_bits, "bits")
    report.add("B_individual", bound_individual(args.eps).bound_bits, "bits")
    return emit(report, args)


def _write_built(m, args, report):
    if args.pad_columns is not None:
        m = pad_zero_columns(m, args.pad_columns)
    if args.output:
        write_matrix_csv(m, args.output)
        report.add("output", str(args.output))
        return emit(report, args)
    sys.stdout.write(matrix_to_csv_text(m))
    return finish(report)


def cmd_build(args):
    apply_preset(args)
    settings = AnalysisSettings.from_config()
    report = AnalysisReport(f"Built {args.kind} mechanism", settings.report_digits)

    if args.kind == "tight":
        need(args, "u", "v", "eps")
        m = build_tight_leakage(args.u, args.v, args.eps)
        g = hamming_graph(args.u, args.v)
        report.add("alpha", float(m.entries[0, 0]))
        report.add("leakage_uniform", min_entropy_leakage(uniform_prior(m.input), m).leakage, "bits")
        report.add("bound_whole_database", bound_whole_database(args.u, args.v, args.eps).bound_bits, "bits")
        eps = args.eps

    elif args.kind == "optimal":
        need(args, "eps")
        g = graph_for(args, settings=settings)
        supergraph = build_graph(args.supergraph) if args.supergraph else None
        perm = [int(x) for x in args.automorphism.split(",")] if args.automorphism else None
        m, params = build_optimal_utility(g, args.eps, augment=bool(args.augment),
                                          automorphism=perm, supergraph=supergraph)
        report.add("graph", repr(params.graph))
        report.add("alpha", params.alpha)
        report.add("n", params.n)
        if params.c is not None:
            report.add("c", params.c)
        report.add("antipodal_doubling", params.remark1_applied)
        report.add("utility_uniform", utility_binary(uniform_prior(m.input), m).utility)
        if not params.guaranteed_optimal:
            report.note("artificial adjacencies were added: the mechanism is eps-DP but not guaranteed optimal")
        eps = args.eps

    else:
        need(args, "n", "lam")
        m = build_geometric(args.n, args.lam)
        g = line_graph(args.n + 1)
        eps = float(np.log(1.0 / args.lam))
        report.add("lambda", args.lam)
        report.add("utility_uniform", utility_binary(uniform_prior(m.input), m).utility)

    if g.nodes != m.input:
        g = relabel(g, m.input)
    eps_star, _ = min_epsilon(m, g)
    report.add("min_epsilon", eps_star, "nats")
    report.add_check(f"{eps:g}-DP", eps_star <= eps + 1e-9)
    return _write_built(m, args, report)


def cmd_compare(args):
    apply_preset(args)
    need(args, "matrix")
    settings = AnalysisSettings.from_config()
    report = AnalysisReport("Comparison", settings.report_digits)
    names = [Path(path).name for path in args.matrix]
    for index, path in enumerate(args.matrix):
        name = names[index] if names.count(names[index]) == 1 else f"{index}:{names[index]}"
        m = load_matrix(path, settings.stochastic_tol)
        p = prior_from_spec(args.prior or "uniform", m.input)
        report.add(f"{name}.utility", utility_binary(p, m).utility)
        report.add(f"{name}.leakage", min_entropy_leakage(p, m).leakage, "bits")
        report.add(f"{name}.capacity", min_entropy_leakage(p, m).capacity, "bits")
        if args.graph:
            report.add(f"{name}.min_epsilon", min_epsilon(m, graph_for(args, m, settings))[0], "nats")
    return emit(report, args)


def cmd_individual(args):
    need(args, "u", "v", "target")
    settings = AnalysisSettings.from_config()
    m = load_matrix(args.matrix, settings.stochastic_tol)
    universe = build_universe(args.u, args.v)
    g = relabel(universe.graph(), m.input) if m.input.size == universe.size else universe.graph()
    eps_star, _ = min_epsilon(m, g)
    bound = bound_individual(eps_star).bound_bits

    report = AnalysisReport(f"Individual {args.target} in {args.matrix}", settings.report_digits)
    report.add("min_epsilon", eps_star, "nats")
    report.add("bound_individual", bound, "bits")
    if args.all:
        table = individual_leakage_check(m, universe, args.target, eps_star)
        report.add("channels", len(table))
        report.add("leakage_max", float(table['leakage_bits'].max()), "bits")
        report.add_check("every individual channel within bound", bool(table['within_bound'].all()))
    else:
        if args.rest is None:
            raise UsageError("give --rest VALUES or --all")
        rest = [x for x in args.rest.split(",") if x != ""]
        channel = individual_channel(m, universe, args.target, rest)
        leakage = min_entropy_leakage(uniform_prior(channel.input), channel).leakage
        report.add("rows", list(channel.input.labels))
        report.add("leakage", leakage, "bits")
        report.add_check("leakage <= individual bound", leakage <= bound + BOUND_TOL)
    return emit(report, args)


def cmd_curve(args):
    apply_preset(args)
    need(args, "u", "v_list", "eps_max")
    eps_min = args.eps_min if args.eps_min is not None else 0.0
    points = args.points if args.points is not None else 100
    grid = np.linspace(eps_min, args.eps_max, points)
    df = curve_bound(args.u, args.v_list, grid)
    if args.json:
        text = json.dumps({"u": args.u, "points": df.to_dict(orient="records")}, indent=2) + "\n"
    else:
        text = df.to_csv(index=False, float_format="%.10g")
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- argument parsing ---

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(
        prog="main.py",
        description="Differential-privacy mechanisms as channels: leakage, utility, bounds "
                    "and optimal mechanisms. --eps is in nats (e^eps is the DP factor).")
    sub = p.add_subparsers(dest="cmd", required=True)

    an = sub.add_parser("analyze", parents=[common], help="leakage, DP and utility of a matrix")
    an.add_argument("--matrix", required=True)
    an.add_argument("--graph", help="hamming:U:V | ring:N | clique:N | line:N | file:PATH")
    an.add_argument("--query", help="count:U:V:T | argmax:U:CITIES:CANDS:C (induced adjacency)")
    an.add_argument("--prior", help="uniform | file:PATH | p=0.1,0.2,...")
    an.add_argument("--eps", type=float, help="check eps-DP at this eps (nats)")
    an.add_argument("--preset")
    an.add_argument("--export", help="also write the figures to this CSV")
    an.set_defaults(handler=cmd_analyze)

    bd = sub.add_parser("bound", parents=[common], help="leakage bounds from u, v, eps (and r)")
    bd.add_argument("--u", type=int)
    bd.add_argument("--v", type=int)
    bd.add_argument("--eps", type=float)
    bd.add_argument("--r", type=int, help="range size for the range-restricted bound")
    bd.add_argument("--preset")
    bd.set_defaults(handler=cmd_bound)

    build_common = argparse.ArgumentParser(add_help=False, parents=[common])
    build_common.add_argument("-o", "--output", help="CSV path (default: CSV to stdout)")
    build_common.add_argument("--pad-columns", type=int, help="append zero columns up to this count")
    build_common.add_argument("--preset")

    bu = sub.add_parser("build", help="construct a mechanism matrix")
    kinds = bu.add_subparsers(dest="kind", required=True)
    tight = kinds.add_parser("tight", parents=[build_common], help="tight-leakage matrix over Val^u")
    tight.add_argument("--u", type=int)
    tight.add_argument("--v", type=int)
    tight.add_argument("--eps", type=float)
    opt = kinds.add_parser("optimal", parents=[build_common], help="optimal-utility mechanism on a graph")
    opt.add_argument("--graph")
    opt.add_argument("--query")
    opt.add_argument("--eps", type=float)
    opt.add_argument("--augment", action="store_true", help="add artificial adjacencies if needed")
    opt.add_argument("--supergraph", help="explicit augmented graph spec")
    opt.add_argument("--automorphism", help="single-orbit permutation, e.g. 1,2,3,0")
    geo = kinds.add_parser("geometric", parents=[build_common], help="truncated geometric mechanism")
    geo.add_argument("--n", type=int, help="largest answer")
    geo.add_argument("--lambda", dest="lam", type=float)
    for leaf in (tight, opt, geo):
        leaf.set_defaults(handler=cmd_build)

    cp = sub.add_parser("compare", parents=[common], help="utilities and leakages under one prior")
    cp.add_argument("--matrix", action="append", help="repeatable; defaults to the preset fixtures")
    cp.add_argument("--prior")
    cp.add_argument("--graph")
    cp.add_argument("--query")
    cp.add_argument("--preset")
    cp.set_defaults(handler=cmd_compare)

    ind = sub.add_parser("individual", parents=[common], help="leakage about one individual")
    ind.add_argument("--matrix", required=True)
    ind.add_argument("--u", type=int)
    ind.add_argument("--v", type=int)
    ind.add_argument("--target", type=int)
    ind.add_argument("--rest", help="values of the other individuals, comma separated")
    ind.add_argument("--all", action="store_true", help="every assignment of the others")
    ind.set_defaults(handler=cmd_individual)

    cv = sub.add_parser("curve", parents=[common], help="whole-database bound over an eps grid")
    cv.add_argument("--u", type=int)
    cv.add_argument("--v", dest="v_list", type=int, nargs="+")
    cv.add_argument("--eps-min", type=float)
    cv.add_argument("--eps-max", type=float)
    cv.add_argument("--points", type=int)
    cv.add_argument("-o", "--output")
    cv.add_argument("--preset")
    cv.set_defaults(handler=cmd_curve)
    return p


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        return args.handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidChannel as e:
        print(f"✗ {e}", file=sys.stderr)
        for violation in e.violations:
            print(f"  - {violation.describe()}", file=sys.stderr)
        return EXIT_INVALID
    except HypothesisViolated as e:
        print(f"✗ {e}", file=sys.stderr)
        print(f"  reason: {json.dumps(e.reason, default=str)}", file=sys.stderr)
        return EXIT_INVALID
    except ChannelLabError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
