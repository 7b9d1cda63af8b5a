"""Command-line entry point: ``ekrperm <subcommand> ...``.

Exit status: 0 on success or PASS, 1 when a checked claim fails, 2 on
usage or input errors.  Caps and the solver timeout may also be set
through the environment (EKRPERM_TIMEOUT, EKRPERM_VERTEX_CAP,
EKRPERM_ENUM_CAP, EKRPERM_OPTIMA_CAP); an explicit flag always wins.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import __version__
from .core import (Family, GenPerm, Instance, enumerate_members, rank, star, star_bound,
                   transpose_family)
from .cycle import (CyclicOrdering, PermutationPair, count_meeting_orderings,
                    estimate_meeting_orderings, first_bad_window, is_r_good, katona_verify,
                    lemma_count, materialize, random_cycle, search_good_ordering,
                    tau_table_csv, tau_table_rows, tau_table_text, enumerate_t)
from .errors import EKRError
from .harness import DEFAULT_SEED, SUITE_IDS, SuiteSpec, default_grid, run_all
from .solver import build_graph, double_count_check, solve


class UsageError(Exception):
    pass


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _parse_pairs(text: str) -> GenPerm:
    """``"1,1;2,3"`` -> {(1,1),(2,3)}."""
    try:
        return GenPerm.of(tuple(int(c) for c in chunk.split(",")) for chunk in text.split(";") if chunk)
    except ValueError as e:
        raise UsageError(f"cannot parse member {text!r}: {e}") from None


def _parse_perm(text: str | None):
    return None if text is None else tuple(int(v) for v in text.split(","))


def _instance(args) -> Instance:
    return Instance(args.k, args.r, args.n)


def _members_doc(g: GenPerm) -> list:
    return [list(p) for p in g.pairs]


# -- subcommands -------------------------------------------------------------

def cmd_enumerate(args):
    inst = _instance(args)
    members = list(enumerate_members(inst))
    if args.format == "json":
        return _dump_json(Family.full(inst).to_dict()), 0
    if args.format == "csv":
        header = ["rank"] + [f"{c}{i}" for i in range(1, inst.r + 1) for c in "xy"]
        rows = [[i] + [c for p in g.pairs for c in p] for i, g in enumerate(members)]
        return _csv([header] + rows), 0
    return "".join(f"{i}\t{g}\n" for i, g in enumerate(members)), 0


def cmd_tau_table(args):
    pp = None
    if args.phi or args.psi:
        pp = PermutationPair(_parse_perm(args.phi) or tuple(range(1, args.k + 1)),
                             _parse_perm(args.psi) or tuple(range(1, args.n + 1)))
    if args.export_ordering:
        o = materialize(pp or PermutationPair.identity(args.k, args.n))
        with open(args.export_ordering, "w") as fh:
            fh.write(o.to_json() + "\n")
    if args.format == "json":
        doc = {"k": args.k, "n": args.n, "rows": tau_table_rows(args.k, args.n, pp),
               "layout": "row 0 is y = n, column j is x = j + 1"}
        if pp is not None:
            doc["relabelling"] = pp.to_dict()
        return _dump_json(doc), 0
    if args.format == "csv":
        return tau_table_csv(args.k, args.n, pp), 0
    return tau_table_text(args.k, args.n, pp), 0


def cmd_check_good(args):
    if args.ordering:
        with open(args.ordering) as fh:
            orderings = [("file", CyclicOrdering.from_json(fh.read()))]
        k = orderings[0][1].k
    else:
        if args.k is None or args.n is None:
            raise UsageError("check-good needs --k and --n, or --ordering")
        k = args.k
        if args.samples:
            rng = np.random.default_rng(args.seed)
            pps = (PermutationPair.random(args.k, args.n, rng) for _ in range(args.samples))
        else:
            pps = enumerate_t(args.k, args.n)
        orderings = ((pp, materialize(pp)) for pp in pps)
    rs = [args.r] if args.r else list(range(1, k))
    checked = 0
    violation = None
    for src, o in orderings:
        checked += 1
        for r in rs:
            if not is_r_good(o, r):
                violation = {"r": r, "window": first_bad_window(o, r),
                             "ordering": src if src == "file" else src.to_dict()}
                break
        if violation:
            break
    doc = {"orderingsChecked": checked, "rValues": rs, "good": violation is None,
           "violation": violation, "mode": "sampled" if args.samples else "exact"}
    if args.samples:
        doc["seed"] = args.seed
    code = 0 if violation is None else 1
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["orderings", "r_values", "good"],
                     [checked, " ".join(map(str, rs)), violation is None]]), code
    text = f"checked {checked} orderings for r in {rs}: " + \
        ("all good\n" if violation is None else f"NOT good: {violation}\n")
    return text, code


def cmd_lemma_count(args):
    inst = _instance(args)
    members = [_parse_pairs(args.member)] if args.member else list(enumerate_members(inst))
    want = lemma_count(inst)
    rows = []
    code = 0
    rng = np.random.default_rng(args.seed)
    for g in members:
        g.check(inst)
        if args.samples:
            got = estimate_meeting_orderings(g, inst.k, inst.n, args.samples, rng)
        else:
            got = count_meeting_orderings(g, inst.k, inst.n)
            if got != want:
                code = 1
        rows.append({"rank": rank(g, inst), "member": _members_doc(g), "count": got})
    doc = {"instance": {"k": inst.k, "r": inst.r, "n": inst.n}, "expected": want,
           "approximate": bool(args.samples), "counts": rows}
    if args.samples:
        doc["samples"], doc["seed"] = args.samples, args.seed
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["rank", "member", "count", "expected"]] +
                    [[r["rank"], str(GenPerm.of(r["member"])), r["count"], want] for r in rows]), code
    tag = "~" if args.samples else ""
    lines = [f"{GenPerm.of(r['member'])}: {tag}{r['count']} (expected {want})" for r in rows]
    return "\n".join(lines) + "\n", code


def cmd_katona(args):
    if args.ordering:
        with open(args.ordering) as fh:
            cycles = [CyclicOrdering.from_json(fh.read())]
    elif args.m is None:
        raise UsageError("katona needs --m or --ordering")
    elif args.samples:
        rng = np.random.default_rng(args.seed)
        cycles = [random_cycle(args.m, rng) for _ in range(args.samples)]
    else:
        cycles = [args.m]
    reports = [katona_verify(c, args.r) for c in cycles]
    ok = all(rep.holds for rep in reports)
    first = reports[0]
    doc = {"m": first.m, "r": args.r, "trials": len(reports), "holds": ok,
           "maxSizes": sorted({rep.max_size for rep in reports}),
           "allOptimaAreStars": all(rep.all_optima_are_stars for rep in reports),
           "starUniquenessAsserted": first.star_uniqueness_asserted,
           "nonStarWitness": next((rep.non_star_witness for rep in reports if rep.non_star_witness), None)}
    if args.samples:
        doc["seed"] = args.seed
    code = 0 if ok else 1
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["m", "r", "trials", "max_sizes", "all_stars", "holds"],
                     [doc["m"], args.r, len(reports), " ".join(map(str, doc["maxSizes"])),
                      doc["allOptimaAreStars"], ok]]), code
    return (f"m={doc['m']} r={args.r} trials={len(reports)}: max sizes {doc['maxSizes']}, "
            f"all optima stars: {doc['allOptimaAreStars']}, holds: {ok}\n"), code


def cmd_solve(args):
    inst = _instance(args)
    rep = solve(inst, enumerate_all=args.enumerate_optima, seed_with_bound=args.seed_bound,
                timeout=args.timeout, cap=args.optima_cap)
    if args.export_dimacs:
        with open(args.export_dimacs, "w") as fh:
            build_graph(rep.instance).write_dimacs(fh)
    doc = rep.to_dict(timings=args.timings, include_optima=args.enumerate_optima)
    code = 0
    if rep.exact and rep.max_size != star_bound(rep.instance):
        code = 1
    if rep.all_optima_are_stars is False:
        code = 1
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["k", "r", "n", "max_size", "star_bound", "exact", "optima", "all_stars"],
                     [rep.instance.k, rep.instance.r, rep.instance.n, rep.max_size,
                      rep.star_bound, rep.exact, rep.optima_count, rep.all_optima_are_stars]]), code
    lines = []
    if rep.transposed_from is not None:
        lines.append(f"k > n: solved the transposed instance P{rep.instance} instead of P{rep.transposed_from}")
    lines.append(f"P{rep.instance}: maximum intersecting family size {rep.max_size} "
                 f"({'exact' if rep.exact else 'NOT exact: timeout'}), star bound {rep.star_bound}")
    if args.enumerate_optima:
        lines.append(f"optima: {rep.optima_count}, all stars: {rep.all_optima_are_stars}")
    lines.append(f"witness: {', '.join(str(g) for g in rep.witness)}")
    return "\n".join(lines) + "\n", code


def cmd_verify(args):
    specs = default_grid(args.seed)
    if args.suite:
        specs = [s for s in specs if s.suite_id in args.suite]
    if args.timeout is not None:
        specs = [SuiteSpec(s.suite_id, s.grid, s.samples, s.seed, args.timeout, s.cap) for s in specs]
    report = run_all(specs, workers=args.threads)
    code = 0 if report.ok else 1
    if args.format == "json":
        return report.to_json(timings=args.timings), code
    if args.format == "csv":
        return report.to_csv(), code
    return report.to_text(), code


def _load_family(path: str) -> Family:
    with open(path) as fh:
        return Family.loads(fh.read())


def cmd_certificate(args):
    if args.family:
        fam = _load_family(args.family)
    elif args.star:
        if None in (args.k, args.r, args.n):
            raise UsageError("--star needs --k, --r and --n")
        centre = tuple(int(v) for v in args.star.split(","))
        fam = star(_instance(args), centre)
    else:
        raise UsageError("certificate needs --family or --star")
    cert = double_count_check(fam, samples=args.samples, seed=args.seed)
    doc = cert.to_dict()
    code = 0 if cert.holds else 1
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["ordering_index", "members_meeting"]] +
                    [[i, c] for i, c in enumerate(cert.per_ordering_counts)]), code
    return (f"{cert.orderings} orderings ({'exact' if cert.exact else 'sampled'}): "
            f"max per-ordering count {cert.max_count} (r = {cert.instance.r}), "
            f"total incidence {cert.total_incidence}"
            + (f" = {cert.expected_total} expected" if cert.exact else "")
            + f", implied bound {cert.implied_bound}, holds: {cert.holds}\n"), code


def cmd_transpose(args):
    if args.family:
        fam = _load_family(args.family)
    elif args.member:
        if None in (args.k, args.r, args.n):
            raise UsageError("--member needs --k, --r and --n")
        fam = Family.from_members(_instance(args), [_parse_pairs(args.member)])
    else:
        raise UsageError("transpose needs --family or --member")
    out = transpose_family(fam)
    if args.format == "json":
        return _dump_json(out.to_dict(as_ranks=args.ranks)), 0
    if args.format == "csv":
        return _csv([["rank", "member"]] + [[rank(g, out.instance), str(g)] for g in out]), 0
    return f"P{out.instance}\n" + "".join(f"{g}\n" for g in out), 0


def cmd_no_good_ordering(args):
    found, checked = search_good_ordering(args.n)
    doc = {"n": args.n, "orderingsChecked": checked, "noGoodOrdering": found is None,
           "found": [list(p) for p in found] if found else None}
    code = 0 if found is None else 1
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        return _csv([["n", "orderings_checked", "no_good_ordering"], [args.n, checked, found is None]]), code
    return (f"n={args.n}: checked {checked} orderings (rotation fixed); "
            + ("no n-good ordering exists\n" if found is None else f"found {found}\n")), code


# -- parser ----------------------------------------------------------------

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="text",
                        help="output format (default: text)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"seed for any sampling (default: {DEFAULT_SEED})")
    common.add_argument("--timeout", type=float, default=None,
                        help="solver timeout in seconds (overrides EKRPERM_TIMEOUT)")
    common.add_argument("--threads", type=_positive, default=1,
                        help="worker processes; 1 is the deterministic mode (default)")
    common.add_argument("--out", default=None, help="write the result here instead of stdout")

    def kn(p, required=True):
        p.add_argument("--k", type=_positive, required=required, help="size of the first coordinate set")
        p.add_argument("--n", type=_positive, required=required, help="size of the second coordinate set")

    def krn(p, required=True):
        kn(p, required)
        p.add_argument("--r", type=_positive, required=required, help="number of pairs per member")

    parser = argparse.ArgumentParser(prog="ekrperm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ekrperm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="list P(k,r,n) in rank order")
    krn(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("tau-table", parents=[common], help="print the label grid of the cyclic ordering")
    kn(p)
    p.add_argument("--phi", help="relabelling of [k], comma separated (default identity)")
    p.add_argument("--psi", help="relabelling of [n], comma separated (default identity)")
    p.add_argument("--export-ordering", metavar="PATH", help="also write the ordering as JSON [x, y] list")
    p.set_defaults(func=cmd_tau_table)

    p = sub.add_parser("check-good", parents=[common], help="check r-goodness of orderings")
    kn(p, required=False)
    p.add_argument("--r", type=_positive, help="window length (default: every r in 1..k-1)")
    p.add_argument("--ordering", metavar="PATH", help="check an ordering from a JSON [x, y] list")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="every ordering of T(k,n) (default)")
    g.add_argument("--samples", type=_positive, help="this many seeded random orderings")
    p.set_defaults(func=cmd_check_good)

    p = sub.add_parser("lemma-count", parents=[common], help="count orderings of T(k,n) each member meets")
    krn(p)
    p.add_argument("--member", help='one member, e.g. "1,1;2,2" (default: all members)')
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="exhaustive count over T(k,n) (default)")
    g.add_argument("--samples", type=_positive, help="estimate from this many random orderings")
    p.set_defaults(func=cmd_lemma_count)

    p = sub.add_parser("katona", parents=[common], help="brute-force the cycle lemma on r-windows")
    p.add_argument("--m", type=_positive, help="cycle length")
    p.add_argument("--r", type=_positive, required=True, help="window length")
    p.add_argument("--ordering", metavar="PATH", help="use a [k]x[n] ordering from a JSON file as the cycle")
    p.add_argument("--samples", type=_positive, help="random cyclic orderings to try (default: identity)")
    p.set_defaults(func=cmd_katona)

    p = sub.add_parser("solve", parents=[common], help="exact maximum intersecting family")
    krn(p)
    p.add_argument("--enumerate-optima", action="store_true", help="list every optimum and classify it")
    p.add_argument("--seed-bound", action="store_true",
                   help="start the search at the star bound and only look for improvements")
    p.add_argument("--optima-cap", type=_positive, default=None,
                   help="stop after this many optima (overrides EKRPERM_OPTIMA_CAP)")
    p.add_argument("--export-dimacs", metavar="PATH", help="write the intersection graph in DIMACS format")
    p.add_argument("--timings", action="store_true", help="include elapsed time (breaks byte-identity)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="run the conformance suites")
    p.add_argument("--suite", action="append", choices=SUITE_IDS, help="run only this suite (repeatable)")
    p.add_argument("--timings", action="store_true", help="include wall-clock times (breaks byte-identity)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("certificate", parents=[common], help="double-counting certificate for a family")
    krn(p, required=False)
    p.add_argument("--family", metavar="PATH", help="family document (JSON)")
    p.add_argument("--star", metavar="X,Y", help="use the star with this centre")
    p.add_argument("--samples", type=_positive, help="sample orderings instead of enumerating T")
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("transpose", parents=[common], help="swap coordinates of a family")
    krn(p, required=False)
    p.add_argument("--family", metavar="PATH", help="family document (JSON)")
    p.add_argument("--member", help='a single member, e.g. "1,3;2,1"')
    p.add_argument("--ranks", action="store_true", help="emit memberRanks instead of members")
    p.set_defaults(func=cmd_transpose)

    p = sub.add_parser("no-good-ordering", parents=[common],
                       help="search every cyclic ordering of [n]x[n] for an n-good one")
    p.add_argument("--n", type=_positive, required=True)
    p.set_defaults(func=cmd_no_good_ordering)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        text, code = args.func(args)
    except UsageError as e:
        print(f"ekrperm {args.command}: {e}", file=sys.stderr)
        return 2
    except (EKRError, ValueError, OSError) as e:
        print(f"ekrperm {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "timings", False):
        print(f"elapsed {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
