"""Command-line front end.

Subcommands: gen, virtuals, bilateral, run, benchmark, opt-lp, transform,
audit, suite.  Human-readable tables go to stdout; --json switches to JSON,
--out writes to a file.  Exit code 0 iff every requested check passed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .audit import audit_mechanism
from .benchmarks import (
    build_second_best_lp,
    duality_benchmark,
    first_best,
    solve_second_best_lp,
)
from .bilateral import bom_price, gft_bom, gft_som, som_price
from .errors import GftLabError, LpTooLarge
from .experiments import DEFAULT_ALPHAS, GenSpec, SuiteConfig, gen_instance, run_suite
from .market import instance_to_dict, load_instance
from .mechanisms import (
    GBOM,
    GSOM,
    build_mechanism,
    exante_surplus,
    gft_exact,
    table_from_dict,
    table_to_dict,
    virtual_gft,
)
from .transforms import wbb_to_sbb_pipeline
from .virtual import buyer_virtual_values, seller_virtual_values

INFINITY_MARK = "∞"


def _emit(payload, args) -> None:
    text = json.dumps(payload, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load(args):
    if not getattr(args, "instance", None):
        raise SystemExit("this command needs --instance FILE")
    return load_instance(args.instance)


def _fmt(v) -> str:
    if v is None:
        return INFINITY_MARK
    return f"{v:.6g}"


def cmd_gen(args) -> int:
    instance = gen_instance(args.seed, args.n, args.m, args.max_support, args.family)
    _emit(instance_to_dict(instance), args)
    return 0


def cmd_virtuals(args) -> int:
    instance = _load(args)
    tables = [("buyer", i, buyer_virtual_values(d)) for i, d in enumerate(instance.buyers)]
    tables += [("seller", j, seller_virtual_values(d)) for j, d in enumerate(instance.sellers)]
    if args.json or args.out:
        payload = [
            {
                "side": side,
                "agent": idx,
                "support": list(t.support),
                "raw": list(t.raw),
                "ironed": list(t.ironed),
                "ironed_intervals": [list(iv) for iv in t.ironed_intervals],
            }
            for side, idx, t in tables
        ]
        _emit(payload, args)
        return 0
    for side, idx, t in tables:
        print(f"{side} {idx}  (ironed intervals: {list(t.ironed_intervals) or 'none'})")
        print(f"  {'type':>10} {'raw':>12} {'ironed':>12}")
        for v, raw, ironed in zip(t.support, t.raw, t.ironed):
            print(f"  {v:>10.6g} {raw:>12.6g} {ironed:>12.6g}")
    return 0


def cmd_bilateral(args) -> int:
    instance = _load(args)
    buyer, seller = instance.buyers[0], instance.sellers[0]
    som_rows = [(s, som_price(s, buyer)) for s in seller.support]
    bom_rows = [(b, bom_price(b, seller)) for b in buyer.support]
    fb = first_best(instance)
    try:
        opt = solve_second_best_lp(instance).value
    except LpTooLarge:
        opt = None
    payload = {
        "som_price": [
            {"s": s, "price": o.price, "seller_utility": o.utility} for s, o in som_rows
        ],
        "bom_price": [
            {"b": b, "price": o.price, "buyer_utility": o.utility} for b, o in bom_rows
        ],
        "gft_som": gft_som(instance),
        "gft_bom": gft_bom(instance),
        "first_best": fb,
        "opt_lp": opt,
    }
    if args.json or args.out:
        _emit(payload, args)
        return 0
    print(f"{'s':>10} {'som price':>12} {'utility':>10}")
    for s, o in som_rows:
        print(f"{s:>10.6g} {_fmt(o.price):>12} {o.utility:>10.6g}")
    print(f"{'b':>10} {'bom price':>12} {'utility':>10}")
    for b, o in bom_rows:
        print(f"{b:>10.6g} {_fmt(o.price):>12} {o.utility:>10.6g}")
    print(f"gft_som    = {payload['gft_som']:.9g}")
    print(f"gft_bom    = {payload['gft_bom']:.9g}")
    print(f"first_best = {fb:.9g}")
    print(f"opt_lp     = {_fmt(opt)}")
    return 0


def cmd_run(args) -> int:
    instance = _load(args)
    which = {"gsom": GSOM, "gbom": GBOM}[args.mechanism]
    table = build_mechanism(instance, which)
    doc = table_to_dict(table)
    summary = {
        "label": which,
        "gft": gft_exact(table),
        "virtual_gft": virtual_gft(table),
        "exante_surplus": exante_surplus(table),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(json.dumps(summary, indent=2))
    else:
        print(json.dumps(doc if args.json else summary, indent=2))
    return 0


def cmd_benchmark(args) -> int:
    instance = _load(args)
    payload = {
        "alpha": args.alpha,
        "benchmark": duality_benchmark(instance, args.alpha),
        "first_best": first_best(instance),
    }
    if args.json or args.out:
        _emit(payload, args)
    else:
        print(f"duality_benchmark(alpha={args.alpha}) = {payload['benchmark']:.9g}")
        print(f"first_best = {payload['first_best']:.9g}")
    return 0


def cmd_opt_lp(args) -> int:
    instance = _load(args)
    if args.dump_lp:
        with open(args.dump_lp, "w", encoding="utf-8") as fh:
            json.dump(build_second_best_lp(instance).to_dict(), fh)
            fh.write("\n")
    result = solve_second_best_lp(instance)
    payload = {"opt_lp": result.value, "variables": result.lp.problem.num_variables,
               "rows": len(result.lp.problem.rows)}
    if args.json or args.out:
        _emit(payload, args)
    else:
        print(f"opt_lp = {result.value:.9g}  "
              f"({payload['variables']} variables, {payload['rows']} rows)")
    return 0


def _load_table(args):
    with open(args.infile, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    instance = load_instance(args.instance) if getattr(args, "instance", None) else None
    return table_from_dict(doc, instance)


def cmd_transform(args) -> int:
    if args.pipeline != "wbb-to-sbb":
        raise SystemExit(f"unknown pipeline {args.pipeline!r}")
    table = _load_table(args)
    out = wbb_to_sbb_pipeline(table)
    doc = table_to_dict(out)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote per-profile SBB table to {args.out} (gft unchanged: {gft_exact(out):.9g})")
    else:
        print(json.dumps(doc, indent=2))
    return 0


def cmd_audit(args) -> int:
    table = _load_table(args)
    report = audit_mechanism(table, tol_ic=args.tol_ic, tol_bb=args.tol_bb)
    if args.json or args.out:
        _emit(report.to_dict(), args)
    else:
        print(f"{'property':<20} {'pass':<6} {'worst violation':>16}")
        for name, entry in report.entries.items():
            print(f"{name:<20} {str(entry.passed):<6} {entry.worst_violation:>16.3e}")
            if entry.witness:
                print(f"    witness: {entry.witness}")
    return 0 if report.all_passed() else 1


def cmd_suite(args) -> int:
    seeds = range(args.seed, args.seed + args.count)
    specs = [GenSpec(seed=s, n=args.n, m=args.m, max_support=args.max_support,
                     family_kind=args.family) for s in seeds]
    config = SuiteConfig(specs=specs, alphas=tuple(args.alphas), compute_lp=not args.no_lp)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    all_ok = True
    try:
        for record in run_suite(config):
            sink.write(json.dumps(record) + "\n")
            if record["record"] == "instance":
                all_ok &= record["ok"]
    finally:
        if args.out:
            sink.close()
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gftlab",
        description="Budget-balanced double-auction mechanisms, benchmarks, and audits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON file")
    common.add_argument("--out", help="write JSON output to this file")
    common.add_argument("--json", action="store_true", help="emit JSON instead of tables")

    p = sub.add_parser("gen", parents=[common], help="generate a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--max-support", type=int, default=3)
    p.add_argument("--family", default="all_matchings",
                   choices=["all_matchings", "cap", "explicit", "random"])
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("virtuals", parents=[common], help="print virtual value tables")
    p.set_defaults(func=cmd_virtuals)

    p = sub.add_parser("bilateral", parents=[common], help="posted prices and GFT on a 1x1 instance")
    p.set_defaults(func=cmd_bilateral)

    p = sub.add_parser("run", parents=[common], help="build a mechanism table")
    p.add_argument("--mechanism", required=True, choices=["gsom", "gbom"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("benchmark", parents=[common], help="duality upper bound")
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("opt-lp", parents=[common], help="exact second-best GFT")
    p.add_argument("--dump-lp", help="write the LP in JSON form to this file")
    p.set_defaults(func=cmd_opt_lp)

    p = sub.add_parser("transform", parents=[common], help="budget-balance pipeline")
    p.add_argument("--pipeline", default="wbb-to-sbb")
    p.add_argument("--in", dest="infile", required=True, help="mechanism table JSON")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("audit", parents=[common], help="certify mechanism properties")
    p.add_argument("--in", dest="infile", required=True, help="mechanism table JSON")
    p.add_argument("--tol-ic", type=float, default=1e-7)
    p.add_argument("--tol-bb", type=float, default=1e-9)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("suite", parents=[common], help="seeded experiment suite (NDJSON)")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--count", type=int, default=10, help="number of instances")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--max-support", type=int, default=3)
    p.add_argument("--family", default="all_matchings",
                   choices=["all_matchings", "cap", "explicit", "random"])
    p.add_argument("--alphas", type=float, nargs="+", default=list(DEFAULT_ALPHAS))
    p.add_argument("--no-lp", action="store_true", help="skip the second-best LP")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GftLabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
