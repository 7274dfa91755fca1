"""Command-line entry point: ``ldperm <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

from ldperm.approx import SmoothingParams, build_derivative_poly
from ldperm.harness.baseline import baseline_optimum
from ldperm.harness.config import ConfigError, MODE_ALIASES, load_config
from ldperm.harness.data import GENERATORS, Dataset, generate_synthetic
from ldperm.harness.experiment import read_results, run_experiment, summarize
from ldperm.losses import CATALOG, get_loss
from ldperm.privacy import PrivacyBudget, plan_noise, player_stream, randomize_player


def cmd_generate(args) -> int:
    ds = generate_synthetic(args.kind, args.n, args.p, args.margin, args.seed)
    ds.to_csv(args.out)
    print(f"wrote {ds.n} records (p={ds.p}) to {args.out}")
    return 0


def cmd_randomize(args) -> int:
    ds = Dataset.from_csv(args.input, clip=True)
    budget = PrivacyBudget(args.epsilon, args.delta, MODE_ALIASES[args.mode])
    plan = plan_noise(budget, args.degree)
    for msg in plan.warnings:
        logging.warning(msg)
    with open(args.out, "w") as fh:
        for i in range(ds.n):
            rep = randomize_player(ds.xs[i], ds.ys[i], plan, args.degree, player_stream(args.seed, i), i)
            fh.write(json.dumps(rep.to_json()) + "\n")
    print(
        f"wrote {ds.n} reports to {args.out}; composed epsilon={plan.composed_epsilon:.6g} "
        f"delta={plan.composed_delta:.6g}"
    )
    return 0


def cmd_baseline(args) -> int:
    ds = Dataset.from_csv(args.input, clip=True)
    res = baseline_optimum(get_loss(args.loss), ds.xs, ds.ys, tol=args.tol)
    print(json.dumps({
        "loss": args.loss,
        "value": res.value,
        "w": res.w.tolist(),
        "iterations": res.iterations,
        "converged": res.converged,
    }))
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.out_dir:
        cfg = replace(cfg, out_dir=args.out_dir)
    if args.theory:
        cfg = replace(cfg, theory=True).validate()
    result = run_experiment(cfg)
    print(
        f"{cfg.loss}: degree={result.degree} sup_error={result.sup_error:.4g} "
        f"median excess risk={result.median_excess_risk:.6g} over {len(result.replications)} seeds"
    )
    return 0


def cmd_approx_check(args) -> int:
    poly = build_derivative_poly(
        args.kind,
        SmoothingParams(args.beta, degree_override=args.degree),
        ceiling=max(args.degree, 1024),
        grid_step=args.grid_step,
    )
    writer = csv.writer(sys.stdout)
    writer.writerow([args.kind, args.beta, args.degree, repr(poly.sup_error), repr(poly.mean_error)])
    return 0


def cmd_report(args) -> int:
    rows = summarize(read_results(args.results))
    writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]) if rows else ["loss"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldperm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV (y first)")
    g.add_argument("--kind", choices=GENERATORS, default="separable_svm")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--margin", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("randomize", help="produce one JSON-lines report per player")
    r.add_argument("--input", required=True)
    r.add_argument("--epsilon", type=float, required=True)
    r.add_argument("--delta", type=float, default=1e-5)
    r.add_argument("--degree", type=int, required=True)
    r.add_argument("--mode", choices=("paper", "calibrated"), default="calibrated")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_randomize)

    b = sub.add_parser("baseline", help="nonprivate optimum over the unit ball")
    b.add_argument("--input", required=True)
    b.add_argument("--loss", choices=sorted(CATALOG), default="hinge")
    b.add_argument("--tol", type=float, default=1e-4)
    b.set_defaults(func=cmd_baseline)

    t = sub.add_parser("train", help="run an experiment from a key = value config file")
    t.add_argument("--config", required=True)
    t.add_argument("--out-dir")
    t.add_argument("--theory", action="store_true", help="derive the degree from alpha")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("approx-check", help="grid error of a derivative approximation")
    a.add_argument("--kind", choices=("hinge", "plus"), required=True)
    a.add_argument("--beta", type=float, required=True)
    a.add_argument("--degree", type=int, required=True)
    a.add_argument("--grid-step", type=float, default=1e-3)
    a.set_defaults(func=cmd_approx_check)

    rp = sub.add_parser("report", help="median excess risk per setting from a results CSV")
    rp.add_argument("--results", required=True)
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
