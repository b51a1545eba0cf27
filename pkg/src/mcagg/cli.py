"""Command-line interface.

Subcommands: gen, aggregate, select, pipeline, ingest-bigrams. Exit code 0
on success, 1 on validation/usage errors, 2 on unreadable or malformed
input files. Every run prints its effective configuration first so results
can be reproduced from the log alone.
"""
import argparse
import json
import sys

import numpy as np

from .anneal import AnnealConfig, anneal
from .core import stationary_distribution
from .errors import InputError, McaggError, ValidationError
from .generators import default_counts, gen_ncd, gen_replicated_rows
from .io import (file_sha256, ingest_bigrams, parse_matrix, parse_partitions,
                 write_matrix, write_partitions, write_report)
from .pipeline import run_pipeline
from .selection import SelectionOptions, select_k


def _fmt_of(path, explicit):
    if explicit:
        return explicit
    return "json" if str(path).endswith(".json") else "csv"


def _print_config(cmd, args, extra=None):
    cfg = {k: v for k, v in vars(args).items()
           if k != "func" and v is not None}
    if extra:
        cfg.update(extra)
    cfg["command"] = cmd
    print("config:", json.dumps(cfg, sort_keys=True, default=str))


def _load_matrix(args):
    fmt = _fmt_of(args.matrix, args.format)
    return parse_matrix(args.matrix, format=fmt)


def _resolve_rho(matrix, choice):
    if choice == "stationary":
        return stationary_distribution(matrix.rows)
    return np.full(matrix.n, 1.0 / matrix.n)


def _anneal_cfg(args, k_max):
    return AnnealConfig(
        alpha=args.alpha, t0_factor=args.t0_factor,
        t_min_factor=args.tmin_factor, merge_tol=args.merge_tol,
        delta=args.delta, fp_tol=args.fp_tol, fp_max_iter=args.fp_max_iter,
        k_max=k_max, seed=args.seed, schedule=args.schedule,
        per_k=args.per_k, floor=args.floor)


def _add_anneal_flags(p):
    p.add_argument("--kmax", type=int, default=None,
                   help="largest model size (default min(n, 8))")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--t0-factor", dest="t0_factor", type=float, default=2.0)
    p.add_argument("--tmin-factor", dest="tmin_factor", type=float,
                   default=1e-8)
    p.add_argument("--merge-tol", dest="merge_tol", type=float, default=1e-6)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--fp-tol", dest="fp_tol", type=float, default=1e-8)
    p.add_argument("--fp-max-iter", dest="fp_max_iter", type=int, default=500)
    p.add_argument("--schedule", choices=["adaptive", "geometric"],
                   default="adaptive")
    p.add_argument("--per-k", dest="per_k", action="store_true",
                   help="fill skipped k values with independent fixed-k runs")


def _add_select_flags(p):
    p.add_argument("--mode", choices=["plain", "whiten"], default="plain")
    p.add_argument("--membership", choices=["normalized", "raw"],
                   default="normalized")
    p.add_argument("--rho", choices=["uniform", "stationary"],
                   default="uniform")
    p.add_argument("--floor", type=float, default=1e-12)


def _cmd_gen(args):
    _print_config("gen", args)
    if args.family == "ncd":
        if not args.blocks:
            raise ValidationError("gen ncd requires --blocks")
        blocks = [int(b) for b in args.blocks.split(",")]
        matrix, truth = gen_ncd(blocks=blocks, eps=args.eps, seed=args.seed)
    else:
        if args.n is None or args.kt is None:
            raise ValidationError("gen rows requires --n and --kt")
        counts = ([int(c) for c in args.counts.split(",")]
                  if args.counts else default_counts(args.n, args.kt))
        matrix, truth = gen_replicated_rows(n=args.n, k_t=args.kt,
                                            counts=counts, eps=args.eps,
                                            seed=args.seed)
    write_matrix(matrix, args.out, format=_fmt_of(args.out, args.format))
    if args.truth:
        write_partitions({truth.k: truth}, args.truth)
    print(f"wrote {matrix.n}x{matrix.n} matrix to {args.out}")
    return 0


def _cmd_aggregate(args):
    matrix = _load_matrix(args)
    rho = _resolve_rho(matrix, args.rho)
    k_max = args.kmax if args.kmax else min(matrix.n, 8)
    cfg = _anneal_cfg(args, k_max)
    _print_config("aggregate", args, {"kmax_effective": k_max})
    result = anneal(matrix.rows, rho, cfg)
    partitions = {k: part for k, part, _ in result.entries}
    write_partitions(partitions, args.out)
    if args.models:
        obj = {}
        for k, part, model in result.entries:
            obj[str(k)] = {
                "assign": [int(v) for v in part.assign],
                "psi": [[float(v) for v in row] for row in model.psi],
                "distributions": [[float(v) for v in row]
                                  for row in model.distributions],
            }
        with open(args.models, "w") as fh:
            json.dump(obj, fh, sort_keys=True)
            fh.write("\n")
    ks = sorted(partitions)
    print(f"recorded partitions at k = {ks} to {args.out}")
    return 0


def _cmd_select(args):
    matrix = _load_matrix(args)
    rho = _resolve_rho(matrix, args.rho)
    partitions = parse_partitions(args.partitions, labels=matrix.labels)
    options = SelectionOptions(mode=args.mode, membership=args.membership,
                               floor=args.floor)
    _print_config("select", args)
    report = select_k(matrix.rows, partitions, rho, options)
    print(f"k_t = {report.k_t}" + (" (exact fit)" if report.exact_fit else ""))
    if args.out:
        write_report(report, args.out,
                     format=_fmt_of(args.out, args.format),
                     input_hash=file_sha256(args.matrix))
        print(f"wrote report to {args.out}")
    else:
        for k in sorted(report.t_bars):
            nu = report.nus.get(k)
            tail = "" if nu is None or not np.isfinite(nu) else f"{nu:.12f}"
            print(f"{k},{report.t_bars[k]:.12f},{tail}")
    return 0


def _cmd_pipeline(args):
    matrix = _load_matrix(args)
    rho = _resolve_rho(matrix, args.rho)
    k_max = args.kmax if args.kmax else min(matrix.n, 8)
    cfg = _anneal_cfg(args, k_max)
    options = SelectionOptions(mode=args.mode, membership=args.membership,
                               floor=args.floor)
    _print_config("pipeline", args, {"kmax_effective": k_max})
    result = run_pipeline(matrix.rows, rho, k_max=k_max, cfg=cfg,
                          options=options)
    print(f"k_t = {result.k_t}"
          + (" (exact fit)" if result.report.exact_fit else ""))
    if args.partitions_out:
        write_partitions(result.partitions, args.partitions_out)
    if args.out:
        write_report(result.report, args.out,
                     format=_fmt_of(args.out, args.format),
                     input_hash=file_sha256(args.matrix))
        print(f"wrote report to {args.out}")
    return 0


def _cmd_ingest(args):
    _print_config("ingest-bigrams", args)
    matrix = ingest_bigrams(args.counts, smoothing=args.eta)
    write_matrix(matrix, args.out, format=_fmt_of(args.out, args.format))
    print(f"wrote 26x26 bigram chain to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcagg",
        description="Aggregate a Markov chain into representative "
                    "superstates and choose how many.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic chain")
    g.add_argument("family", choices=["ncd", "rows"])
    g.add_argument("--blocks", help="comma-separated NCD block sizes")
    g.add_argument("--n", type=int, help="state count (rows family)")
    g.add_argument("--kt", type=int, help="true cluster count (rows family)")
    g.add_argument("--counts", help="comma-separated multiplicities")
    g.add_argument("--eps", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth", help="also write the truth partition here")
    g.add_argument("--format", choices=["csv", "json"])
    g.set_defaults(func=_cmd_gen)

    a = sub.add_parser("aggregate", help="anneal and record partitions")
    a.add_argument("--matrix", required=True)
    a.add_argument("--out", required=True, help="partitions json path")
    a.add_argument("--models", help="also write centroids and psi here")
    a.add_argument("--rho", choices=["uniform", "stationary"],
                   default="uniform")
    a.add_argument("--floor", type=float, default=1e-12)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--format", choices=["csv", "json"],
                   help="matrix format (default: by extension)")
    _add_anneal_flags(a)
    a.set_defaults(func=_cmd_aggregate)

    s = sub.add_parser("select", help="score partitions and pick k")
    s.add_argument("--matrix", required=True)
    s.add_argument("--partitions", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=["csv", "json"],
                   help="report format (default: by --out extension)")
    _add_select_flags(s)
    s.set_defaults(func=_cmd_select)

    p = sub.add_parser("pipeline", help="aggregate then select")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", help="report path")
    p.add_argument("--partitions-out", dest="partitions_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"])
    _add_anneal_flags(p)
    _add_select_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    b = sub.add_parser("ingest-bigrams", help="letter-pair counts to chain")
    b.add_argument("--counts", required=True)
    b.add_argument("--eta", type=float, default=1.0,
                   help="add-eta smoothing (default 1)")
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=["csv", "json"])
    b.set_defaults(func=_cmd_ingest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except McaggError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
