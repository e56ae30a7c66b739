"""Command-line front end: ``nbimmune {spectral,predict,immunize,scaling,generate}``.

Results go to ``--output`` (stdout by default) as CSV or JSON; a short
human summary goes to stderr.  Exit status is 0 on success, 1 when a
computation fails and 2 for usage, missing-file or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from .errors import GraphError
from .experiments import (
    correlations,
    percent_to_count,
    predict_rows,
    sample_nodes,
    scaling_table,
)
from .generators import GENERATORS, ExperimentConfig, generate
from .graph import load_edge_list_with_summary, write_edge_list
from .immunization import BACKENDS, immunize
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, leading_eigenpair

logger = logging.getLogger("nbimmune")

STRATEGIES = ("degree", "core", "ci", "nb", "xnb", "xdeg", "xnb-naive")


class UsageError(Exception):
    """Bad input that should exit with status 2."""


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _clean(x):
    # JSON has no NaN; report undefined values as null
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


def _emit(args, payload, rows, columns):
    """Write ``payload`` as JSON or ``rows`` as CSV to the chosen output."""
    if args.format == "json":
        text = json.dumps(_clean(payload), indent=2, sort_keys=True,
                          default=_json_default) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load(path):
    try:
        if path == "-":
            g, summary = load_edge_list_with_summary(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                g, summary = load_edge_list_with_summary(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except GraphError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if summary.self_loops or summary.duplicates:
        logger.warning("%s: dropped %d self-loops and %d duplicate edges",
                       path, summary.self_loops, summary.duplicates)
    return g


def cmd_spectral(args):
    g = _load(args.input)
    res = leading_eigenpair(g, tol=args.tol, max_iter=args.max_iter)
    order = np.lexsort((np.arange(g.n), -res.v_bar))
    if args.top is not None:
        order = order[:args.top]
    top = [{"node": int(g.labels[i]), "nb_centrality": float(res.v_bar[i])}
           for i in order]
    payload = {"n": g.n, "m": g.m, "lambda1": res.lambda1,
               "converged": res.converged, "iterations": res.iterations,
               "degenerate": res.degenerate, "top": top}
    _emit(args, payload, top, ["node", "nb_centrality"])
    print(f"lambda1 = {res.lambda1:.12g} (n={g.n}, m={g.m}, "
          f"iterations={res.iterations}, converged={res.converged}"
          f"{', degenerate' if res.degenerate else ''})", file=sys.stderr)
    return 0


def cmd_predict(args):
    g = _load(args.input)
    rng = np.random.default_rng(args.seed)
    nodes = sample_nodes(g, args.sample_fraction, rng)
    rows = predict_rows(g, nodes, tol=args.tol, max_iter=args.max_iter)
    out = []
    for r in rows:
        d = r.as_dict()
        d["node"] = int(g.labels[r.node])
        out.append(d)
    corr = correlations(rows)
    columns = list(out[0]) if out else []
    _emit(args, {"rows": out, "correlations": corr, "seed": args.seed,
                 "sample_fraction": args.sample_fraction}, out, columns)
    summary = ", ".join(f"{k}={v:.4f}" for k, v in corr.items())
    print(f"{len(rows)} sampled nodes; correlation with drop: {summary}",
          file=sys.stderr)
    return 0


def cmd_immunize(args):
    g = _load(args.input)
    if args.p is not None:
        if args.p < 0:
            raise UsageError("--p must be non-negative")
        p = args.p
    else:
        p = percent_to_count(args.percent, g.n)
    strategy = args.strategy.replace("-", "_")
    rep = immunize(g, p, strategy, backend=args.backend,
                   record_lambda=not args.no_trace, tol=args.tol,
                   max_iter=args.max_iter)
    payload = rep.to_dict()
    payload["removed"] = [int(g.labels[c]) for c in rep.removed]
    if strategy != "xdeg":
        payload["backend"] = None
    if args.no_timing:
        del payload["wall_time"]
    rows = [{"round": r, "node": payload["removed"][r],
             "lambda_after": payload["lambda_after_each"][r]}
            for r in range(len(rep.removed))]
    _emit(args, payload, rows, ["round", "node", "lambda_after"])
    flags = []
    if rep.zero_score_rounds:
        flags.append(f"{len(rep.zero_score_rounds)} zero-score removals")
    if rep.fallback_round is not None:
        flags.append(f"fell back to x-degree at round {rep.fallback_round}")
    if rep.truncated:
        flags.append("truncated")
    print(f"{args.strategy}: removed {len(rep.removed)} nodes, lambda1 "
          f"{rep.lambda_before:.6g} -> {rep.lambda_final:.6g} "
          f"({rep.percent_drop:.3f}% drop)"
          + (f" [{'; '.join(flags)}]" if flags else ""), file=sys.stderr)
    return 0


def cmd_scaling(args):
    backends = tuple(sorted([args.backend])) if args.backend else BACKENDS
    rows = scaling_table(args.n, args.p, args.seeds, gamma=args.gamma,
                         backends=backends, seed=args.seed,
                         warmup=not args.no_warmup)
    _emit(args, {"gamma": args.gamma, "p": args.p, "seeds": args.seeds,
                 "rows": rows}, rows,
          ["n", "backend", "mean_seconds", "std_seconds"])
    return 0


def _parse_params(items):
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = int(value)
        except ValueError:
            try:
                params[key] = float(value)
            except ValueError as exc:
                raise UsageError(f"--param {key}: not a number: {value!r}") from exc
    return params


def cmd_generate(args):
    cfg = ExperimentConfig(generator=args.generator, n=args.n, seed=args.seed,
                           params=_parse_params(args.param))
    try:
        g = generate(cfg)
    except TypeError as exc:
        raise UsageError(f"bad generator parameters: {exc}") from exc
    if args.output in (None, "-"):
        write_edge_list(g, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            write_edge_list(g, fh)
    print(f"{args.generator}: n={g.n}, m={g.m}", file=sys.stderr)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", metavar="PATH",
                        help="write results here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"),
                        help="output format (default: csv for scaling, json otherwise)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="power-iteration tolerance (default %(default)g)")
    common.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(
        prog="nbimmune",
        description="Non-backtracking eigenvalue analysis and node immunization.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectral", parents=[common],
                        help="leading NB-eigenvalue and NB-centralities")
    sp.add_argument("--input", "-i", required=True, metavar="PATH")
    sp.add_argument("--top", type=int, metavar="K",
                    help="report only the K most central nodes")
    sp.set_defaults(func=cmd_spectral)

    pp = sub.add_parser("predict", parents=[common],
                        help="true vs predicted eigen-drops on sampled nodes")
    pp.add_argument("--input", "-i", required=True, metavar="PATH")
    pp.add_argument("--sample-fraction", type=float, default=0.1)
    pp.set_defaults(func=cmd_predict)

    ip = sub.add_parser("immunize", parents=[common],
                        help="greedy node removal with one strategy")
    ip.add_argument("--input", "-i", required=True, metavar="PATH")
    ip.add_argument("--strategy", choices=STRATEGIES, required=True)
    ip.add_argument("--backend", choices=BACKENDS, default="ipq",
                    help="X-degree bookkeeping (xdeg strategy only)")
    count = ip.add_mutually_exclusive_group(required=True)
    count.add_argument("--p", type=int, help="number of nodes to remove")
    count.add_argument("--percent", type=float,
                       help="percentage of nodes to remove (floor, at least 1)")
    ip.add_argument("--no-trace", action="store_true",
                    help="skip the eigen-solve after intermediate rounds")
    ip.add_argument("--no-timing", action="store_true",
                    help="omit wall time so repeated runs give identical output")
    ip.set_defaults(func=cmd_immunize)

    sc = sub.add_parser("scaling", parents=[common],
                        help="runtime of X-degree immunization vs graph size")
    sc.add_argument("--n", type=int, nargs="+", default=[10_000, 20_000])
    sc.add_argument("--p", type=int, default=100)
    sc.add_argument("--gamma", type=float, default=2.5)
    sc.add_argument("--seeds", type=int, default=10)
    sc.add_argument("--backend", choices=BACKENDS,
                    help="time only this backend (default: both)")
    sc.add_argument("--no-warmup", action="store_true",
                    help="time the first run on each graph instead of a repeat")
    sc.set_defaults(func=cmd_scaling, default_format="csv")

    gp = sub.add_parser("generate", parents=[common],
                        help="write a synthetic graph as an edge list")
    gp.add_argument("--generator", choices=GENERATORS, required=True)
    gp.add_argument("--n", type=int, required=True)
    gp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="generator parameter, e.g. attach=6 or gamma=2.5")
    gp.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    # resolved here because the parent parser's actions are shared by all
    # subcommands, so a per-subcommand default would leak into the others
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nbimmune: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"nbimmune: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
