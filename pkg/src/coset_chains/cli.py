"""Command-line entry point: ``coset-chains <command> ...``.

Cells are given 1-based on the command line (``--cell 2,2``).  Exit status is
2 for usage errors and 1 when a computation cannot proceed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import chains, mixing, spectral, stats, tables


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"entries must be non-negative, got {text!r}")
    return vals


def _margins(args) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if args.table:
        t = tables.load_table(args.table)
        return t.row_sums, t.col_sums
    if args.rows is None or args.cols is None:
        raise UsageError("--rows and --cols are required (or --table)")
    if sum(args.rows) != sum(args.cols):
        raise UsageError(f"margins must have equal sums: rows sum to {sum(args.rows)}, cols to {sum(args.cols)}")
    if sum(args.rows) == 0:
        raise UsageError("margins must sum to a positive n")
    return args.rows, args.cols


def _num(x, exact: bool):
    if isinstance(x, Fraction):
        return str(x) if exact else float(x)
    return x


def _emit(args, payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=None)
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _start_state(args, states):
    if args.table:
        return tables.load_table(args.table)
    return states[args.start]


# ---------------------------------------------------------------------------
# commands

def cmd_enumerate(args):
    rows, cols = _margins(args)
    if args.count_only:
        return _emit(args, str(tables.count_tables(rows, cols)))
    states = tables.enumerate_tables(rows, cols)
    if args.format == "json":
        return _emit(args, [[list(r) for r in t.entries] for t in states])
    if args.format == "csv":
        return _emit(args, _csv(["index"] + [f"x{i + 1}{j + 1}" for i in range(len(rows)) for j in range(len(cols))],
                                [[k, *t.flat()] for k, t in enumerate(states)]))
    _emit(args, "\n".join(str(t) for t in states))


def cmd_pmf(args):
    rows, cols = _margins(args)
    states = tables.enumerate_tables(rows, cols)
    probs = tables.fisher_yates_distribution(states)
    sizes = [tables.coset_size(t) for t in states]
    if args.format == "json":
        return _emit(args, [{"table": [list(r) for r in t.entries], "pmf": _num(p, args.exact), "coset_size": s}
                            for t, p, s in zip(states, probs, sizes)])
    _emit(args, _csv(["table", "pmf", "coset_size"],
                     [[str(t), _num(p, args.exact), s] for t, p, s in zip(states, probs, sizes)]))


def cmd_sample(args):
    rows, cols = _margins(args)
    draws = tables.sample_fisher_yates_many(rows, cols, args.n, tables.make_rng(args.seed))
    if args.format == "json":
        return _emit(args, draws.tolist())
    _emit(args, _csv([f"x{i + 1}{j + 1}" for i in range(len(rows)) for j in range(len(cols))],
                     draws.reshape(args.n, -1).tolist()))


def cmd_spectrum(args):
    rows, cols = _margins(args)
    spec = spectral.spectrum(rows, cols)
    if args.format == "csv":
        return _emit(args, _csv(["partition", "beta", "beta_float", "multiplicity"],
                                [[" ".join(map(str, e.partition)), str(e.beta), float(e.beta), e.multiplicity]
                                 for e in spec]))
    _emit(args, [e.as_dict() for e in spec])


def cmd_evolve(args):
    rows, cols = _margins(args)
    kernel = chains.KERNELS[args.chain](rows, cols)
    x0 = _start_state(args, kernel.states)
    ev = mixing.evolve(kernel, x0, args.t, exact=args.exact)
    pi = kernel.stationary(exact=ev.exact and args.exact)
    out = [{"table": [list(r) for r in s.entries], "p": _num(p, args.exact) if ev.exact else float(p),
            "pi": _num(q, args.exact)} for s, p, q in zip(kernel.states, ev.dist, pi)]
    if args.format == "csv":
        return _emit(args, _csv(["table", "p", "pi"], [[str(s), o["p"], o["pi"]] for s, o in zip(kernel.states, out)]))
    _emit(args, {"t": args.t, "exact": ev.exact, "switched_at": ev.switched_at, "distribution": out})


def cmd_mix(args):
    rows, cols = _margins(args)
    kernel = chains.KERNELS[args.chain](rows, cols)
    x0 = _start_state(args, kernel.states)
    prof = mixing.distance_profile(kernel, x0, args.t_max)
    header = ["t", "tv", "chi2", "bound"]
    lines = [[t, tv, c2, min(1.0, math.sqrt(c2) / 2)] for t, tv, c2 in zip(prof.t, prof.tv, prof.chi2)]
    if args.paths:
        if args.chain != "rt":
            raise UsageError("--paths simulates the rt chain only")
        header += ["tv_mc", "ci_low", "ci_high"]
        seeds = np.random.SeedSequence(args.seed).spawn(len(prof.t))
        for k, t in enumerate(prof.t):
            est = mixing.empirical_tv(x0, t, args.paths, seed=seeds[k], jobs=args.jobs, states=kernel.states)
            lines[k] += [est.estimate, est.ci_low, est.ci_high]
    if args.format == "json":
        return _emit(args, [dict(zip(header, r)) for r in lines])
    _emit(args, _csv(header, lines))


def _cell(args):
    i, j = args.cell
    return i - 1, j - 1


def cmd_wilson(args):
    rows, cols = _margins(args)
    i, j = _cell(args)
    b = mixing.wilson_lower_bound(rows, cols, i, j, args.c)
    _emit(args, {"t_lower": b.t_lower, "case": b.case, "argument": b.argument,
                 "degenerate": b.degenerate, "reason": b.reason})


def cmd_bounds(args):
    if args.kind == "extreme":
        if args.k is None or args.cols is None or args.j is None:
            raise UsageError("extreme bounds need --k, --cols and --j")
        b = mixing.extreme_state_bounds(args.k, args.cols, args.j - 1, args.c)
        return _emit(args, {"state": [list(r) for r in b.state.entries], "t_upper": b.t_upper,
                            "t_lower": b.t_lower, "chi2_at_t_upper": b.chi2_upper,
                            "chi2_at_t_lower": b.chi2_lower, "bound_upper": b.bound_upper,
                            "bound_lower": b.bound_lower})
    if args.k is None or args.l is None or args.n is None:
        raise UsageError("average bounds need --k, --l and --n")
    b = mixing.avg_chi2_bound(args.k, args.l, args.n, args.c, kind=args.kind.split("-")[1])
    _emit(args, {"kind": b.kind, "t": b.t, "bound": b.bound, "t_checked": b.t_checked,
                 "exact_average": b.exact_average, "holds": b.holds})


def cmd_compare(args):
    rows, cols = _margins(args)
    r = mixing.relaxation_comparison(rows, cols)
    _emit(args, {"rows": list(r.rows), "cols": list(r.cols), "tau": r.tau, "m": r.m, "M": r.M,
                 "bounds": r.bounds, "holds_a": r.holds_a, "holds_b": r.holds_b, "skipped": r.skipped})


def _fmt_matrix(mat, row_labels, col_labels) -> str:
    width = max(8, *(len(c) + 1 for c in col_labels))
    lines = [" " * 10 + "".join(f"{c:>{width}}" for c in col_labels)]
    for lab, row in zip(row_labels, mat):
        lines.append(f"{lab:<10}" + "".join(f"{v:>{width}.3f}" for v in row))
    return "\n".join(lines)


def cmd_analyze(args):
    if args.dataset:
        ds = stats.builtin(args.dataset)
        t, rlab, clab = ds.table, ds.row_labels, ds.col_labels
    elif args.table:
        t = tables.load_table(args.table)
        rlab = tuple(str(i + 1) for i in range(t.shape[0]))
        clab = tuple(str(j + 1) for j in range(t.shape[1]))
    else:
        raise UsageError("analyze needs --dataset or --table")
    report = stats.analyze(t)
    if args.panel:
        report["quadratic_panel"] = [{"cells": [[i + 1, j + 1] for i, j in e.cells], "kind": e.kind,
                                      "value": e.value} for e in stats.quadratic_residual_panel(t)]
    if args.format == "json":
        return _emit(args, report)
    dec = report["decomposition"]
    text = [f"n = {report['n']}, chi2 = {report['chi2']:.4f} on {report['df']} df"
            + (f", p = {report['p_value']:.4g}" if report["p_value"] is not None else ""),
            "", "Pearson residuals", _fmt_matrix(report["pearson"], rlab, clab),
            "", "Unit-norm residuals", _fmt_matrix(report["normalized"], rlab, clab),
            "", "Decomposition",
            f"  quadratic  {float(Fraction(dec['quad_part'])):.6f}",
            f"  linear     {float(Fraction(dec['linear_part'])):.6f}",
            f"  constant   {float(Fraction(dec['constant_part'])):.6f}",
            f"  total      {float(Fraction(dec['total'])):.6f}"]
    if args.panel:
        vals = [e["value"] for e in report["quadratic_panel"]]
        text += ["", f"Quadratic panel: {len(vals)} functions, min {min(vals):.3f}, max {max(vals):.3f}"]
    _emit(args, "\n".join(text))


def cmd_three_way(args):
    if args.lam is None or args.mu is None or args.rho is None:
        raise UsageError("three-way needs --lam, --mu and --rho")
    if not sum(args.lam) == sum(args.mu) == sum(args.rho):
        raise UsageError("the three margins must have equal sums")
    r = chains.verify_three_way(args.lam, args.mu, args.rho)
    _emit(args, {"margins": [list(m) for m in r.margins], "states": r.states,
                 "rows_sum_to_one": r.rows_sum_to_one, "detailed_balance": r.detailed_balance,
                 "components": r.components})


COMMANDS = {
    "enumerate": (cmd_enumerate, "list (or count) tables with the given margins"),
    "pmf": (cmd_pmf, "Fisher-Yates probabilities and double-coset sizes"),
    "sample": (cmd_sample, "draw Fisher-Yates tables"),
    "spectrum": (cmd_spectrum, "closed-form eigenvalues and multiplicities of the rt chain"),
    "evolve": (cmd_evolve, "distribution after t steps from a starting table"),
    "mix": (cmd_mix, "TV and chi-square distance profile (CSV: t, tv, chi2, bound)"),
    "wilson": (cmd_wilson, "Wilson-type lower bound on the mixing time"),
    "bounds": (cmd_bounds, "closed-form mixing bounds for two-row tables"),
    "compare": (cmd_compare, "relaxation times of the rt, uniform and Metropolis chains"),
    "analyze": (cmd_analyze, "residuals and chi-square decomposition of a table"),
    "three-way": (cmd_three_way, "verify the three-way chain on given margins"),
}

DEFAULT_FORMAT = {"enumerate": "text", "pmf": "csv", "sample": "csv", "mix": "csv", "analyze": "text"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rows", type=_int_list, help="row sums, e.g. 3,2")
    common.add_argument("--cols", type=_int_list, help="column sums, e.g. 2,2,1")
    common.add_argument("--table", help="table file (.json or .csv)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("json", "csv", "text"), default=None,
                        help="output format (default depends on the command)")
    common.add_argument("--exact", action="store_true", help="print exact fractions instead of floats")
    common.add_argument("--out", help="write output to this file")

    parser = argparse.ArgumentParser(prog="coset-chains", description="Random transpositions on contingency tables.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = {name: sub.add_parser(name, parents=[common], help=h) for name, (_, h) in COMMANDS.items()}

    p["enumerate"].add_argument("--count-only", action="store_true")
    p["sample"].add_argument("--n", type=int, default=1, help="number of draws")
    for name in ("evolve", "mix"):
        p[name].add_argument("--chain", choices=sorted(chains.KERNELS), default="rt")
        p[name].add_argument("--start", type=int, default=0, help="index of the starting table (without --table)")
    p["evolve"].add_argument("--t", type=int, required=True)
    p["mix"].add_argument("--t-max", type=int, default=20)
    p["mix"].add_argument("--paths", type=int, default=0, help="also estimate TV from this many simulated paths")
    p["mix"].add_argument("--jobs", type=int, default=1)
    p["wilson"].add_argument("--cell", type=_int_list, required=True, help="1-based cell i,j")
    p["wilson"].add_argument("--c", type=float, default=0.0)
    p["bounds"].add_argument("--kind", choices=("extreme", "avg-upper", "avg-lower"), default="extreme")
    p["bounds"].add_argument("--k", type=int)
    p["bounds"].add_argument("--l", type=int)
    p["bounds"].add_argument("--n", type=int)
    p["bounds"].add_argument("--j", type=int, help="1-based column of the extreme state")
    p["bounds"].add_argument("--c", type=float, default=1.0)
    p["analyze"].add_argument("--dataset", choices=stats.DATASETS)
    p["analyze"].add_argument("--panel", action="store_true", help="include the quadratic eigenfunction panel")
    p["three-way"].add_argument("--lam", type=_int_list)
    p["three-way"].add_argument("--mu", type=_int_list)
    p["three-way"].add_argument("--rho", type=_int_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "cell", None) is not None and (len(args.cell) != 2 or min(args.cell) < 1):
        parser.error("--cell takes two 1-based indices, e.g. 2,2")
    if getattr(args, "n", None) is not None and args.command == "sample" and args.n < 1:
        parser.error("--n must be at least 1")
    if getattr(args, "paths", 0) < 0 or getattr(args, "jobs", 1) < 1:
        parser.error("--paths must be non-negative and --jobs at least 1")
    if args.format is None:
        args.format = DEFAULT_FORMAT.get(args.command, "json")
    func = COMMANDS[args.command][0]
    try:
        func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, IndexError, KeyError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"coset-chains {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
