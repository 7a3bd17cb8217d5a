"""Command-line entry point.

Exit codes: 0 success, 1 table or validation mismatch, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from . import coeffdb, montecarlo, mse, qwiener, report
from . import expansion as ex
from .tables import MIN_Q_REFERENCE, verify_tables

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        try:
            x = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if x < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}: {text!r}")
        return x

    return parse


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected nonnegative integers: {text!r}")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _output_options(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itofourier", description="Fourier-Legendre expansions of iterated Ito integrals.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-coeffs", help="write the unit-weight coefficient grid for one multiplicity")
    p.add_argument("--k", type=_int_at_least(1), required=True)
    p.add_argument("--p", type=_int_at_least(0), required=True)
    p.add_argument("--out", required=True)

    sub.add_parser("verify-tables", help="check the published coefficient tables exactly")

    p = sub.add_parser("approx", help="one seeded realization of a truncated iterated integral")
    p.add_argument("--indices", type=_int_list, required=True, help="i_1..i_k, innermost first; 0 means ds")
    p.add_argument("--q", type=_int_at_least(0), required=True)
    p.add_argument("--dt", type=_positive_float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--compensated", action="store_true", help="exactly rounded summation")
    _output_options(p)

    p = sub.add_parser("error-table", help="mean-square errors for q = 0..q-max")
    p.add_argument("--k", type=_int_at_least(1), required=True)
    p.add_argument("--q-max", type=_int_at_least(0), required=True)
    p.add_argument("--dt", type=_positive_float, required=True)
    p.add_argument("--pattern", help="equality pattern such as aab; default all distinct")
    p.add_argument("--bound", action="store_true", help="factorial upper bound instead of the exact error")
    _output_options(p)

    p = sub.add_parser("min-q", help="smallest orders with error <= (T-t)^4")
    p.add_argument("--dt", help="comma-separated interval lengths; default the reference columns")
    p.add_argument("--check", action="store_true", help="compare with the reference values")
    _output_options(p)

    p = sub.add_parser("qwiener", help="seeded composite Q-Wiener approximation and its error bound")
    p.add_argument("--kind", choices=qwiener.COMPOSITE_KINDS, required=True)
    p.add_argument("--M", type=_int_at_least(1), default=4)
    p.add_argument("--nu", type=float, default=2.0)
    p.add_argument("--q", type=_int_at_least(0), required=True)
    p.add_argument("--dt", type=_positive_float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=_int_at_least(1), default=3, help="state dimension of the synthetic operators")
    p.add_argument("--config", help="JSON file with spectrum and operators")
    p.add_argument("--constant", type=float, help="bound constant; default the largest squared column norm")
    p.add_argument("--threads", type=_int_at_least(1), default=1)
    _output_options(p)

    p = sub.add_parser("validate", help="Monte Carlo validation suite")
    p.add_argument("--suite", choices=tuple(montecarlo.SUITES), required=True)
    p.add_argument("--R", type=_int_at_least(2), default=100_000)
    p.add_argument("--N", type=_int_at_least(2), default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dt", type=_positive_float)
    p.add_argument("--batch", type=_int_at_least(1), default=250)
    p.add_argument("--threads", type=_int_at_least(1), default=1)
    _output_options(p)

    p = sub.add_parser("export-db", help="write unit-weight coefficient grids for several multiplicities")
    p.add_argument("--p", type=_int_at_least(0), required=True)
    p.add_argument("--k", type=_int_list, default=(1, 2, 3))
    p.add_argument("--out", required=True)

    p = sub.add_parser("import-db", help="read and check a coefficient file")
    p.add_argument("path")
    _output_options(p)
    return parser


# ---------------------------------------------------------------------------
# subcommands


def _emit(args, rows, columns):
    report.emit(rows, columns, args.format, out=args.out, stream=None if args.out else sys.stdout)


def cmd_gen_coeffs(args) -> int:
    path = coeffdb.export_db(args.p, [args.k], report.resolve_output(args.out))
    print(f"wrote {(args.p + 1) ** args.k} coefficients to {path}")
    return EXIT_OK


def cmd_export_db(args) -> int:
    path = coeffdb.export_db(args.p, args.k, report.resolve_output(args.out))
    total = sum((args.p + 1) ** k for k in set(args.k))
    print(f"wrote {total} coefficients to {path}")
    return EXIT_OK


def cmd_import_db(args) -> int:
    try:
        grids = coeffdb.import_db(args.path)
    except coeffdb.CoeffDBError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISMATCH
    rows = [
        {"k": k, "p": t.shape[0] - 1, "records": int(np.prod(t.shape)), "sum_squares": float(t.sum_squares())}
        for k, t in sorted(grids.items())
    ]
    _emit(args, rows, ("k", "p", "records", "sum_squares"))
    return EXIT_OK


def cmd_verify_tables(args) -> int:
    bad = verify_tables()
    if not bad:
        print("tables 2,3,4: OK")
        return EXIT_OK
    for m in bad:
        print(f"table {m.table} cbar{m.subscript}: expected {m.expected}, computed {m.computed}")
    return EXIT_MISMATCH


def cmd_approx(args) -> int:
    idx = args.indices
    m = max(max(idx), 1)
    noise = ex.gen_noise(m, args.q, args.seed)
    value = ex.approx_iterated(idx, None, args.q, noise, args.dt, compensated=args.compensated)
    count = ex.coefficient_count(idx, None, args.q, args.dt)
    row = {"indices": ",".join(map(str, idx)), "q": args.q, "dt": args.dt, "seed": args.seed, "value": float(value), "coefficients": count}
    _emit(args, [row], ("indices", "q", "dt", "seed", "value", "coefficients"))
    return EXIT_OK


def cmd_error_table(args) -> int:
    rows = []
    for q in range(args.q_max + 1):
        if args.bound:
            rep = mse.mse_bound(args.k, None, q, args.dt)
        elif args.pattern:
            pattern = mse.IndexPattern.of(args.pattern)
            if pattern.k != args.k:
                raise UsageError(f"pattern {args.pattern!r} has length {pattern.k}, not {args.k}")
            rep = mse.mse_exact_case(pattern, q, args.dt)
        else:
            rep = mse.mse_exact_distinct(args.k, None, q, args.dt)
        rows.append({"q": q, "exact_or_bound": rep.value, "kind": rep.kind, "equation_tag": rep.equation_tag})
    _emit(args, rows, ("q", "exact_or_bound", "kind", "equation_tag"))
    return EXIT_OK


def cmd_min_q(args) -> int:
    labels = args.dt.split(",") if args.dt else list(MIN_Q_REFERENCE)
    rows, status = [], EXIT_OK
    for label in labels:
        label = label.strip()
        row = {"interval_length": float(label), "q": mse.min_q(2, label), "q1": mse.min_q(3, label)}
        if args.check:
            if label not in MIN_Q_REFERENCE:
                raise UsageError(f"no reference value for {label}")
            ref_q, ref_q1 = MIN_Q_REFERENCE[label]
            ok = abs(row["q"] - ref_q) <= 1 and row["q1"] == ref_q1
            row.update(reference_q=ref_q, reference_q1=ref_q1, verdict="pass" if ok else "fail")
            status = status if ok else EXIT_MISMATCH
        rows.append(row)
    cols = ("interval_length", "q", "q1") + (("reference_q", "reference_q1", "verdict") if args.check else ())
    _emit(args, rows, cols)
    return status


def cmd_qwiener(args) -> int:
    if args.config:
        spec, ops = qwiener.load_config(args.config)
    else:
        spec = qwiener.QWienerSpec.power_law(args.M, args.nu)
        ops = qwiener.synthetic_composite(args.n, args.M, args.seed)
    noise = ex.gen_noise(ops.M, max(args.q, 1) + 2, args.seed)
    value = qwiener.approx_composite(args.kind, ops, spec, args.q, noise, args.dt, args.threads)
    constant = args.constant if args.constant is not None else qwiener.compose(args.kind, ops).L
    bound = qwiener.composite_error_bound(args.kind, constant, spec, args.q, args.dt)
    rows = [{"name": f"h{h}", "value": float(v)} for h, v in enumerate(value)]
    rows.append({"name": "bound", "value": bound})
    _emit(args, rows, ("name", "value"))
    return EXIT_OK


def cmd_validate(args) -> int:
    suite = montecarlo.SUITES[args.suite]
    kwargs = {"seed": args.seed}
    if args.suite == "identities":
        kwargs.update(paths=args.R, N=args.N)
    else:
        kwargs.update(R=args.R, N=args.N, batch=args.batch, threads=args.threads)
    if args.dt is not None:
        kwargs["interval_length"] = args.dt
    rows = suite(**kwargs)
    _emit(args, rows, ("case", "target", "estimate", "se", "tolerance", "verdict"))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_MISMATCH


COMMANDS = {
    "gen-coeffs": cmd_gen_coeffs,
    "verify-tables": cmd_verify_tables,
    "approx": cmd_approx,
    "error-table": cmd_error_table,
    "min-q": cmd_min_q,
    "qwiener": cmd_qwiener,
    "validate": cmd_validate,
    "export-db": cmd_export_db,
    "import-db": cmd_import_db,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"itofourier: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except coeffdb.CoeffDBError as err:
        print(f"itofourier: error: {err}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ValueError, IndexError) as err:
        print(f"itofourier: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"itofourier: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
