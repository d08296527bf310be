"""Command-line interface.

Subcommands ``emsempv`` and ``impv`` take the 12 observed frequencies
a11 a10 a01 a00 b11 b10 b01 b00 c11 c10 c01 c00; ``simulate`` runs the
scenarios of a JSON file and writes CSV.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import sys

from . import em, mi, report, sim
from .estimators import EMSEMComparison, MultipleImputationComparison
from .exceptions import InputError, NumericalError, PVCompareError
from .validation import check_table, read_table_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _add_table_args(p):
    p.add_argument("counts", nargs="*", metavar="COUNT",
                   help="a11 a10 a01 a00 b11 b10 b01 b00 c11 c10 c01 c00")
    p.add_argument("--table", metavar="FILE", help="read the 12 counts from FILE")
    p.add_argument("--conf", type=float, default=0.95, help="confidence level (default 0.95)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.add_argument("--out", metavar="FILE", help="write the report to FILE")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pvcompare",
        description="Compare the predictive values of two binary tests under "
                    "partial disease verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("emsempv", help="EM estimates with SEM covariance")
    _add_table_args(p)
    p.add_argument("--delta", type=float, default=em.DEFAULT_DELTA,
                   help="EM stopping tolerance (default 1e-12)")
    p.add_argument("--max-iter", type=int, default=em.DEFAULT_MAX_ITER)

    p = sub.add_parser("impv", help="multiple imputation")
    _add_table_args(p)
    p.add_argument("--m", type=int, default=mi.DEFAULT_M, help="imputations (default 20)")
    p.add_argument("--cycles", type=int, default=mi.DEFAULT_CYCLES,
                   help="chained-equation cycles (default 100)")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--rubin-convention", choices=mi.CONVENTIONS, default="paper")

    p = sub.add_parser("simulate", help="Monte Carlo study from a scenario file")
    p.add_argument("scenarios", help="JSON array or JSON Lines file of scenarios")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes; results do not depend on it")
    p.add_argument("--out", metavar="FILE", help="write CSV to FILE")
    return parser


def _read_counts(args):
    if args.table and args.counts:
        raise InputError("give either 12 counts or --table, not both")
    tokens = read_table_file(args.table) if args.table else args.counts
    if len(tokens) != 12:
        raise InputError(f"expected 12 counts, got {len(tokens)}")
    return tokens


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_emsempv(args):
    table = check_table(_read_counts(args))
    est = EMSEMComparison(delta=args.delta, max_iter=args.max_iter,
                          alpha=args.alpha, conf=args.conf).fit(table)
    return est.report_


def cmd_impv(args):
    table = check_table(_read_counts(args), require_mi=True)
    est = MultipleImputationComparison(m=args.m, cycles=args.cycles, random_state=args.seed,
                                       rubin_convention=args.rubin_convention,
                                       alpha=args.alpha, conf=args.conf).fit(table)
    return est.report_


TITLES = {"emsempv": "EM-SEM comparison of predictive values",
          "impv": "Multiple-imputation comparison of predictive values"}


def cmd_simulate(args):
    scenarios = sim.read_scenarios(args.scenarios)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = sim.csv_writer(out)
        for scn in scenarios:
            try:
                res = sim.run_study(scn, workers=max(1, args.threads))
            except PVCompareError as exc:
                writer.writerow(sim.error_row(scn, exc))
                continue
            for row in sim.result_rows(res):
                writer.writerow(row)
            out.flush()
    finally:
        if args.out:
            out.close()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args)
            return EXIT_OK
        rep = cmd_emsempv(args) if args.command == "emsempv" else cmd_impv(args)
    except (InputError, ValueError, OSError) as exc:
        if isinstance(exc, NumericalError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = report.to_json(rep) if args.json else report.to_text(rep, TITLES[args.command])
    _emit(text, args.out)
    return EXIT_OK


def run():
    sys.exit(main())


def emsempv_main():
    sys.exit(main(["emsempv"] + sys.argv[1:]))


def impv_main():
    sys.exit(main(["impv"] + sys.argv[1:]))


if __name__ == "__main__":
    sys.exit(main())
