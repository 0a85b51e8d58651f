"""Command line entry point: ``scsvm {run,gen,report,certify}``.

Exit status: 0 on success, 1 when a certificate fails, 2 on configuration
errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

import numpy as np

from .dataset import DataError, load
from .harness import (ALGORITHMS, SYNTHETIC_KINDS, compare_report, gen_synthetic, load_model,
                      read_config, spec_from_options, run, write_dataset)
from .oracle import OracleError, certify_optimality
from .solver import ConfigError, SolverConfig

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

# flag name -> option key, for flags that do not follow the field name
_SOLVER_FLAG_ALIASES = {"gamma": "--gamma-tr", "rbf_gamma": "--gamma-rbf"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_run(sub):
    p = sub.add_parser("run", help="train one algorithm over several seeds")
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=["csv", "sparse", "sparse-index-value", "libsvm"])
    p.add_argument("--label-column")
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--seeds", help="e.g. 0,1,2 or 0-19")
    p.add_argument("--test-fraction")
    p.add_argument("--budget-mode", choices=["wall", "steps"])
    p.add_argument("--lam", help="Pegasos regularization weight")
    p.add_argument("--pegasos-steps")
    p.add_argument("--pegasos-record-every")
    p.add_argument("--workers")
    p.add_argument("--no-standardize", action="store_const", const="false", dest="standardize")
    p.add_argument("--out")
    for f in fields(SolverConfig):
        flag = _SOLVER_FLAG_ALIASES.get(f.name, "--" + f.name.replace("_", "-"))
        p.add_argument(flag, dest=f.name, metavar=f.name.upper())
    p.add_argument("--rbf-gamma", dest="rbf_gamma", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_run)


def _add_gen(sub):
    p = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", choices=SYNTHETIC_KINDS, default="blobs")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--sep", type=float, default=3.0, help="blob center distance")
    p.add_argument("--dim", type=int, default=2, help="blob dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)


def _add_report(sub):
    p = sub.add_parser("report", help="first/last objective table from trajectory files")
    p.add_argument("trajectories", nargs="+", help="trajectory CSV files")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--out", help="CSV path; stdout when omitted")
    p.set_defaults(func=cmd_report)


def _add_certify(sub):
    p = sub.add_parser("certify", help="min-norm subgradient certificate for a saved model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", default="csv")
    p.add_argument("--label-column", default="-1")
    p.add_argument("--model", required=True, help="model file written by `run`")
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--eps-prime", type=float, default=1e-3)
    p.add_argument("--max-kinks", type=int, default=30)
    p.set_defaults(func=cmd_certify)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scsvm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run(sub)
    _add_gen(sub)
    _add_report(sub)
    _add_certify(sub)
    return parser


def _label_column(text):
    try:
        return int(text)
    except ValueError:
        return text


def cmd_run(args) -> int:
    options = read_config(args.config) if args.config else {}
    skip = {"command", "func", "config", "verbose"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            options[key] = value
    spec = spec_from_options(options)
    summary = run(spec)
    print(summary.text())
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        data = gen_synthetic(args.kind, args.m, args.noise, args.seed, sep=args.sep, dim=args.dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_dataset(data, args.out)
    print(f"wrote {data.n_samples} rows x {data.n_features} features to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        table = compare_report(args.trajectories, n=args.n)
    except FileNotFoundError as exc:
        raise DataError(f"trajectory not found: {exc.filename}") from None
    except (KeyError, ValueError) as exc:
        raise DataError(f"unreadable trajectory: {exc}") from None
    text = table.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        data = load(args.dataset, args.format, _label_column(args.label_column))
        model = load_model(args.model)
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {exc.filename}") from None
    pos = {int(i): r for r, i in enumerate(data.ids)}
    try:
        rows = np.array([pos[int(i)] for i in model.train_ids], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"model refers to row {exc} missing from the dataset") from None
    train = data.subset(rows)
    train = train.with_features((train.features - model.mean) / model.scale)
    cert = certify_optimality(train, model.active, model.alpha, model.gamma, args.epsilon,
                              args.eps_prime, max_kinks=args.max_kinks)
    print(cert.text())
    return EXIT_OK if cert.passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OracleError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
