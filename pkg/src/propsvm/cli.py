"""Command-line front end: train, bench, toy, and inspect subcommands.

Exit codes: 0 on success, 1 for configuration problems (bad flags, bad
config file, unreadable data), 2 when a solver fails to converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .alternating import AlterParams, train_alter
from .convex import ConvParams, train_conv
from .data import ConfigError, ParseError, generate_bags
from .harness import (
    METHODS,
    ExperimentConfig,
    ExperimentResult,
    _stream,
    bag_error,
    instance_accuracy,
    load_experiment_dataset,
    make_toy_dataset,
    parse_config,
    run_experiment,
)
from .invcal import InvCalParams, train_invcal
from .kernels import KernelConfig
from .model import model_to_json
from .svm import SolverError


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage as a configuration error (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    ap = _Parser(prog="propsvm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tr = sub.add_parser("train", help="fit one method with explicit settings")
    tr.add_argument("--dataset", required=True, help="sparse data file, or 'toy'")
    tr.add_argument("--method", required=True, choices=METHODS)
    tr.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    tr.add_argument("--gamma", type=float, default=None)
    tr.add_argument("--C", type=float, default=1.0)
    tr.add_argument("--Cp", type=float, default=1.0)
    tr.add_argument("--eps", type=float, default=0.0)
    tr.add_argument("--bag-size", type=int, default=8)
    tr.add_argument("--restarts", type=int, default=10)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", help="write the fitted model as JSON here")
    tr.set_defaults(func=_cmd_train)

    be = sub.add_parser("bench", help="run the benchmark protocol from a config")
    be.add_argument("--config", help="flat key = value config file")
    for flag in (
        "--dataset",
        "--method",
        "--kernel",
        "--gamma",
        "--C",
        "--Cp",
        "--eps",
        "--bag-size",
        "--folds",
        "--trials",
        "--restarts",
        "--seed",
        "--jobs",
    ):
        be.add_argument(flag, help=f"override the config key '{flag[2:]}'")
    be.add_argument("--with-timings", action="store_true")
    be.add_argument("--out", default="report.json", help="JSON report path")
    be.add_argument("--csv", help="also write the aggregate table as CSV")
    be.set_defaults(func=_cmd_bench)

    ty = sub.add_parser("toy", help="run the built-in two-bag experiment")
    ty.add_argument("--trials", type=int, default=1)
    ty.add_argument("--seed", type=int, default=0)
    ty.add_argument("--out", help="write the JSON report here")
    ty.set_defaults(func=_cmd_toy)

    ins = sub.add_parser("inspect", help="summarize a JSON report")
    ins.add_argument("report", help="path to a bench/toy JSON report")
    ins.set_defaults(func=_cmd_inspect)
    return ap


def _cmd_train(args) -> int:
    kcfg = KernelConfig(args.kernel, gamma=args.gamma)
    if args.dataset == "toy":
        data, part = make_toy_dataset()
    else:
        data = load_experiment_dataset(args.dataset, seed=args.seed)
        part = generate_bags(
            data, args.bag_size, _stream(args.seed, 11, args.bag_size, 0)
        )
    if args.method == "alter":
        model = train_alter(
            data.without_labels(),
            part,
            AlterParams(
                C=args.C,
                Cp=args.Cp,
                kernel=kcfg,
                restarts=args.restarts,
                seed=args.seed,
            ),
        )
    elif args.method == "conv":
        model = train_conv(
            data.without_labels(),
            part,
            ConvParams(C=args.C, eps=args.eps, kernel=kcfg),
        )
    else:
        model = train_invcal(
            data.without_labels(),
            part,
            InvCalParams(Cp=args.Cp, eps=args.eps, kernel=kcfg),
        )
    pred = model.predict(data.features)
    metrics = {
        "method": args.method,
        "objective": model.objective,
        "bag_error": bag_error(pred, part),
        "train_accuracy": instance_accuracy(pred, data.labels),
        "n": data.n,
        "n_bags": part.n_bags,
        "warnings": list(model.warnings),
    }
    if args.out:
        Path(args.out).write_text(model_to_json(model))
        metrics["model"] = args.out
    print(json.dumps(metrics, sort_keys=True, indent=2))
    return 0


def _cmd_bench(args) -> int:
    text = Path(args.config).read_text() if args.config else ""
    overrides = []
    for key in (
        "dataset",
        "method",
        "kernel",
        "gamma",
        "C",
        "Cp",
        "eps",
        "bag_size",
        "folds",
        "trials",
        "restarts",
        "seed",
        "jobs",
    ):
        val = getattr(args, key)
        if val is not None:
            overrides.append(f"{key} = {val}")
    if args.with_timings:
        overrides.append("with_timings = true")
    cfg = parse_config(text + "\n" + "\n".join(overrides))
    result = run_experiment(cfg)
    Path(args.out).write_text(result.to_json())
    if args.csv:
        Path(args.csv).write_text(result.to_csv())
    sys.stdout.write(result.to_csv())
    return 0


def _cmd_toy(args) -> int:
    cfg = ExperimentConfig(dataset="toy", trials=args.trials, seed=args.seed)
    result = run_experiment(cfg)
    if args.out:
        Path(args.out).write_text(result.to_json())
    for method, cells in result.aggregates.items():
        for _, cell in cells.items():
            print(f"{method}: accuracy {100 * cell['mean']:.1f}%")
    return 0


def _cmd_inspect(args) -> int:
    payload = json.loads(Path(args.report).read_text())
    try:
        result = ExperimentResult(
            config=payload["config"],
            records=tuple(payload["records"]),
            aggregates=payload["aggregates"],
        )
    except KeyError as exc:
        raise ConfigError(f"{args.report} is not an experiment report: {exc}")
    cfg = result.config
    print(
        f"dataset={cfg.get('dataset')} kernel={cfg.get('kernel')} "
        f"folds={cfg.get('folds')} trials={cfg.get('trials')} "
        f"seed={cfg.get('seed')} records={len(result.records)}"
    )
    accs = [r["accuracy"] for r in result.records]
    if accs:
        print(
            f"fold accuracies: min {100 * min(accs):.2f} "
            f"median {100 * float(np.median(accs)):.2f} "
            f"max {100 * max(accs):.2f}"
        )
    sys.stdout.write(result.to_csv())
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
