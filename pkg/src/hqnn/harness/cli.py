"""Command-line entry point: ``hqnn <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..circuit_metrics import SamplingPlan
from ..embedding import Embedding
from ..noise import Channel, Insertion
from .audit import gradient_audit
from .complexity import complexity_report
from .config import load_config, merge, spec_from_config
from .datasets import DatasetSpec, TargetFunction, make_dataset, write_csv
from .models import ModelKind, Task
from .runner import SweepKind, run_experiment, sweep

NOISE_RATES = [0.0, 0.001, 0.01, 0.1, 0.2]


def _common(p: argparse.ArgumentParser, grid: bool = False) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--task", choices=[t.value for t in Task])
    p.add_argument("--model", choices=[m.value for m in ModelKind])
    p.add_argument("--embedding", choices=[e.value for e in Embedding])
    p.add_argument("--epochs", type=int)
    if grid:
        p.add_argument("--qubits", type=int, nargs="+")
        p.add_argument("--layers", type=int, nargs="+")
    else:
        p.add_argument("--qubits", type=int)
        p.add_argument("--layers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqnn", description="Hybrid quantum neural network experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="train and evaluate on a function-approximation task")
    _common(p)

    p = sub.add_parser("analyze", help="expressibility / entangling-capability sweep")
    _common(p, grid=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--runs", type=int)

    p = sub.add_parser("noise", help="train noiselessly, then evaluate under noise channels")
    _common(p)
    p.add_argument("--channel", choices=[c.value for c in Channel if c is not Channel.NONE], nargs="+")
    p.add_argument("--rate", type=float, nargs="+")
    p.add_argument("--insertion", choices=[i.value for i in Insertion])

    p = sub.add_parser("report", help="parameter, gate and depth accounting")
    _common(p)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit on random models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", type=int, default=50)
    p.add_argument("--tolerance", type=float, default=1e-5)

    p = sub.add_parser("dataset", help="write a damped-sinc dataset as CSV")
    p.add_argument("--task", choices=[Task.UNIVARIATE.value, Task.MULTIVARIATE.value], default="univariate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True)
    return parser


def _load(args, grid: bool = False) -> tuple:
    config = load_config(args.config) if args.config else {}
    overrides = {
        "experiment": {
            "task": args.task and Task(args.task),
            "model": args.model and ModelKind(args.model),
            "embedding": args.embedding and Embedding(args.embedding),
        },
        "train": {"seed": args.seed, "repeats": args.repeats, "epochs": args.epochs},
        "run": {"output_dir": args.output_dir, "jobs": args.jobs},
    }
    if not grid:
        overrides["experiment"].update(qubits=args.qubits, layers=args.layers)
    config = merge(config, overrides)
    return config, spec_from_config(config), config.get("run", {}).get("jobs", 1)


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_approx(args) -> int:
    _, spec, jobs = _load(args)
    agg = run_experiment(spec, jobs)
    summary = agg.to_dict()
    _print_json({"n_ok": summary["n_ok"], "failed": summary["failed"], "test_metrics": summary["test_metrics"]})
    return 0 if agg.ok_runs else 1


def cmd_analyze(args) -> int:
    config, spec, jobs = _load(args, grid=True)
    m = config.get("metrics", {})
    plan = SamplingPlan(
        n_samples=args.samples or m.get("n_samples", 1000),
        n_bins=args.bins or m.get("n_bins", 75),
        n_runs=args.runs or m.get("n_runs", 4),
        seed=spec.train.seed,
    )
    grid = {"qubits": args.qubits or [2, 4, 7, 9], "layers": args.layers or [1, 5, 10, 15, 20]}
    columns, rows = sweep(SweepKind.LAYERS_QUBITS_METRICS, grid, spec, jobs, plan)
    print(",".join(columns))
    for row in rows:
        print(",".join(str(v) for v in row))
    return 0


def cmd_noise(args) -> int:
    config, spec, jobs = _load(args)
    nz = config.get("noise", {})
    channels = args.channel or [Channel.DEPOLARIZING.value, Channel.AMPLITUDE_DAMPING.value]
    grid = {
        "channels": channels,
        "rates": args.rate or NOISE_RATES,
        "insertion": Insertion(args.insertion) if args.insertion else nz.get("insertion", Insertion.AFTER_EACH_GATE),
    }
    columns, rows = sweep(SweepKind.NOISE, grid, spec, jobs)
    print(",".join(columns))
    for row in rows:
        print(",".join(str(v) for v in row))
    return 0


def cmd_report(args) -> int:
    _, spec, _ = _load(args)
    _print_json(complexity_report(spec).to_dict())
    return 0


def cmd_gradcheck(args) -> int:
    res = gradient_audit(args.models, args.seed, tolerance=args.tolerance)
    print(f"models={res.n_models} shift_rel_err={res.max_shift_error:.3e} "
          f"hybrid_rel_err={res.max_hybrid_error:.3e} tol={res.tolerance:g} {'PASS' if res.passed else 'FAIL'}")
    return 0 if res.passed else 1


def cmd_dataset(args) -> int:
    fn = TargetFunction.DAMPED_SINC_1D if args.task == "univariate" else TargetFunction.DAMPED_SINC_2D
    write_csv(args.output, make_dataset(DatasetSpec(fn, seed=args.seed)))
    return 0


COMMANDS = {
    "approx": cmd_approx,
    "analyze": cmd_analyze,
    "noise": cmd_noise,
    "report": cmd_report,
    "gradcheck": cmd_gradcheck,
    "dataset": cmd_dataset,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"hqnn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
