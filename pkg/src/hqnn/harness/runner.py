"""Seeded multi-run experiments, sweeps, and their on-disk layout.

Layout under ``output_dir``::

    run-<seed>/trace.csv      epoch, train_mse, test_mse
    run-<seed>/summary.json   config echo, seed, parameter counts, metrics
    runs.csv                  one MetricReport row per successful run
    aggregate.json            mean and std over successful runs
    sweep.csv                 one row per sweep cell

Floats are written with ``repr`` so every file reads back to the exact
in-memory values.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ..circuit_metrics import BlockFamily, SamplingPlan, entangling_capability, expressibility
from ..embedding import Embedding
from ..metrics import MetricReport
from ..noise import Channel, Insertion, NoiseModel
from ..training import EpochRecord, TrainingDiverged, mse_loss, train
from .complexity import complexity_report
from .datasets import Dataset, DatasetSpec, TargetFunction, make_dataset, read_csv
from .models import ExperimentSpec, Task, build_model

log = logging.getLogger(__name__)

TRACE_COLUMNS = ["epoch", "train_mse", "test_mse"]


def load_dataset(spec: ExperimentSpec, seed: int) -> Dataset:
    if spec.task is Task.CUSTOM_CSV:
        ds = read_csv(spec.data_path)
        if ds.n_inputs != spec.n_inputs:
            raise ValueError(f"{spec.data_path} has {ds.n_inputs} input columns, spec says {spec.n_inputs}")
        return ds
    fn = TargetFunction.DAMPED_SINC_1D if spec.task is Task.UNIVARIATE else TargetFunction.DAMPED_SINC_2D
    return make_dataset(DatasetSpec(fn, seed=seed))


@dataclass
class RunResult:
    seed: int
    status: str
    trace: list[EpochRecord] = field(default_factory=list)
    report: MetricReport | None = None
    train_mse: float = math.nan
    n_classical: int = 0
    n_quantum: int = 0
    error: str = ""
    model: object = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_single(spec: ExperimentSpec, seed: int) -> RunResult:
    """Train one model on the dataset drawn with ``seed``; divergence is captured, not raised."""
    spec = spec.with_seed(seed)
    ds = load_dataset(spec, seed)
    model = build_model(spec, seed)
    try:
        result = train(model, ds.train, spec.train, ds.test if len(ds.y_test) else None)
    except (TrainingDiverged, FloatingPointError) as exc:
        return RunResult(seed, "failed", error=str(exc), n_classical=model.n_classical, n_quantum=model.n_quantum)
    trained = result.model
    report = MetricReport.compute(ds.y_test, trained.predict(ds.x_test)) if len(ds.y_test) else None
    return RunResult(
        seed,
        "ok",
        result.trace,
        report,
        result.best_train_mse,
        model.n_classical,
        model.n_quantum,
        model=trained,
    )


def _map(fn, args: Sequence, jobs: int):
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args)))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _num(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_trace(path: Path, trace: Iterable[EpochRecord]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([r.epoch, _num(r.train_mse), _num(r.test_mse)])


def read_trace(path) -> list[EpochRecord]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [EpochRecord(int(r["epoch"]), float(r["train_mse"]), float(r["test_mse"])) for r in csv.DictReader(fh)]


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_num(v) for v in row])


def run_summary(spec: ExperimentSpec, run: RunResult) -> dict:
    return {
        "config": spec.with_seed(run.seed).to_dict(),
        "seed": run.seed,
        "status": run.status,
        "error": run.error,
        "parameters": {"classical": run.n_classical, "quantum": run.n_quantum},
        "train_mse": run.train_mse,
        "test_metrics": None if run.report is None else run.report.to_dict(),
    }


def save_run(out: Path, spec: ExperimentSpec, run: RunResult) -> None:
    d = out / f"run-{run.seed}"
    d.mkdir(parents=True, exist_ok=True)
    write_trace(d / "trace.csv", run.trace)
    write_json(d / "summary.json", run_summary(spec, run))


def load_run_report(run_dir) -> MetricReport | None:
    data = json.loads((Path(run_dir) / "summary.json").read_text(encoding="utf-8"))
    return None if data["test_metrics"] is None else MetricReport.from_dict(data["test_metrics"])


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class Aggregate:
    spec: ExperimentSpec
    runs: list[RunResult]

    @property
    def ok_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.ok and r.report is not None]

    def stat(self, metric: str) -> tuple[float, float]:
        vals = [getattr(r.report, metric) for r in self.ok_runs]
        if not vals:
            return math.nan, math.nan
        return float(np.mean(vals)), float(np.std(vals))

    def to_dict(self) -> dict:
        metrics = {}
        for name in MetricReport.columns():
            if name == "n":
                continue
            mean, std = self.stat(name)
            metrics[name] = {"mean": mean, "std": std}
        return {
            "config": self.spec.to_dict(),
            "complexity": complexity_report(self.spec).to_dict(),
            "seeds": [r.seed for r in self.runs],
            "failed": {str(r.seed): r.error for r in self.runs if not r.ok},
            "n_ok": len(self.ok_runs),
            "test_metrics": metrics,
        }


def run_seeds(spec: ExperimentSpec) -> list[int]:
    return [spec.train.seed + i for i in range(spec.train.repeats)]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> Aggregate:
    """``spec.train.repeats`` seeded runs; writes files when ``spec.output_dir`` is set."""
    runs = _map(run_single, [(spec, s) for s in run_seeds(spec)], jobs)
    agg = Aggregate(spec, runs)
    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for run in runs:
            save_run(out, spec, run)
        write_rows(out / "runs.csv", ["seed"] + MetricReport.columns(), ([r.seed, *r.report.to_row()] for r in agg.ok_runs))
        write_json(out / "aggregate.json", agg.to_dict())
    for r in runs:
        if not r.ok:
            log.warning("run %d failed: %s", r.seed, r.error)
    return agg


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

class SweepKind(enum.Enum):
    LAYERS_QUBITS_METRICS = "layers_qubits_metrics"
    NOISE = "noise"
    EMBEDDING = "embedding"


METRIC_COLUMNS = ["qubits", "layers", "metric", "mean", "std", "n_samples", "n_bins", "seed"]
NOISE_COLUMNS = ["channel", "rate", "insertion", "test_mse", "seed"]
EMBEDDING_COLUMNS = [
    "embedding", "qubits", "layers", "classical_params", "quantum_params",
    "circuit_depth", "test_mse_mean", "test_mse_std", "n_ok",
]


def _metric_cell(n: int, L: int, plan: SamplingPlan, range_r: int) -> list[list]:
    fam = BlockFamily(n, L, range_r=range_r if n > 1 else 1)
    rows = []
    for name, fn in (("entangling_capability", entangling_capability), ("expressibility_kl", expressibility)):
        mean, std = fn(fam, plan)
        rows.append([n, L, name, mean, std, plan.n_samples, plan.n_bins, plan.seed])
    return rows


def noise_rows(model, dataset: Dataset, channels: Sequence[Channel], rates: Sequence[float],
               insertion: Insertion = Insertion.AFTER_EACH_GATE, seed: int = 0) -> list[list]:
    """Test MSE of an already trained hybrid model with each channel and rate switched on."""
    rows = []
    for ch in channels:
        for rate in rates:
            probe = model.copy()
            probe.noise = NoiseModel(ch, rate, insertion)
            rows.append([ch.value, float(rate), insertion.value, mse_loss(probe.predict(dataset.x_test), dataset.y_test), seed])
    return rows


def sweep(kind: SweepKind, grid: dict, base: ExperimentSpec, jobs: int = 1,
          plan: SamplingPlan | None = None) -> tuple[list[str], list[list]]:
    """Run every cell of ``grid`` and return ``(columns, rows)``; writes ``sweep.csv`` if ``base.output_dir`` is set.

    Grid keys: ``qubits``/``layers`` for metric sweeps, ``channels``/``rates``
    (and optional ``insertion``) for noise sweeps, ``embeddings``/``layers``
    for embedding sweeps.
    """
    kind = SweepKind(kind)
    if not grid or any(len(v) == 0 for v in grid.values() if isinstance(v, (list, tuple))):
        raise ValueError("empty sweep grid")
    if kind is SweepKind.LAYERS_QUBITS_METRICS:
        plan = plan or SamplingPlan(seed=base.train.seed)
        cells = [(n, L, plan, base.range_r) for n, L in itertools.product(grid["qubits"], grid["layers"])]
        columns = METRIC_COLUMNS
        rows = [row for cell in _map(_metric_cell, cells, jobs) for row in cell]
    elif kind is SweepKind.NOISE:
        seed = base.train.seed
        run = run_single(replace(base, noise=NoiseModel()), seed)
        if not run.ok:
            raise TrainingDiverged(f"noiseless training failed: {run.error}")
        channels = [Channel(c) for c in grid["channels"]]
        insertion = Insertion(grid.get("insertion", Insertion.AFTER_EACH_GATE))
        columns = NOISE_COLUMNS
        rows = noise_rows(run.model, load_dataset(base, seed), channels, grid["rates"], insertion, seed)
    else:
        columns = EMBEDDING_COLUMNS
        rows = []
        for emb, L in itertools.product(grid["embeddings"], grid["layers"]):
            spec = replace(base, embedding=Embedding(emb), n_layers=L, output_dir=None)
            agg = run_experiment(spec, jobs)
            rep = complexity_report(spec)
            mean, std = agg.stat("mse")
            rows.append([spec.embedding.value, spec.n_qubits, L, rep.classical_param_count,
                         rep.quantum_param_count, rep.circuit_depth, mean, std, len(agg.ok_runs)])
    if base.output_dir is not None:
        out = Path(base.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "sweep.csv", columns, rows)
    return columns, rows
