"""Damped-sinc regression datasets and CSV round-tripping."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TargetFunction(enum.Enum):
    DAMPED_SINC_1D = "damped_sinc_1d"
    DAMPED_SINC_2D = "damped_sinc_2d"

    @property
    def n_inputs(self) -> int:
        return 1 if self is TargetFunction.DAMPED_SINC_1D else 2


def damped_sinc(x) -> np.ndarray:
    """``sum_j sin(5 x_j) / (5 x_j)`` over the last axis."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ValueError("damped sinc is evaluated on x > 0 only")
    return np.sum(np.sin(5 * x) / (5 * x), axis=-1)


@dataclass(frozen=True)
class DatasetSpec:
    function: TargetFunction = TargetFunction.DAMPED_SINC_1D
    n_train: int = 200
    n_test: int = 100
    low: float = 0.0
    high: float = 3.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "function", TargetFunction(self.function))
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("need at least one training sample")
        if not self.high > self.low:
            raise ValueError("empty sampling interval")


@dataclass(frozen=True)
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_inputs(self) -> int:
        return self.x_train.shape[1]

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x_train, self.y_train

    @property
    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x_test, self.y_test


def make_dataset(spec: DatasetSpec) -> Dataset:
    """Uniform samples on ``(low, high]`` per input, split into train/test without overlap."""
    rng = np.random.default_rng(spec.seed)
    total = spec.n_train + spec.n_test
    # high - U[0, width) lands in (low, high], which keeps x = 0 out
    x = spec.high - rng.uniform(0.0, spec.high - spec.low, size=(total, spec.function.n_inputs))
    y = damped_sinc(x)
    return Dataset(x[: spec.n_train], y[: spec.n_train], x[spec.n_train :], y[spec.n_train :])


def write_csv(path, ds: Dataset) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = ds.n_inputs
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(d)] + ["y", "split"])
        for split, xs, ys in (("train", ds.x_train, ds.y_train), ("test", ds.x_test, ds.y_test)):
            for row, target in zip(xs, ys):
                w.writerow([repr(float(v)) for v in row] + [repr(float(target)), split])


def read_csv(path) -> Dataset:
    """Load a CSV with columns ``x1..xd, y, split`` (split is ``train`` or ``test``)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        xcols = [c for c in cols if c.startswith("x")]
        if not xcols or "y" not in cols or "split" not in cols:
            raise ValueError(f"{path}: expected columns x1..xd, y, split; got {cols}")
        parts: dict[str, tuple[list, list]] = {"train": ([], []), "test": ([], [])}
        for i, row in enumerate(reader, start=2):
            split = row["split"].strip()
            if split not in parts:
                raise ValueError(f"{path}:{i}: unknown split {split!r}")
            parts[split][0].append([float(row[c]) for c in xcols])
            parts[split][1].append(float(row["y"]))
    if not parts["train"][0]:
        raise ValueError(f"{path}: no training rows")
    d = len(xcols)
    arr = lambda rows, shape: np.array(rows, dtype=float).reshape(shape)
    return Dataset(
        arr(parts["train"][0], (-1, d)),
        arr(parts["train"][1], (-1,)),
        arr(parts["test"][0], (-1, d)),
        arr(parts["test"][1], (-1,)),
    )
