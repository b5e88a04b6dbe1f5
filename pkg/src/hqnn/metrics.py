"""Regression metrics: MAE, RMSE, MSE, Pearson R, regression SD and concordance index."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np


def _pair(y, p, min_n: int = 1) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    p = np.asarray(p, dtype=float).reshape(-1)
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.size} targets, {p.size} predictions")
    if y.size < min_n:
        raise ValueError(f"need at least {min_n} samples, got {y.size}")
    return y, p


def mse(y, p) -> float:
    y, p = _pair(y, p)
    return float(np.mean((y - p) ** 2))


def rmse(y, p) -> float:
    return math.sqrt(mse(y, p))


def mae(y, p) -> float:
    y, p = _pair(y, p)
    return float(np.mean(np.abs(y - p)))


def pearson_r(y, p) -> float:
    y, p = _pair(y, p, 2)
    dy, dp = y - y.mean(), p - p.mean()
    denom = math.sqrt(float(np.sum(dy * dy)) * float(np.sum(dp * dp)))
    if denom == 0:
        raise ValueError("Pearson R is undefined for a constant vector")
    return float(np.clip(np.sum(dy * dp) / denom, -1.0, 1.0))


def regression_sd(y, p) -> float:
    """Residual spread of ``y`` around its least-squares line on ``p``, with ``N - 1`` in the denominator."""
    y, p = _pair(y, p, 3)
    dp = p - p.mean()
    spp = float(np.sum(dp * dp))
    if spp == 0:
        raise ValueError("regression SD is undefined for constant predictions")
    slope = float(np.sum(dp * (y - y.mean()))) / spp
    intercept = y.mean() - slope * p.mean()
    resid = y - (slope * p + intercept)
    return math.sqrt(float(np.sum(resid * resid)) / (y.size - 1))


def concordance_index(y, p) -> float:
    """Fraction of pairs with ``y_i > y_j`` ordered the same way by ``p``; prediction ties count 1/2.

    Pairs with tied targets are skipped.
    """
    y, p = _pair(y, p, 2)
    order = np.argsort(y, kind="stable")
    y, p = y[order], p[order]
    # O(N^2) in blocks; fine for test-set sizes
    hits = 0.0
    pairs = 0
    block = 2048
    for start in range(0, y.size, block):
        yi, pi = y[start : start + block, None], p[start : start + block, None]
        above = yi > y[None, :]
        diff = pi - p[None, :]
        pairs += int(above.sum())
        hits += float(np.sum(above & (diff > 0))) + 0.5 * float(np.sum(above & (diff == 0)))
    if pairs == 0:
        raise ValueError("concordance index needs at least two distinct targets")
    return hits / pairs


@dataclass(frozen=True)
class MetricReport:
    mae: float
    rmse: float
    pearson_r: float
    sd: float
    ci: float
    mse: float
    n: int

    def __post_init__(self):
        for name in ("mae", "rmse", "sd", "mse"):
            val = getattr(self, name)
            if not (val >= 0 or math.isnan(val)):
                raise ValueError(f"{name} must be non-negative")
        if not (0 <= self.ci <= 1 or math.isnan(self.ci)):
            raise ValueError("ci must lie in [0, 1]")
        if not (-1 <= self.pearson_r <= 1 or math.isnan(self.pearson_r)):
            raise ValueError("pearson_r must lie in [-1, 1]")

    @classmethod
    def compute(cls, y, p) -> "MetricReport":
        """All metrics at once; the ones undefined for the given data come back as NaN."""
        y, p = _pair(y, p)

        def safe(fn):
            try:
                return fn(y, p)
            except ValueError:
                return math.nan

        return cls(mae(y, p), rmse(y, p), safe(pearson_r), safe(regression_sd), safe(concordance_index), mse(y, p), int(y.size))

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_row(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v) for v in asdict(self).values()]

    @classmethod
    def from_row(cls, row) -> "MetricReport":
        vals = dict(zip(cls.columns(), row)) if not isinstance(row, dict) else row
        return cls(**{k: (int(vals[k]) if k == "n" else float(vals[k])) for k in cls.columns()})

    from_dict = from_row
