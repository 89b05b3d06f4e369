"""MSE/MAE, overall and per decomposed sub-series."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dataset import WindowBatch
from .errors import InvalidArgumentError
from .model import ForecastOutput

METRIC_NAMES = ("overall_mse", "overall_mae", "seasonal_mse", "seasonal_mae", "trend_mse", "trend_mae")


def _residual(pred, target) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InvalidArgumentError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise InvalidArgumentError("empty input")
    return pred - target


def mse(pred, target) -> float:
    """Mean of squared residuals over every element (no square root)."""
    r = _residual(pred, target)
    return float(np.mean(r * r))


def mae(pred, target) -> float:
    return float(np.mean(np.abs(_residual(pred, target))))


@dataclass(frozen=True)
class MetricsReport:
    overall_mse: float
    overall_mae: float
    seasonal_mse: float
    seasonal_mae: float
    trend_mse: float
    trend_mae: float
    horizon: int
    n_windows: int

    def to_dict(self) -> dict:
        return asdict(self)


class MetricsAccumulator:
    """Streaming sums for the six metrics; reduction order is call order."""

    def __init__(self):
        self._sums = np.zeros(6)
        self._count = 0
        self._windows = 0
        self._horizon = None

    def add(self, output: ForecastOutput, batch: WindowBatch) -> None:
        if output.seasonal_pred.shape != batch.targets.shape:
            raise InvalidArgumentError(
                f"prediction shape {output.seasonal_pred.shape} != target shape {batch.targets.shape}")
        pairs = (
            (output.combined, batch.targets),
            (output.seasonal_pred, batch.targets_seasonal),
            (output.trend_pred, batch.targets_trend),
        )
        for k, (p, t) in enumerate(pairs):
            r = p - t
            self._sums[2 * k] += float(np.sum(r * r))
            self._sums[2 * k + 1] += float(np.sum(np.abs(r)))
        self._count += batch.targets.size
        self._windows += len(batch)
        self._horizon = batch.horizon

    def result(self) -> MetricsReport:
        if self._count == 0:
            raise InvalidArgumentError("no batches accumulated")
        vals = self._sums / self._count
        return MetricsReport(*(float(v) for v in vals), horizon=self._horizon, n_windows=self._windows)


def report(output: ForecastOutput, batch: WindowBatch) -> MetricsReport:
    if output.seasonal_pred.shape != batch.targets.shape:
        raise InvalidArgumentError(
            f"prediction shape {output.seasonal_pred.shape} != target shape {batch.targets.shape}")
    return MetricsReport(
        mse(output.combined, batch.targets),
        mae(output.combined, batch.targets),
        mse(output.seasonal_pred, batch.targets_seasonal),
        mae(output.seasonal_pred, batch.targets_seasonal),
        mse(output.trend_pred, batch.targets_trend),
        mae(output.trend_pred, batch.targets_trend),
        horizon=batch.horizon,
        n_windows=len(batch),
    )


def average_reports(reports: Sequence[MetricsReport]) -> dict:
    """Unweighted mean of each metric across reports (one per horizon)."""
    if not reports:
        raise InvalidArgumentError("no reports to average")
    out = {m: float(np.mean([getattr(r, m) for r in reports])) for m in METRIC_NAMES}
    out["horizons"] = [r.horizon for r in reports]
    return out
