"""CSV ingestion, benchmark splits, standardization and window extraction."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    CellParseError,
    ConfigurationError,
    InvalidArgumentError,
    InvalidDataError,
    LoadError,
    MissingFileError,
    ZeroVarianceError,
)
from .series import DEFAULT_KERNEL, TimeSeries, check_kernel, decompose_array

SPLIT_MODES = ("ett_hourly", "ett_minute", "ratio")
TARGET_MODES = ("window", "series")
DATE_HEADERS = ("date", "datetime", "timestamp", "time")

# 12/4/4 months of hourly rows
_ETT_HOURLY_BORDERS = (12 * 30 * 24, 16 * 30 * 24, 20 * 30 * 24)


def load_csv(path, date_column: str | None = None, *, reject_constant: bool = True) -> TimeSeries:
    """Read a header-first CSV into a TimeSeries.

    When ``date_column`` is None, a leading column named like a date
    ("date", "timestamp", ...) is treated as the timestamp column.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise LoadError(f"{path}: empty file") from None
        rows = [r for r in reader if r]

    if date_column is None and header and header[0].lower() in DATE_HEADERS:
        date_column = header[0]
    date_idx = None
    if date_column is not None:
        if date_column not in header:
            raise LoadError(f"{path}: date column {date_column!r} not in header")
        date_idx = header.index(date_column)
    value_idx = [i for i in range(len(header)) if i != date_idx]
    if not value_idx:
        raise LoadError(f"{path}: no value columns")
    if len(rows) < 2:
        raise LoadError(f"{path}: need at least 2 data rows, found {len(rows)}")

    values = np.empty((len(rows), len(value_idx)), dtype=np.float64)
    stamps = [] if date_idx is not None else None
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise LoadError(f"{path}: row {r + 1} has {len(row)} fields, header has {len(header)}")
        for j, i in enumerate(value_idx):
            cell = row[i]
            try:
                v = float(cell)
            except ValueError:
                raise CellParseError(r + 1, header[i], cell) from None
            if not math.isfinite(v):
                raise CellParseError(r + 1, header[i], cell)
            values[r, j] = v
        if stamps is not None:
            stamps.append(row[date_idx])

    names = tuple(header[i] for i in value_idx)
    if reject_constant:
        flat = np.ptp(values, axis=0) == 0
        if flat.any():
            raise ZeroVarianceError(names[int(np.argmax(flat))])
    return TimeSeries(values, names, stamps)


def write_csv(path, series: TimeSeries, columns: dict[str, np.ndarray] | None = None) -> None:
    """Write ``series`` (or explicit named columns) in the format load_csv reads."""
    if columns is None:
        columns = {n: series.values[:, i] for i, n in enumerate(series.channel_names)}
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=np.float64) for n in names])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((["date"] if series.timestamps is not None else []) + names)
        for t in range(data.shape[0]):
            row = [repr(float(v)) for v in data[t]]
            if series.timestamps is not None:
                row.insert(0, series.timestamps[t])
            w.writerow(row)


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "ett_hourly"
    input_length: int = 96
    horizon: int = 96
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)

    def __post_init__(self):
        if self.mode not in SPLIT_MODES:
            raise ConfigurationError(f"split mode must be one of {SPLIT_MODES}, got {self.mode!r}")
        if self.input_length < 1 or self.horizon < 1:
            raise ConfigurationError("input_length and horizon must be >= 1")
        ratios = tuple(float(r) for r in self.ratios)
        if len(ratios) != 3 or any(r < 0 for r in ratios):
            raise ConfigurationError("ratios must be three non-negative reals")
        if self.mode == "ratio" and abs(sum(ratios) - 1.0) > 1e-12:
            raise ConfigurationError(f"ratios must sum to 1, got {sum(ratios)!r}")
        object.__setattr__(self, "ratios", ratios)


class Segments(NamedTuple):
    train: tuple[int, int]
    val: tuple[int, int]
    test: tuple[int, int]


def split(series: TimeSeries | int, spec: SplitSpec) -> Segments:
    """Row ranges [start, end) of the train, validation and test segments.

    Validation and test segments start ``input_length`` rows early so
    their first window has a full input of preceding context.
    """
    n = series if isinstance(series, int) else series.length
    L = spec.input_length
    if spec.mode in ("ett_hourly", "ett_minute"):
        scale = 1 if spec.mode == "ett_hourly" else 4
        b1, b2, b3 = (b * scale for b in _ETT_HOURLY_BORDERS)
        if n < b3:
            raise ConfigurationError(f"{spec.mode} split needs at least {b3} rows, series has {n}")
        segs = Segments((0, b1), (b1 - L, b2), (b2 - L, b3))
    else:
        n_train = math.floor(spec.ratios[0] * n)
        n_test = math.floor(spec.ratios[2] * n)
        n_val = n - n_train - n_test
        segs = Segments(
            (0, n_train),
            (max(n_train - L, 0), n_train + n_val),
            (max(n - n_test - L, 0), n),
        )
    need = L + spec.horizon
    for name, (a, b) in zip(Segments._fields, segs):
        if b - a < need:
            raise ConfigurationError(
                f"{name} segment has {b - a} rows, fewer than input_length + horizon = {need}"
            )
    return segs


def window_count(segment: tuple[int, int], input_length: int, horizon: int) -> int:
    return segment[1] - segment[0] - input_length - horizon + 1


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, series: TimeSeries) -> TimeSeries:
        return TimeSeries((series.values - self.mean) / self.std, series.channel_names, series.timestamps)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


def fit_standardizer(series: TimeSeries, train_range: tuple[int, int]) -> StandardizationStats:
    """Per-channel mean and population std over the training rows only."""
    a, b = train_range
    if not 0 <= a < b <= series.length:
        raise InvalidArgumentError(f"bad train range {train_range} for series of length {series.length}")
    rows = series.values[a:b]
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    for c, s in enumerate(std):
        if not s > 0:
            raise ZeroVarianceError(series.channel_names[c])
    return StandardizationStats(mean, std)


@dataclass(frozen=True)
class WindowBatch:
    """Aligned supervised windows: inputs N x L x C, the rest N x H x C."""

    inputs: np.ndarray
    targets: np.ndarray
    targets_seasonal: np.ndarray
    targets_trend: np.ndarray

    def __post_init__(self):
        n, _, c = self.inputs.shape
        for name in ("targets", "targets_seasonal", "targets_trend"):
            a = getattr(self, name)
            if a.ndim != 3 or a.shape[0] != n or a.shape[2] != c:
                raise InvalidArgumentError(f"{name} shape {a.shape} inconsistent with inputs {self.inputs.shape}")
        if self.targets_seasonal.shape != self.targets.shape or self.targets_trend.shape != self.targets.shape:
            raise InvalidArgumentError("target sub-series must match targets in shape")
        if n < 1:
            raise InvalidArgumentError("a WindowBatch needs at least one window")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    def take(self, idx) -> WindowBatch:
        return WindowBatch(self.inputs[idx], self.targets[idx], self.targets_seasonal[idx], self.targets_trend[idx])


class WindowSource:
    """Stride-1 windows over one segment, materialized on demand.

    Long horizons make the full N x H x C target tensors large, so
    windows are cut and their targets decomposed per requested batch.
    With ``target_mode="series"`` the target sub-series are sliced from
    a decomposition of the whole segment instead of each target window.
    """

    def __init__(self, values: np.ndarray, segment: tuple[int, int], input_length: int, horizon: int,
                 kernel: int = DEFAULT_KERNEL, target_mode: str = "window"):
        if target_mode not in TARGET_MODES:
            raise ConfigurationError(f"target_mode must be one of {TARGET_MODES}, got {target_mode!r}")
        self.kernel = check_kernel(kernel)
        self.input_length = int(input_length)
        self.horizon = int(horizon)
        self.target_mode = target_mode
        a, b = segment
        values = np.asarray(values, dtype=np.float64)
        if self.input_length < 1 or self.horizon < 1:
            raise ConfigurationError("input_length and horizon must be >= 1")
        if b - a < self.input_length + self.horizon:
            raise ConfigurationError(
                f"segment of {b - a} rows is shorter than input_length + horizon = {self.input_length + self.horizon}"
            )
        self.values = np.ascontiguousarray(values[a:b])
        self._n = window_count(segment, self.input_length, self.horizon)
        if target_mode == "series":
            self._seasonal, self._trend = decompose_array(self.values, self.kernel)

    def __len__(self) -> int:
        return self._n

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def _cut(self, arr: np.ndarray, starts: np.ndarray, offset: int, length: int) -> np.ndarray:
        return arr[starts[:, None] + offset + np.arange(length)[None, :]]

    def take(self, idx) -> WindowBatch:
        starts = np.arange(self._n)[idx]
        starts = np.atleast_1d(starts)
        L, H = self.input_length, self.horizon
        inputs = self._cut(self.values, starts, 0, L)
        targets = self._cut(self.values, starts, L, H)
        if self.target_mode == "window":
            ts, tt = decompose_array(targets, self.kernel)
        else:
            ts = self._cut(self._seasonal, starts, L, H)
            tt = targets - ts
        return WindowBatch(inputs, targets, ts, tt)

    def all(self) -> WindowBatch:
        return self.take(slice(None))


def make_windows(series: TimeSeries, segment: tuple[int, int], input_length: int, horizon: int,
                 kernel: int = DEFAULT_KERNEL, target_mode: str = "window") -> WindowBatch:
    """All stride-1 windows of ``segment`` with decomposed targets."""
    return WindowSource(series.values, segment, input_length, horizon, kernel, target_mode).all()


@dataclass
class PreparedData:
    series: TimeSeries
    stats: StandardizationStats
    segments: Segments
    train: WindowSource
    val: WindowSource
    test: WindowSource


def prepare(series: TimeSeries, spec: SplitSpec, kernel: int = DEFAULT_KERNEL,
            target_mode: str = "window") -> PreparedData:
    """Split, standardize on the training rows, and build window sources."""
    segs = split(series, spec)
    stats = fit_standardizer(series, segs.train)
    z = stats.transform(series)
    src = [WindowSource(z.values, s, spec.input_length, spec.horizon, kernel, target_mode) for s in segs]
    return PreparedData(z, stats, segs, *src)


def concat_batches(batches: Sequence[WindowBatch]) -> WindowBatch:
    if not batches:
        raise InvalidDataError("nothing to concatenate")
    return WindowBatch(*(np.concatenate([getattr(b, f) for b in batches]) for f in
                         ("inputs", "targets", "targets_seasonal", "targets_trend")))
