"""Time-series value types and sliding-window seasonal/trend decomposition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidDataError
from .kernels import moving_average_3d

DEFAULT_KERNEL = 25


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """A T x C matrix of finite observations with channel names."""

    values: np.ndarray
    channel_names: tuple[str, ...] = ()
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidArgumentError(f"values must be a non-empty T x C matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidDataError(f"non-finite value at row {bad[0]}, channel {bad[1]}")
        names = tuple(self.channel_names) or tuple(f"ch{i}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise InvalidArgumentError(f"{len(names)} channel names for {values.shape[1]} channels")
        stamps = None if self.timestamps is None else tuple(self.timestamps)
        if stamps is not None and len(stamps) != values.shape[0]:
            raise InvalidArgumentError(f"{len(stamps)} timestamps for {values.shape[0]} rows")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "timestamps", stamps)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class DecompositionPair:
    seasonal: np.ndarray
    trend: np.ndarray
    kernel: int = field(default=DEFAULT_KERNEL)

    def __post_init__(self):
        s = np.asarray(self.seasonal, dtype=np.float64)
        t = np.asarray(self.trend, dtype=np.float64)
        if s.shape != t.shape:
            raise InvalidArgumentError(f"seasonal shape {s.shape} != trend shape {t.shape}")
        object.__setattr__(self, "seasonal", _frozen(s))
        object.__setattr__(self, "trend", _frozen(t))


def check_kernel(kernel: int) -> int:
    if isinstance(kernel, bool) or int(kernel) != kernel or kernel < 1 or kernel % 2 == 0:
        raise InvalidArgumentError(f"kernel must be a positive odd integer, got {kernel!r}")
    return int(kernel)


def decompose_array(x: np.ndarray, kernel: int = DEFAULT_KERNEL) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x`` into (seasonal, trend) along its time axis.

    ``x`` is (T,), (T, C) or (N, T, C); the time axis is the second to
    last for 2-D and 3-D input. Channels and leading batch entries are
    processed independently.
    """
    kernel = check_kernel(kernel)
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidDataError("cannot decompose non-finite values")
    if x.ndim == 1:
        x3 = x[None, :, None]
    elif x.ndim == 2:
        x3 = x[None]
    elif x.ndim == 3:
        x3 = x
    else:
        raise InvalidArgumentError(f"expected 1-3 dimensions, got {x.ndim}")
    trend = moving_average_3d(x3, kernel).reshape(x.shape)
    return x - trend, trend


def moving_average_decompose(series: TimeSeries, kernel: int = DEFAULT_KERNEL) -> DecompositionPair:
    """Decompose ``series`` into seasonal and trend sub-series.

    The trend is a centered moving average of width ``kernel`` over the
    series padded at each end by replicating its boundary value; the
    seasonal part is the residual, so the two sum back to the source.
    """
    seasonal, trend = decompose_array(series.values, kernel)
    return DecompositionPair(seasonal=seasonal, trend=trend, kernel=kernel)


def reconstruct(pair: DecompositionPair, channel_names: Sequence[str] = (), timestamps=None) -> TimeSeries:
    if pair.seasonal.shape != pair.trend.shape:
        raise InvalidArgumentError("seasonal and trend shapes differ")
    return TimeSeries(pair.seasonal + pair.trend, tuple(channel_names), timestamps)
