"""Deterministic synthetic series: trend + sinusoids + Gaussian noise.

Noise uses a counter-based generator that is easy to reproduce in any
language: uniforms come from the SplitMix64 finalizer applied to
``key + GAMMA * i`` (64-bit wrapping arithmetic), where ``i`` counts
draws within a channel and the channel key is
``splitmix64(seed + GAMMA * (c + 1))``. The top 53 bits give
``u = ((x >> 11) + 0.5) / 2**53`` in (0, 1), and each normal sample takes
draws 2t and 2t+1 through Box-Muller:
``z = sqrt(-2 ln u1) * cos(2 pi u2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .errors import InvalidArgumentError
from .series import TimeSeries

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 output function, elementwise on uint64 (wrapping)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x.copy()
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def uniforms(seed: int, channel: int, n: int) -> np.ndarray:
    """``n`` uniforms in (0, 1) for one (seed, channel) stream."""
    with np.errstate(over="ignore"):
        base = np.uint64(seed & _MASK64) + GAMMA * np.uint64(channel + 1)
        key = splitmix64(np.array([base], dtype=np.uint64))[0]
        counters = key + GAMMA * np.arange(n, dtype=np.uint64)
    bits = splitmix64(counters) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def gaussian(seed: int, channel: int, n: int) -> np.ndarray:
    u = uniforms(seed, channel, 2 * n)
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class SynthSpec:
    length: int
    channels: int = 1
    trend: dict = field(default_factory=lambda: {"kind": "none"})
    seasonal: tuple[tuple[float, float, float], ...] = ()
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length < 1 or self.channels < 1:
            raise InvalidArgumentError("length and channels must be >= 1")
        if self.noise_std < 0:
            raise InvalidArgumentError("noise_std must be non-negative")
        seasonal = tuple(tuple(float(v) for v in s) for s in self.seasonal)
        for s in seasonal:
            if len(s) != 3:
                raise InvalidArgumentError(f"seasonal terms are (amplitude, period, phase), got {s}")
            if s[1] < 2:
                raise InvalidArgumentError(f"period must be >= 2, got {s[1]}")
        object.__setattr__(self, "seasonal", seasonal)
        kind = self.trend.get("kind", "none")
        if kind == "linear":
            float(self.trend["slope"])
        elif kind == "piecewise":
            breaks, slopes = self.trend.get("breaks", []), self.trend.get("slopes", [])
            if len(slopes) != len(breaks) + 1:
                raise InvalidArgumentError("piecewise trend needs len(slopes) == len(breaks) + 1")
            if list(breaks) != sorted(breaks):
                raise InvalidArgumentError("piecewise breaks must be increasing")
        elif kind != "none":
            raise InvalidArgumentError(f"unknown trend kind {kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> SynthSpec:
        d = dict(d)
        d["seasonal"] = tuple(tuple(s) for s in d.get("seasonal", ()))
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seasonal"] = [list(s) for s in self.seasonal]
        return d


def trend_values(trend: dict, t: np.ndarray) -> np.ndarray:
    kind = trend.get("kind", "none")
    if kind == "none":
        return np.zeros(t.shape)
    if kind == "linear":
        return float(trend["slope"]) * t
    # continuous piecewise-linear through the origin
    breaks = [0.0] + [float(b) for b in trend["breaks"]]
    slopes = [float(s) for s in trend["slopes"]]
    out = np.zeros(t.shape)
    for i, s in enumerate(slopes):
        lo = breaks[i]
        hi = breaks[i + 1] if i + 1 < len(breaks) else math.inf
        out += s * (np.clip(t, lo, hi) - lo)
    return out


def generate(spec: SynthSpec, start: str = "2016-07-01 00:00:00", step_minutes: int = 60) -> TimeSeries:
    t = np.arange(spec.length, dtype=np.float64)
    base = trend_values(spec.trend, t)
    for amp, period, phase in spec.seasonal:
        base = base + amp * np.sin(2.0 * np.pi * t / period + phase)
    cols = []
    for c in range(spec.channels):
        col = base.copy()
        if spec.noise_std > 0:
            col += spec.noise_std * gaussian(spec.seed, c, spec.length)
        cols.append(col)
    t0 = datetime.fromisoformat(start)
    stamps = [(t0 + timedelta(minutes=step_minutes * i)).strftime("%Y-%m-%d %H:%M:%S") for i in range(spec.length)]
    names = ["OT"] if spec.channels == 1 else [f"x{c}" for c in range(spec.channels)]
    return TimeSeries(np.column_stack(cols), names, stamps)


def load_spec(path) -> SynthSpec:
    with open(path) as fh:
        return SynthSpec.from_dict(json.load(fh))
