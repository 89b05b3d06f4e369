"""DLinear-style forecaster: one linear map per decomposed stream."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .series import DEFAULT_KERNEL, check_kernel, decompose_array

PARAM_NAMES = ("seasonal_weight", "seasonal_bias", "trend_weight", "trend_bias")
CHECKPOINT_FORMAT = "decomploss.checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class LinearForecaster:
    """Parameters of the two-stream linear model.

    With ``share_channels`` the weights are H x L and biases length H;
    otherwise they carry a leading channel axis (C x H x L, C x H).
    """

    seasonal_weight: np.ndarray
    seasonal_bias: np.ndarray
    trend_weight: np.ndarray
    trend_bias: np.ndarray
    share_channels: bool = True
    kernel: int = DEFAULT_KERNEL

    def __post_init__(self):
        check_kernel(self.kernel)
        w = self.seasonal_weight
        expect_w = w.shape
        if w.ndim != (2 if self.share_channels else 3):
            raise InvalidArgumentError(f"seasonal_weight has shape {w.shape} for share_channels={self.share_channels}")
        expect_b = expect_w[:-1]
        if self.trend_weight.shape != expect_w:
            raise InvalidArgumentError(f"trend_weight shape {self.trend_weight.shape} != {expect_w}")
        for name in ("seasonal_bias", "trend_bias"):
            if getattr(self, name).shape != expect_b:
                raise InvalidArgumentError(f"{name} shape {getattr(self, name).shape} != {expect_b}")

    @property
    def input_length(self) -> int:
        return self.seasonal_weight.shape[-1]

    @property
    def horizon(self) -> int:
        return self.seasonal_weight.shape[-2]

    @property
    def n_channels(self) -> int | None:
        return None if self.share_channels else self.seasonal_weight.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def with_parameters(self, params: dict[str, np.ndarray]) -> LinearForecaster:
        return LinearForecaster(**{n: params[n] for n in PARAM_NAMES},
                                share_channels=self.share_channels, kernel=self.kernel)

    def copy(self) -> LinearForecaster:
        return self.with_parameters({n: a.copy() for n, a in self.parameters().items()})


@dataclass(frozen=True)
class ForecastOutput:
    """Per-stream predictions; ``combined`` is always their sum."""

    seasonal_pred: np.ndarray
    trend_pred: np.ndarray
    seasonal_input: np.ndarray | None = field(default=None, repr=False)
    trend_input: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.seasonal_pred.shape != self.trend_pred.shape:
            raise InvalidArgumentError("seasonal and trend predictions differ in shape")

    @property
    def combined(self) -> np.ndarray:
        return self.seasonal_pred + self.trend_pred


@dataclass(frozen=True)
class GradientSet:
    seasonal_weight: np.ndarray
    seasonal_bias: np.ndarray
    trend_weight: np.ndarray
    trend_bias: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.as_dict().values())))


@dataclass(frozen=True)
class StreamGradients:
    """dLoss/d(prediction) per stream, each N x H x C.

    ``combined`` is the gradient with respect to the summed forecast; it
    flows unchanged into both streams.
    """

    seasonal: np.ndarray
    trend: np.ndarray
    combined: np.ndarray | None = None

    def folded(self) -> tuple[np.ndarray, np.ndarray]:
        if self.combined is None:
            return self.seasonal, self.trend
        return self.seasonal + self.combined, self.trend + self.combined


def init(input_length: int, horizon: int, n_channels: int = 1, share_channels: bool = True,
         seed: int | None = None, scheme: str = "uniform", kernel: int = DEFAULT_KERNEL) -> LinearForecaster:
    """Create a model.

    ``scheme="uniform"`` sets every weight to 1/L (a moving-average
    predictor) and is deterministic; ``scheme="random"`` draws from
    U(-1/sqrt(L), 1/sqrt(L)) with a generator seeded by ``seed``.
    Biases start at zero either way.
    """
    L, H, C = int(input_length), int(horizon), int(n_channels)
    if L < 1 or H < 1 or C < 1:
        raise InvalidArgumentError(f"dimensions must be positive, got L={L}, H={H}, C={C}")
    wshape = (H, L) if share_channels else (C, H, L)
    bshape = wshape[:-1]
    if scheme == "uniform":
        ws = np.full(wshape, 1.0 / L)
        wt = np.full(wshape, 1.0 / L)
    elif scheme == "random":
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(L)
        ws = rng.uniform(-bound, bound, wshape)
        wt = rng.uniform(-bound, bound, wshape)
    else:
        raise InvalidArgumentError(f"unknown init scheme {scheme!r}")
    return LinearForecaster(ws, np.zeros(bshape), wt, np.zeros(bshape), bool(share_channels), check_kernel(kernel))


def _check_inputs(model: LinearForecaster, inputs: np.ndarray) -> None:
    if inputs.ndim != 3 or inputs.shape[1] != model.input_length:
        raise InvalidArgumentError(
            f"inputs must be N x {model.input_length} x C, got shape {inputs.shape}")
    if not model.share_channels and inputs.shape[2] != model.n_channels:
        raise InvalidArgumentError(f"model has {model.n_channels} channels, inputs have {inputs.shape[2]}")


def _apply(weight: np.ndarray, bias: np.ndarray, x: np.ndarray, shared: bool) -> np.ndarray:
    # x: N x L x C -> N x H x C
    if shared:
        return np.einsum("hl,nlc->nhc", weight, x, optimize=True) + bias[None, :, None]
    return np.einsum("chl,nlc->nhc", weight, x, optimize=True) + bias.T[None, :, :]


def forward(model: LinearForecaster, inputs: np.ndarray, kernel: int | None = None) -> ForecastOutput:
    inputs = np.asarray(inputs, dtype=np.float64)
    _check_inputs(model, inputs)
    s_in, t_in = decompose_array(inputs, model.kernel if kernel is None else kernel)
    sp = _apply(model.seasonal_weight, model.seasonal_bias, s_in, model.share_channels)
    tp = _apply(model.trend_weight, model.trend_bias, t_in, model.share_channels)
    return ForecastOutput(sp, tp, s_in, t_in)


def backward(model: LinearForecaster, inputs: np.ndarray, output: ForecastOutput,
             loss_grads: StreamGradients) -> GradientSet:
    """Parameter gradients given dLoss/d(prediction) for each stream."""
    gs, gt = loss_grads.folded()
    if gs.shape != output.seasonal_pred.shape or gt.shape != output.trend_pred.shape:
        raise InvalidArgumentError(
            f"loss gradient shapes {gs.shape}/{gt.shape} do not match predictions {output.seasonal_pred.shape}")
    s_in, t_in = output.seasonal_input, output.trend_input
    if s_in is None or t_in is None:
        inputs = np.asarray(inputs, dtype=np.float64)
        _check_inputs(model, inputs)
        s_in, t_in = decompose_array(inputs, model.kernel)
    elif s_in.shape[0] != gs.shape[0]:
        raise InvalidArgumentError("output and loss gradients disagree on batch size")
    if model.share_channels:
        return GradientSet(
            np.einsum("nhc,nlc->hl", gs, s_in, optimize=True),
            gs.sum(axis=(0, 2)),
            np.einsum("nhc,nlc->hl", gt, t_in, optimize=True),
            gt.sum(axis=(0, 2)),
        )
    return GradientSet(
        np.einsum("nhc,nlc->chl", gs, s_in, optimize=True),
        gs.sum(axis=0).T,
        np.einsum("nhc,nlc->chl", gt, t_in, optimize=True),
        gt.sum(axis=0).T,
    )


def save_checkpoint(path, model: LinearForecaster, extra: dict | None = None) -> None:
    """Write a JSON checkpoint; doubles are stored with round-trip repr."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "share_channels": model.share_channels,
        "kernel": model.kernel,
        "params": {
            n: {"shape": list(a.shape), "data": [float(v) for v in a.ravel(order="C")]}
            for n, a in model.parameters().items()
        },
    }
    if extra:
        doc["extra"] = extra
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, allow_nan=False)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[LinearForecaster, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise InvalidArgumentError(f"{path}: not a decomploss checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise InvalidArgumentError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    params = {
        n: np.array(p["data"], dtype=np.float64).reshape(p["shape"])
        for n, p in doc["params"].items()
    }
    model = LinearForecaster(**{n: params[n] for n in PARAM_NAMES},
                             share_channels=bool(doc["share_channels"]), kernel=int(doc["kernel"]))
    return model, doc.get("extra", {})
