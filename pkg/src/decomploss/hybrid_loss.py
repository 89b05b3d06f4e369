"""Dual min-max hybrid loss over the overall forecast and its sub-series.

The training objective is

    min_theta  max_{w1+w2=1, alpha+beta=1}  w1*L_G + w2*(alpha*L_S + beta*L_T)

where L_G is the MSE of the combined forecast and L_S, L_T are the MSEs
of the seasonal and trend streams against decomposed targets. The inner
maximization is not solved by gradient ascent; each optimization step
applies a closed-form exponentiated (mirror-descent) reweighting that
moves mass toward whichever loss is currently larger, then the model
takes a gradient step on the reweighted loss with the weights held fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import WindowBatch
from .errors import ConfigurationError, InvalidArgumentError
from .model import ForecastOutput, StreamGradients

VARIANTS = ("hybrid", "component_only", "fixed_weight")
UPDATE_ORDERS = ("inner_first", "simultaneous")
_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class LossWeights:
    w1: float = 0.5
    w2: float = 0.5
    alpha: float = 0.5
    beta: float = 0.5
    lambda1: float = 0.9
    lambda2: float = 0.1

    def __post_init__(self):
        for name in ("w1", "w2", "alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"{name}={v!r} outside [0, 1]")
        if abs(self.w1 + self.w2 - 1.0) > _SIMPLEX_TOL:
            raise InvalidArgumentError(f"w1 + w2 = {self.w1 + self.w2!r}, expected 1")
        if abs(self.alpha + self.beta - 1.0) > _SIMPLEX_TOL:
            raise InvalidArgumentError(f"alpha + beta = {self.alpha + self.beta!r}, expected 1")
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise InvalidArgumentError("temperatures must be non-negative")

    @classmethod
    def initial(cls, w1: float = 0.5, alpha: float = 0.5, lambda1: float = 0.9,
                lambda2: float = 0.1) -> LossWeights:
        return cls(w1, 1.0 - w1, alpha, 1.0 - alpha, lambda1, lambda2)


@dataclass(frozen=True)
class LossBreakdown:
    loss_G: float
    loss_S: float
    loss_T: float
    loss_C: float
    combined: float


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.mean(d * d))


def _check_shapes(output: ForecastOutput, batch: WindowBatch) -> None:
    if output.seasonal_pred.shape != batch.targets.shape:
        raise InvalidArgumentError(
            f"prediction shape {output.seasonal_pred.shape} != target shape {batch.targets.shape}")


def component_losses(output: ForecastOutput, batch: WindowBatch) -> tuple[float, float, float]:
    """(L_G, L_S, L_T): MSE of combined, seasonal and trend predictions."""
    _check_shapes(output, batch)
    return (
        _mse(output.combined, batch.targets),
        _mse(output.seasonal_pred, batch.targets_seasonal),
        _mse(output.trend_pred, batch.targets_trend),
    )


def _check_loss(name: str, v: float) -> float:
    v = float(v)
    if not (math.isfinite(v) and v >= 0):
        raise InvalidArgumentError(f"{name} must be finite and non-negative, got {v!r}")
    return v


def _reweight(p: float, q: float, loss_p: float, loss_q: float, temp: float) -> tuple[float, float]:
    # p*exp(temp*loss_p) / (p*exp(temp*loss_p) + q*exp(temp*loss_q)), evaluated in
    # log space and shifted by the max so neither exponent can overflow and a
    # zero weight cannot produce 0/0.
    lp = math.log(p) + temp * loss_p if p > 0 else -math.inf
    lq = math.log(q) + temp * loss_q if q > 0 else -math.inf
    m = max(lp, lq)
    ep = math.exp(lp - m)
    eq = math.exp(lq - m)
    z = ep + eq
    return ep / z, eq / z


def update_weights(weights: LossWeights, loss_G: float, loss_S: float, loss_T: float,
                   order: str = "inner_first") -> LossWeights:
    """One mirror-descent step on both simplices.

    With ``order="inner_first"`` alpha/beta are updated first and the
    component loss fed to the outer update uses the new values; with
    ``"simultaneous"`` it uses the previous alpha/beta.
    """
    if order not in UPDATE_ORDERS:
        raise ConfigurationError(f"update order must be one of {UPDATE_ORDERS}, got {order!r}")
    loss_G = _check_loss("loss_G", loss_G)
    loss_S = _check_loss("loss_S", loss_S)
    loss_T = _check_loss("loss_T", loss_T)
    alpha, beta = _reweight(weights.alpha, weights.beta, loss_S, loss_T, weights.lambda2)
    if order == "inner_first":
        loss_C = alpha * loss_S + beta * loss_T
    else:
        loss_C = weights.alpha * loss_S + weights.beta * loss_T
    w1, w2 = _reweight(weights.w1, weights.w2, loss_G, loss_C, weights.lambda1)
    return replace(weights, w1=w1, w2=w2, alpha=alpha, beta=beta)


def hybrid_loss(weights: LossWeights, loss_G: float, loss_S: float, loss_T: float) -> LossBreakdown:
    loss_C = weights.alpha * loss_S + weights.beta * loss_T
    return LossBreakdown(loss_G, loss_S, loss_T, loss_C, weights.w1 * loss_G + weights.w2 * loss_C)


def loss_gradients(weights: LossWeights, output: ForecastOutput, batch: WindowBatch,
                   global_coef: float | None = None, component_coef: float | None = None) -> StreamGradients:
    """Gradient of the weighted loss w.r.t. each prediction stream.

    Weights are constants here. ``global_coef`` and ``component_coef``
    default to w1 and w2; the component-only variant passes (0, 1).
    """
    _check_shapes(output, batch)
    a = weights.w1 if global_coef is None else global_coef
    b = weights.w2 if component_coef is None else component_coef
    scale = 2.0 / output.seasonal_pred.size
    combined = (a * scale) * (output.combined - batch.targets)
    seasonal = (b * weights.alpha * scale) * (output.seasonal_pred - batch.targets_seasonal)
    trend = (b * weights.beta * scale) * (output.trend_pred - batch.targets_trend)
    return StreamGradients(seasonal, trend, combined)


@dataclass(frozen=True)
class LossPolicy:
    """How a training run weights and re-weights the three losses.

    ``frozen`` disables every weight update (used for the overall-only
    baseline, which is the hybrid policy pinned at w1=1).
    """

    kind: str = "hybrid"
    order: str = "inner_first"
    frozen: bool = False

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ConfigurationError(f"unknown loss variant {self.kind!r}; expected one of {VARIANTS}")
        if self.order not in UPDATE_ORDERS:
            raise ConfigurationError(f"update order must be one of {UPDATE_ORDERS}, got {self.order!r}")

    def initial_weights(self, w1: float = 0.5, alpha: float = 0.5, lambda1: float = 0.9,
                        lambda2: float = 0.1) -> LossWeights:
        if self.kind == "fixed_weight":
            w1, alpha = 0.5, 0.5
        return LossWeights.initial(w1, alpha, lambda1, lambda2)

    def coefficients(self, weights: LossWeights) -> tuple[float, float]:
        if self.kind == "component_only":
            return 0.0, 1.0
        return weights.w1, weights.w2

    def step(self, weights: LossWeights, loss_G: float, loss_S: float,
             loss_T: float) -> tuple[LossWeights, LossBreakdown]:
        """Update the weights for this step and return the loss to minimize."""
        if not self.frozen and self.kind != "fixed_weight":
            new = update_weights(weights, loss_G, loss_S, loss_T, self.order)
            if self.kind == "component_only":
                new = replace(new, w1=weights.w1, w2=weights.w2)
            weights = new
        br = hybrid_loss(weights, loss_G, loss_S, loss_T)
        if self.kind == "component_only":
            br = replace(br, combined=br.loss_C)
        return weights, br

    def gradients(self, weights: LossWeights, output: ForecastOutput, batch: WindowBatch) -> StreamGradients:
        g, c = self.coefficients(weights)
        return loss_gradients(weights, output, batch, g, c)


def make_variant(kind: str, order: str = "inner_first", frozen: bool = False) -> LossPolicy:
    return LossPolicy(kind, order, frozen)
