"""Training loop: hybrid-loss weighting, analytic gradients, Adam, early stopping."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from .dataset import WindowBatch
from .errors import ConfigurationError, TrainingError
from .hybrid_loss import VARIANTS, LossBreakdown, LossPolicy, LossWeights, component_losses
from .metrics import MetricsAccumulator, MetricsReport
from .model import GradientSet, LinearForecaster, backward, forward

log = logging.getLogger(__name__)

TRAJECTORY_FIELDS = ("step", "w1", "w2", "alpha", "beta", "loss_G", "loss_S", "loss_T", "combined")


class BatchSource(Protocol):
    def __len__(self) -> int: ...

    def take(self, idx) -> WindowBatch: ...


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    loss_variant: str = "hybrid"
    initial_w1: float = 0.5
    initial_alpha: float = 0.5
    lambda1: float = 0.9
    lambda2: float = 0.1
    update_order: str = "inner_first"
    freeze_weights: bool = False
    grad_clip: float | None = None

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 0:
            raise ConfigurationError("batch_size and max_epochs must be >= 1, patience >= 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_eps > 0):
            raise ConfigurationError("adam betas must lie in [0, 1) and eps must be positive")
        if self.loss_variant not in VARIANTS:
            raise ConfigurationError(f"loss_variant must be one of {VARIANTS}, got {self.loss_variant!r}")
        if not (0 <= self.initial_w1 <= 1 and 0 <= self.initial_alpha <= 1):
            raise ConfigurationError("initial weights must lie in [0, 1]")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigurationError("temperatures must be non-negative")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigurationError("grad_clip must be positive when set")

    def policy(self) -> LossPolicy:
        return LossPolicy(self.loss_variant, self.update_order, self.freeze_weights)

    def initial_weights(self) -> LossWeights:
        return self.policy().initial_weights(self.initial_w1, self.initial_alpha, self.lambda1, self.lambda2)


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> AdamState:
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
              config: TrainConfig) -> tuple[dict[str, np.ndarray], AdamState]:
    """Bias-corrected Adam; returns new parameter and state objects."""
    if params.keys() != grads.keys():
        raise ConfigurationError("parameter and gradient names differ")
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_eps, config.learning_rate
    t = state.step + 1
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ConfigurationError(f"gradient for {k} has shape {g.shape}, parameter {p.shape}")
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * (g * g)
        new_p[k] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_m[k] = m
        new_v[k] = v
    return new_p, AdamState(new_m, new_v, t)


def _iter_chunks(n: int, size: int):
    for a in range(0, n, size):
        yield slice(a, min(a + size, n))


def evaluate(model: LinearForecaster, batches: BatchSource | WindowBatch, batch_size: int = 256) -> MetricsReport:
    n = len(batches)
    if n == 0:
        raise ConfigurationError("cannot evaluate on an empty batch stream")
    acc = MetricsAccumulator()
    for sl in _iter_chunks(n, batch_size):
        b = batches.take(sl)
        acc.add(forward(model, b.inputs), b)
    return acc.result()


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_overall_mse: float
    val_overall_mse: float


@dataclass
class TrainResult:
    model: LinearForecaster
    weights: LossWeights
    epochs: list[EpochRecord]
    trajectory: list[tuple]
    best_epoch: int
    stopped_early: bool
    steps: int = field(default=0)

    def write_trajectory(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_FIELDS)
            for row in self.trajectory:
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _clip(grads: GradientSet, max_norm: float) -> GradientSet:
    norm = grads.global_norm()
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return GradientSet(**{k: g * scale for k, g in grads.as_dict().items()})


def train_step(model: LinearForecaster, batch: WindowBatch, weights: LossWeights, policy: LossPolicy,
               adam: AdamState, config: TrainConfig) -> tuple[LinearForecaster, LossWeights, AdamState, LossBreakdown]:
    """forward, losses, weight update, gradients, backward, Adam."""
    out = forward(model, batch.inputs)
    lg, ls, lt = component_losses(out, batch)
    if not all(math.isfinite(v) for v in (lg, ls, lt)):
        raise TrainingError(f"non-finite loss at step {adam.step + 1}: G={lg}, S={ls}, T={lt}")
    weights, br = policy.step(weights, lg, ls, lt)
    grads = backward(model, batch.inputs, out, policy.gradients(weights, out, batch))
    if config.grad_clip is not None:
        grads = _clip(grads, config.grad_clip)
    params, adam = adam_step(model.parameters(), grads.as_dict(), adam, config)
    return model.with_parameters(params), weights, adam, br


def train(model: LinearForecaster, batches: BatchSource | WindowBatch, val_batches: BatchSource | WindowBatch,
          config: TrainConfig, weights: LossWeights | None = None) -> TrainResult:
    """Train with per-step loss reweighting and early stopping on validation MSE.

    Batch order is shuffled each epoch by a generator seeded from
    ``config.seed``; the model with the best validation overall MSE is
    returned.
    """
    n = len(batches)
    if n == 0 or len(val_batches) == 0:
        raise ConfigurationError("training and validation streams must be non-empty")
    policy = config.policy()
    weights = config.initial_weights() if weights is None else weights
    rng = np.random.default_rng(config.seed)
    adam = AdamState.zeros_like(model.parameters())

    best_val = evaluate(model, val_batches).overall_mse
    best_model, best_weights, best_epoch = model.copy(), weights, 0
    epochs: list[EpochRecord] = []
    trajectory: list[tuple] = []
    bad_epochs = 0
    stopped = False
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        tot, tot_g, count = 0.0, 0.0, 0
        for sl in _iter_chunks(n, config.batch_size):
            batch = batches.take(order[sl])
            model, weights, adam, br = train_step(model, batch, weights, policy, adam, config)
            trajectory.append((adam.step, weights.w1, weights.w2, weights.alpha, weights.beta,
                               br.loss_G, br.loss_S, br.loss_T, br.combined))
            k = len(batch)
            tot += br.combined * k
            tot_g += br.loss_G * k
            count += k
        for name, arr in model.parameters().items():
            if not np.all(np.isfinite(arr)):
                raise TrainingError(f"non-finite {name} after step {adam.step}")
        val = evaluate(model, val_batches).overall_mse
        epochs.append(EpochRecord(epoch, tot / count, tot_g / count, val))
        log.info("epoch %d: train %.6f val mse %.6f", epoch, tot / count, val)
        if val < best_val:
            best_val, best_model, best_weights, best_epoch = val, model.copy(), weights, epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                stopped = True
                break
    return TrainResult(best_model, best_weights, epochs, trajectory, best_epoch, stopped, adam.step)


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
