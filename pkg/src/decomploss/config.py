"""Experiment configuration: one flat-ish JSON document per experiment."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .dataset import SPLIT_MODES, TARGET_MODES, SplitSpec
from .errors import ConfigurationError, DecompLossError
from .hybrid_loss import UPDATE_ORDERS, VARIANTS
from .series import check_kernel
from .synthgen import SynthSpec
from .trainer import TrainConfig

SCHEMA_VERSION = 1
# "original" is shorthand for the overall-only baseline: hybrid pinned at w1=1, no updates
LOSS_VARIANTS = VARIANTS + ("original",)
DEFAULT_GRID = ((0.1, 0.1), (0.1, 0.9), (0.5, 0.5), (0.9, 0.1), (0.9, 0.9))


@dataclass(frozen=True)
class DatasetConfig:
    path: str | None = None
    date_column: str | None = None
    split_mode: str = "ett_hourly"
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    target_mode: str = "window"
    synth: dict | None = None


@dataclass(frozen=True)
class ModelConfig:
    input_length: int = 96
    kernel: int = 25
    share_channels: bool = True
    init: str = "uniform"


@dataclass(frozen=True)
class TrainBlock:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float | None = None


@dataclass(frozen=True)
class LossBlock:
    variant: str = "hybrid"
    initial_w1: float = 0.5
    initial_alpha: float = 0.5
    lambda1: float = 0.9
    lambda2: float = 0.1
    update_order: str = "inner_first"


@dataclass(frozen=True)
class AblationBlock:
    variants: tuple[str, ...] = VARIANTS
    grid: tuple[tuple[float, float], ...] = DEFAULT_GRID


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainBlock = field(default_factory=TrainBlock)
    loss: LossBlock = field(default_factory=LossBlock)
    ablation: AblationBlock = field(default_factory=AblationBlock)
    horizons: tuple[int, ...] = (96, 192, 336, 720)
    seed: int = 0
    output_dir: str = "runs"
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dataset"]["ratios"] = list(self.dataset.ratios)
        d["ablation"] = {"variants": list(self.ablation.variants),
                         "grid": [list(g) for g in self.ablation.grid]}
        d["horizons"] = list(self.horizons)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        return parse_config(d)

    def split_spec(self, horizon: int) -> SplitSpec:
        return SplitSpec(self.dataset.split_mode, self.model.input_length, horizon, self.dataset.ratios)

    def train_config(self, variant: str | None = None, initial_w1: float | None = None,
                     initial_alpha: float | None = None) -> TrainConfig:
        variant = self.loss.variant if variant is None else variant
        w1 = self.loss.initial_w1 if initial_w1 is None else initial_w1
        alpha = self.loss.initial_alpha if initial_alpha is None else initial_alpha
        frozen = False
        if variant == "original":
            variant, w1, frozen = "hybrid", 1.0, True
        return TrainConfig(
            **asdict(self.train),
            seed=self.seed,
            loss_variant=variant,
            initial_w1=w1,
            initial_alpha=alpha,
            lambda1=self.loss.lambda1,
            lambda2=self.loss.lambda2,
            update_order=self.loss.update_order,
            freeze_weights=frozen,
        )


def _block(cls, raw, path: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected an object")
    known = {f.name: f for f in fields(cls)}
    for k in raw:
        if k not in known:
            raise ConfigurationError(f"{path}.{k}: unknown key")
    return cls(**raw)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigurationError(f"{path}: {msg}")


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a config document, reporting problems by key path."""
    if not isinstance(raw, dict):
        raise ConfigurationError("config: expected a JSON object")
    top = {f.name for f in fields(ExperimentConfig)}
    for k in raw:
        if k not in top:
            raise ConfigurationError(f"{k}: unknown key")
    version = raw.get("schema_version", SCHEMA_VERSION)
    _require(version == SCHEMA_VERSION, "schema_version", f"unsupported version {version!r}")

    ds = _block(DatasetConfig, raw.get("dataset"), "dataset")
    _require(ds.split_mode in SPLIT_MODES, "dataset.split_mode", f"must be one of {SPLIT_MODES}")
    _require(ds.target_mode in TARGET_MODES, "dataset.target_mode", f"must be one of {TARGET_MODES}")
    _require((ds.path is None) != (ds.synth is None), "dataset", "exactly one of 'path' or 'synth' is required")
    ratios = tuple(ds.ratios)
    _require(len(ratios) == 3 and all(_num(r) and r >= 0 for r in ratios), "dataset.ratios",
             "must be three non-negative numbers")
    if ds.split_mode == "ratio":
        _require(abs(sum(ratios) - 1.0) <= 1e-12, "dataset.ratios", "must sum to 1")
    if ds.synth is not None:
        try:
            SynthSpec.from_dict(ds.synth)
        except (TypeError, DecompLossError) as exc:
            raise ConfigurationError(f"dataset.synth: {exc}") from None
    ds = DatasetConfig(ds.path, ds.date_column, ds.split_mode, tuple(float(r) for r in ratios),
                       ds.target_mode, ds.synth)

    mc = _block(ModelConfig, raw.get("model"), "model")
    _require(isinstance(mc.input_length, int) and mc.input_length >= 1, "model.input_length", "must be a positive integer")
    try:
        check_kernel(mc.kernel)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"model.kernel: {exc}") from None
    _require(isinstance(mc.share_channels, bool), "model.share_channels", "must be a boolean")
    _require(mc.init in ("uniform", "random"), "model.init", "must be 'uniform' or 'random'")

    tb = _block(TrainBlock, raw.get("train"), "train")
    _require(_num(tb.learning_rate) and tb.learning_rate >= 0, "train.learning_rate", "must be non-negative")
    _require(isinstance(tb.batch_size, int) and tb.batch_size >= 1, "train.batch_size", "must be a positive integer")
    _require(isinstance(tb.max_epochs, int) and tb.max_epochs >= 1, "train.max_epochs", "must be a positive integer")
    _require(isinstance(tb.patience, int) and tb.patience >= 0, "train.patience", "must be a non-negative integer")
    _require(_num(tb.adam_eps) and tb.adam_eps > 0, "train.adam_eps", "must be positive")
    for name in ("adam_beta1", "adam_beta2"):
        v = getattr(tb, name)
        _require(_num(v) and 0 <= v < 1, f"train.{name}", "must lie in [0, 1)")
    _require(tb.grad_clip is None or (_num(tb.grad_clip) and tb.grad_clip > 0), "train.grad_clip",
             "must be positive or null")

    lb = _block(LossBlock, raw.get("loss"), "loss")
    _require(lb.variant in LOSS_VARIANTS, "loss.variant", f"must be one of {LOSS_VARIANTS}")
    _require(lb.update_order in UPDATE_ORDERS, "loss.update_order", f"must be one of {UPDATE_ORDERS}")
    for name in ("initial_w1", "initial_alpha"):
        v = getattr(lb, name)
        _require(_num(v) and 0 <= v <= 1, f"loss.{name}", "must lie in [0, 1]")
    for name in ("lambda1", "lambda2"):
        v = getattr(lb, name)
        _require(_num(v) and v >= 0, f"loss.{name}", "must be non-negative")

    ab = _block(AblationBlock, raw.get("ablation"), "ablation")
    variants = tuple(ab.variants)
    _require(len(variants) > 0 and all(v in LOSS_VARIANTS for v in variants), "ablation.variants",
             f"entries must be in {LOSS_VARIANTS}")
    grid = tuple(tuple(float(x) for x in g) for g in ab.grid)
    _require(all(len(g) == 2 and 0 <= g[0] <= 1 and 0 <= g[1] <= 1 for g in grid), "ablation.grid",
             "entries must be [w1, alpha] pairs in [0, 1]")
    ab = AblationBlock(variants, grid)

    horizons = raw.get("horizons", ExperimentConfig.horizons)
    _require(isinstance(horizons, (list, tuple)) and len(horizons) > 0, "horizons", "must be a non-empty list")
    for i, h in enumerate(horizons):
        _require(isinstance(h, int) and not isinstance(h, bool) and h >= 1, f"horizons[{i}]", "must be a positive integer")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool), "seed", "must be an integer")
    out = raw.get("output_dir", "runs")
    _require(isinstance(out, str), "output_dir", "must be a string")
    return ExperimentConfig(ds, mc, tb, lb, ab, tuple(horizons), seed, out, SCHEMA_VERSION)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw)
