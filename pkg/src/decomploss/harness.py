"""Experiment orchestration: horizon sweeps, ablations and their reports."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import model as model_mod
from .config import ExperimentConfig
from .dataset import PreparedData, load_csv, prepare
from .metrics import METRIC_NAMES, MetricsReport, average_reports
from .series import TimeSeries, decompose_array
from .synthgen import SynthSpec, generate
from .trainer import evaluate, train

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class RunSpec:
    """One training run inside a sweep."""

    horizon: int
    variant: str
    initial_w1: float | None = None
    initial_alpha: float | None = None
    tag: str = ""

    @property
    def name(self) -> str:
        return self.tag or self.variant


def load_series(cfg: ExperimentConfig) -> TimeSeries:
    if cfg.dataset.synth is not None:
        return generate(SynthSpec.from_dict(cfg.dataset.synth))
    return load_csv(cfg.dataset.path, cfg.dataset.date_column)


def prepare_data(cfg: ExperimentConfig, series: TimeSeries, horizon: int) -> PreparedData:
    return prepare(series, cfg.split_spec(horizon), cfg.model.kernel, cfg.dataset.target_mode)


def _dump(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def run_one(cfg: ExperimentConfig, spec: RunSpec, run_dir: str, series: TimeSeries | None = None) -> dict:
    """Train and test one model; writes report, checkpoint and weight trajectory."""
    t0 = time.perf_counter()
    series = load_series(cfg) if series is None else series
    data = prepare_data(cfg, series, spec.horizon)
    tcfg = cfg.train_config(spec.variant, spec.initial_w1, spec.initial_alpha)
    m = model_mod.init(cfg.model.input_length, spec.horizon, series.n_channels, cfg.model.share_channels,
                       seed=cfg.seed, scheme=cfg.model.init, kernel=cfg.model.kernel)
    result = train(m, data.train, data.val, tcfg)
    val = evaluate(result.model, data.val)
    test = evaluate(result.model, data.test)

    os.makedirs(run_dir, exist_ok=True)
    weights = asdict(result.weights)
    model_mod.save_checkpoint(os.path.join(run_dir, "checkpoint.json"), result.model,
                              extra={"loss_weights": weights, "horizon": spec.horizon})
    result.write_trajectory(os.path.join(run_dir, "weights.csv"))
    report = {
        "schema_version": REPORT_SCHEMA,
        "config": cfg.to_dict(),
        "run": {
            "horizon": spec.horizon,
            "variant": spec.variant,
            "name": spec.name,
            "train_config": asdict(tcfg),
        },
        "window_counts": {"train": len(data.train), "val": len(data.val), "test": len(data.test)},
        "epochs": [asdict(e) for e in result.epochs],
        "best_epoch": result.best_epoch,
        "stopped_early": result.stopped_early,
        "steps": result.steps,
        "final_loss_weights": weights,
        "metrics": {"val": val.to_dict(), "test": test.to_dict()},
        "artifacts": {"checkpoint": "checkpoint.json", "weight_trajectory": "weights.csv"},
        "wall_clock_seconds": time.perf_counter() - t0,
    }
    _dump(os.path.join(run_dir, "run_report.json"), report)
    log.info("%s H=%d test mse %.6f", spec.name, spec.horizon, test.overall_mse)
    return report


def _run_task(args) -> dict:
    cfg_dict, spec, run_dir = args
    return run_one(ExperimentConfig.from_dict(cfg_dict), spec, run_dir)


def _run_many(cfg: ExperimentConfig, tasks: list[tuple[RunSpec, str]], jobs: int) -> list[dict]:
    if jobs > 1 and len(tasks) > 1:
        payload = [(cfg.to_dict(), s, d) for s, d in tasks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_task, payload))
    series = load_series(cfg)
    return [run_one(cfg, s, d, series) for s, d in tasks]


def _test_report(rep: dict) -> MetricsReport:
    return MetricsReport(**rep["metrics"]["test"])


def aggregate(reports: list[dict]) -> dict:
    """Per-horizon test metrics and their unweighted mean."""
    per = {str(r["run"]["horizon"]): r["metrics"]["test"] for r in reports}
    return {"per_horizon": per, "average": average_reports([_test_report(r) for r in reports])}


def horizons_for(cfg: ExperimentConfig, horizon: int | None) -> list[int]:
    if horizon is None:
        return list(cfg.horizons)
    return [horizon]


def run_train(cfg: ExperimentConfig, output_dir: str | None = None, horizon: int | None = None,
              jobs: int = 1) -> dict:
    out = output_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    tasks = [(RunSpec(h, cfg.loss.variant), os.path.join(out, f"h{h}"))
             for h in horizons_for(cfg, horizon)]
    reports = _run_many(cfg, tasks, jobs)
    agg = {"schema_version": REPORT_SCHEMA, "variant": cfg.loss.variant, **aggregate(reports),
           "runs": [os.path.relpath(os.path.join(d, "run_report.json"), out) for _, d in tasks]}
    _dump(os.path.join(out, "aggregate.json"), agg)
    return agg


def ablation_specs(cfg: ExperimentConfig, horizons: list[int]) -> list[tuple[str, RunSpec]]:
    specs = []
    for v in cfg.ablation.variants:
        for h in horizons:
            specs.append(("variants", RunSpec(h, v, tag=v)))
    for w1, a in cfg.ablation.grid:
        for h in horizons:
            specs.append(("init_grid", RunSpec(h, "hybrid", w1, a, tag=f"w1={w1:g}_alpha={a:g}")))
    return specs


def run_ablation(cfg: ExperimentConfig, output_dir: str | None = None, horizon: int | None = None,
                 jobs: int = 1) -> dict:
    """Loss-variant comparison plus the initial-weight grid, on shared splits and seeds."""
    out = output_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    hs = horizons_for(cfg, horizon)
    specs = ablation_specs(cfg, hs)
    tasks = [(s, os.path.join(out, study, s.name.replace("=", "").replace(",", "_"), f"h{s.horizon}"))
             for study, s in specs]
    reports = _run_many(cfg, tasks, jobs)

    doc = {"schema_version": REPORT_SCHEMA, "horizons": hs, "variants": {}, "init_grid": {}}
    rows = []
    for (study, s), rep in zip(specs, reports):
        entry = doc[study].setdefault(s.name, {"reports": []})
        entry["reports"].append(rep)
        t = rep["metrics"]["test"]
        rows.append([study, s.name, s.horizon] + [repr(t[m]) for m in METRIC_NAMES])
    for study in ("variants", "init_grid"):
        for name, entry in doc[study].items():
            reps = entry.pop("reports")
            entry.update(aggregate(reps))
            if study == "init_grid":
                r0 = reps[0]["run"]["train_config"]
                entry["initial_w1"], entry["initial_alpha"] = r0["initial_w1"], r0["initial_alpha"]
            rows.append([study, name, "avg"] + [repr(entry["average"][m]) for m in METRIC_NAMES])
    _dump(os.path.join(out, "ablation.json"), doc)
    with open(os.path.join(out, "ablation.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["study", "name", "horizon", *METRIC_NAMES])
        w.writerows(rows)
    return doc


def run_eval(cfg: ExperimentConfig, checkpoint: str, split_name: str = "test") -> dict:
    m, _ = model_mod.load_checkpoint(checkpoint)
    series = load_series(cfg)
    horizon = m.horizon
    if m.input_length != cfg.model.input_length:
        cfg = replace(cfg, model=replace(cfg.model, input_length=m.input_length))
    data = prepare(series, cfg.split_spec(horizon), m.kernel, cfg.dataset.target_mode)
    rep = evaluate(m, getattr(data, split_name))
    return {"schema_version": REPORT_SCHEMA, "split": split_name, "checkpoint": os.path.basename(checkpoint),
            "metrics": rep.to_dict()}


def decompose_table(series: TimeSeries, kernel: int) -> dict[str, np.ndarray]:
    seasonal, trend = decompose_array(series.values, kernel)
    cols = {}
    for i, name in enumerate(series.channel_names):
        cols[f"{name}_original"] = series.values[:, i]
        cols[f"{name}_seasonal"] = seasonal[:, i]
        cols[f"{name}_trend"] = trend[:, i]
    return cols
