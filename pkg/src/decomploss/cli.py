"""Command-line entry point: decompose | train | ablate | synth | eval."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import harness
from .config import load_config
from .dataset import load_csv, write_csv
from .errors import DecompLossError
from .synthgen import generate, load_spec

LOG_ENV = "DECOMPLOSS_LOG"


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_decompose(args) -> dict:
    series = load_csv(args.input, args.date_column, reject_constant=False)
    cols = harness.decompose_table(series, args.kernel)
    write_csv(args.output, series, cols)
    return {"output": args.output, "rows": series.length, "channels": list(series.channel_names)}


def cmd_train(args) -> dict:
    cfg = _config(args)
    return harness.run_train(cfg, args.output, args.horizon, args.jobs)["average"]


def cmd_ablate(args) -> dict:
    cfg = _config(args)
    doc = harness.run_ablation(cfg, args.output, args.horizon, args.jobs)
    return {study: {k: v["average"] for k, v in doc[study].items()} for study in ("variants", "init_grid")}


def cmd_synth(args) -> dict:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    series = generate(spec)
    write_csv(args.output, series)
    return {"output": args.output, "rows": series.length}


def cmd_eval(args) -> dict:
    cfg = _config(args)
    doc = harness.run_eval(cfg, args.checkpoint, args.split)
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, "eval.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return doc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decomploss", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="write original/seasonal/trend columns per channel")
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True)
    d.add_argument("--kernel", type=int, default=25)
    d.add_argument("--date-column", default=None)
    d.set_defaults(func=cmd_decompose)

    for name, func, help_ in (
        ("train", cmd_train, "train one model per horizon and aggregate test metrics"),
        ("ablate", cmd_ablate, "run the loss-variant and initial-weight ablations"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True)
        s.add_argument("--output", default=None, help="output directory (default: config output_dir)")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--horizon", type=int, default=None, help="run only this horizon")
        s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        s.set_defaults(func=func)

    s = sub.add_parser("synth", help="generate a synthetic series CSV from a JSON spec")
    s.add_argument("--spec", "--config", dest="spec", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a data split")
    e.add_argument("--config", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--split", choices=("train", "val", "test"), default="test")
    e.add_argument("--output", default=None)
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except (DecompLossError, OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
