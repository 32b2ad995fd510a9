"""Command-line entry point: ``dusvgd {train,run,eval,selftest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, NumericalError, ParseError
from .config import load_config, write_kv
from .experiment import build_problem, run_experiment, train_schedule, write_schedule
from .metrics import write_mean_curve

log = logging.getLogger("dusvgd")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (flat key = value file)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--threads", type=int, default=1, help="parallel trials (1 = bitwise reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dusvgd", description="SVGD with trained step-size schedules")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train a step-size schedule and save it")
    sub.add_parser("run", parents=[common], help="run an experiment and write metric curves")
    ev = sub.add_parser("eval", parents=[common], help="task metric for saved particles")
    ev.add_argument("--particles", required=True, help=".npz written by `run`")
    sub.add_parser("selftest", parents=[common], help="run the invariant checks")
    return p


def _load(args, parser):
    if not args.config:
        parser.error(f"{args.command} requires --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.run.seed = args.seed
    return cfg.validate()


def _cmd_train(args, parser):
    cfg = _load(args, parser)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train_schedule(cfg, progress=lambda e, d, loss, p: log.debug("depth %d epoch %d loss %.6g", d, e, loss))
    write_schedule(out / "schedule.kv", result.schedule)
    with open(out / "train_history.csv", "w") as fh:
        fh.write("epoch,depth,loss\n")
        for epoch, depth, loss in result.history:
            fh.write(f"{epoch},{depth},{loss!r}\n")
    print(f"wrote {out / 'schedule.kv'}")
    return 0


def _cmd_run(args, parser):
    cfg = _load(args, parser)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(cfg, threads=args.threads)
    result.curve.to_csv(out / "curve.csv")
    write_mean_curve(out / "mean_curve.csv", result.curve)
    write_kv(out / "summary.kv", result.summary())
    write_schedule(out / "schedule.kv", result.schedule)
    if result.training is not None:
        with open(out / "train_history.csv", "w") as fh:
            fh.write("epoch,depth,loss\n")
            for epoch, depth, loss in result.training.history:
                fh.write(f"{epoch},{depth},{loss!r}\n")
    np.savez(out / "particles.npz", **{f"trial_{k}": p for k, p in enumerate(result.particles) if p is not None})
    for key, value in result.summary().items():
        if key.startswith("final."):
            print(f"{key} = {value}")
    return 1 if result.errors else 0


def _cmd_eval(args, parser):
    cfg = _load(args, parser)
    path = Path(args.particles)
    if not path.is_file():
        raise ConfigError(f"particles file not found: {path}")
    problem = build_problem(cfg)
    saved = np.load(path)
    values = {}
    for key in sorted(saved.files, key=lambda k: int(k.split("_")[-1])):
        values[f"{key}.{problem.metric_name}"] = problem.metric(saved[key])
    values[f"mean.{problem.metric_name}"] = float(np.mean(list(values.values())))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_kv(out / "eval.kv", values)
    for key, value in values.items():
        print(f"{key} = {value}")
    return 0


def _cmd_selftest(args, parser):
    from ..selftest import run_selftest

    return 0 if run_selftest(args.seed or 0) else 1


COMMANDS = {"train": _cmd_train, "run": _cmd_run, "eval": _cmd_eval, "selftest": _cmd_selftest}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, DataError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
