"""Run several experiment configs on the same task and tabulate their mean curves.

    python scripts/compare.py configs/mixture_*.cfg --out results/mixture \
        --at 0 10 20 30 60 100 200 300

Each config gets a subdirectory of ``--out`` holding the same files as
``dusvgd run`` (curves, summary, schedule, particles, training history).
"""

import argparse
import logging
import time
from pathlib import Path

import numpy as np

from dusvgd.bench.config import load_config, write_kv
from dusvgd.bench.experiment import run_experiment, write_schedule
from dusvgd.bench.metrics import write_mean_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--out", default="results")
    ap.add_argument("--at", type=int, nargs="*", help="iterations to tabulate (default: every snapshot)")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    rows = {}
    for path in args.configs:
        cfg = load_config(path)
        name = Path(path).stem
        start = time.time()
        res = run_experiment(cfg, threads=args.threads)
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        res.curve.to_csv(out / "curve.csv")
        write_mean_curve(out / "mean_curve.csv", res.curve)
        write_kv(out / "summary.kv", res.summary())
        write_schedule(out / "schedule.kv", res.schedule)
        if res.training is not None:
            with open(out / "train_history.csv", "w") as fh:
                fh.write("epoch,depth,loss\n")
                for epoch, depth, loss in res.training.history:
                    fh.write(f"{epoch},{depth},{loss!r}\n")
        np.savez(out / "particles.npz", **{f"trial_{k}": p for k, p in enumerate(res.particles) if p is not None})
        rows[name] = res.mean_curve()
        logging.info("%s done in %.0f s, schedule %s", name, time.time() - start, res.schedule)

    its = next(iter(rows.values()))[0]
    at = args.at if args.at else its.tolist()
    width = max(len(n) for n in rows)
    print(" " * width + "".join(f"{i:>10d}" for i in at))
    for name, (it, vals) in rows.items():
        lookup = dict(zip(it.tolist(), vals))
        print(name.ljust(width) + "".join(f"{lookup.get(i, float('nan')):>10.4f}" for i in at))


if __name__ == "__main__":
    main()
