"""Kernel density of mixture particles after a fixed number of iterations.

    python scripts/mixture_density.py --schedule results/mixture/mixture_dusvgd/schedule.kv

Prints the local maxima of a Gaussian KDE of one trial's particles and writes
``grid,kde,target`` rows to ``--out`` for plotting.
"""

import argparse
from pathlib import Path

import numpy as np

from dusvgd.bench.config import load_config
from dusvgd.bench.experiment import read_schedule, run_experiment
from dusvgd.bench.metrics import kde, local_maxima
from dusvgd.targets import GaussianMixture1D


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs/mixture_dusvgd.cfg"))
    ap.add_argument("--schedule", help="saved schedule.kv; trains one from the config if omitted")
    ap.add_argument("--iters", type=int, default=100)
    ap.add_argument("--trial", type=int, default=0)
    ap.add_argument("--bandwidth", type=float, default=0.2)
    ap.add_argument("--out", default="mixture_density.csv")
    args = ap.parse_args()

    cfg = load_config(args.config)
    cfg.run.iters, cfg.run.interval, cfg.run.trials = args.iters, args.iters, args.trial + 1
    schedule = read_schedule(args.schedule) if args.schedule else None
    particles = run_experiment(cfg, schedule=schedule).particles[args.trial]

    grid = np.linspace(-6.0, 7.0, 2601)
    dens = kde(particles, args.bandwidth, grid)
    target = GaussianMixture1D().density(grid)
    np.savetxt(args.out, np.column_stack([grid, dens, target]), delimiter=",",
               header="grid,kde,target", comments="")
    print("local maxima:", np.round(local_maxima(grid, dens), 3).tolist())


if __name__ == "__main__":
    main()
