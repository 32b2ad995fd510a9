"""Evaluation metrics, kernel density estimates and metric-curve files."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

CURVE_HEADER = ("trial", "iteration", "metric", "value")


def accuracy(labels, predicted) -> float:
    labels = np.asarray(labels).ravel()
    predicted = np.asarray(predicted).ravel()
    if labels.shape != predicted.shape:
        raise ValueError("length mismatch")
    return float(np.mean(labels == predicted))


def kde(samples, bandwidth, grid):
    """Gaussian kernel density estimate evaluated on ``grid``."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    x = np.asarray(samples, dtype=float).ravel()
    g = np.asarray(grid, dtype=float).ravel()
    z = (g[:, None] - x[None, :]) / bandwidth
    return np.exp(-0.5 * z**2).sum(axis=1) / (x.size * np.sqrt(2 * np.pi) * bandwidth)


def local_maxima(grid, values, min_height=0.0):
    """Grid locations of strict interior local maxima above ``min_height``."""
    v = np.asarray(values)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] > min_height)
    return np.asarray(grid)[1:-1][inner]


@dataclass
class MetricCurve:
    rows: list = field(default_factory=list)  # (trial, iteration, metric, value)

    def add(self, trial, iteration, metric, value):
        self.rows.append((int(trial), int(iteration), str(metric), float(value)))

    def metrics(self):
        return sorted({r[2] for r in self.rows})

    def trial(self, k, metric):
        pts = [(r[1], r[3]) for r in self.rows if r[0] == k and r[2] == metric]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])

    def mean(self, metric):
        """Mean over trials at each recorded iteration: ``(iterations, values)``."""
        acc = defaultdict(list)
        for trial, it, name, value in self.rows:
            if name == metric:
                acc[it].append(value)
        its = sorted(acc)
        return np.array(its), np.array([np.mean(acc[i]) for i in its])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            for trial, it, name, value in sorted(self.rows, key=lambda r: (r[0], r[1])):
                w.writerow([trial, it, name, repr(value)])

    @classmethod
    def from_csv(cls, path):
        curve = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CURVE_HEADER:
                raise ValueError(f"unexpected curve header {header}")
            for trial, it, name, value in reader:
                curve.add(int(trial), int(it), name, float(value))
        return curve


def write_mean_curve(path, curve: MetricCurve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iteration", "metric", "value"))
        for name in curve.metrics():
            its, vals = curve.mean(name)
            for it, v in zip(its, vals):
                w.writerow([int(it), name, repr(float(v))])


def first_crossing(iterations, values, level):
    """First iteration whose value is ``<= level``; ``None`` if never."""
    hit = np.nonzero(np.asarray(values) <= level)[0]
    return int(np.asarray(iterations)[hit[0]]) if hit.size else None
