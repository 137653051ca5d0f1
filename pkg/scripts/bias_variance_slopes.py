"""Log-log slopes of the Bregman bias and variance terms on the full Gaussian (MAP, n0 = 1)."""

import argparse

import numpy as np

from expfam_lab import get_family
from expfam_lab.risk import Estimator, bias_variance_mc

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    fam = get_family("full-gaussian-1d")
    theta = fam.to_natural(np.array([0.0, 1.0]))
    est = Estimator.map(1.0, np.array([1.0, 2.0]))
    ns = np.arange(20, 101, 10)
    rows = [bias_variance_mc(fam, theta, est, int(n), args.trials, args.seed, args.workers) for n in ns]
    for n, r in zip(ns, rows):
        print(f"n={n:4d} total={r.total:.6f} bias={r.bias:.3e} variance={r.variance:.6f} n*total={n * r.total:.4f}")
    print("bias slope", np.polyfit(np.log(ns), np.log([r.bias for r in rows]), 1)[0])
    print("variance slope", np.polyfit(np.log(ns), np.log([r.variance for r in rows]), 1)[0])
