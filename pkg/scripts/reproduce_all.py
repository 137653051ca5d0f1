"""Run every CLI experiment with its default settings.

    python3 scripts/reproduce_all.py --out results --seed 0 --workers 8
"""

import argparse
import sys

from expfam_lab.cli import main

RUNS = [
    ["risk-curve"],
    ["risk-curve", "--family", "exponential"],
    ["risk-curve", "--family", "gaussian-cov:2", "--n-grid", "1:100"],
    ["bias-variance"],
    ["prior-landscape"],
    ["smd-check"],
    ["table1"],
    ["table1", "--family", "full-gaussian-1d", "--batch", "1"],
    ["bounds-table", "--n-grid", "1:100"],
]


def run(out, seed, workers, trials=None):
    codes = {}
    for cmd in RUNS:
        extra = ["--trials", str(trials)] if trials and cmd[0] not in ("smd-check", "bounds-table") else []
        code = main([*cmd, *extra, "--seed", str(seed), "--workers", str(workers), "--out", out])
        codes[" ".join(cmd)] = code
    return codes


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--trials", type=int, default=None, help="override trial counts for a quick smoke run")
    args = parser.parse_args()
    codes = run(args.out, args.seed, args.workers, args.trials)
    for cmd, code in codes.items():
        print(f"{code}  {cmd}")
    sys.exit(max(codes.values()))
