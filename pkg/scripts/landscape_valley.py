"""Where is the valley of the MAP risk landscape?  Exact quadrature, no Monte Carlo.

For the gamma family with shape alpha, E[KL] of the MAP is computed by
integrating over the Gamma(n alpha) law of the summed statistic.  For every
n0 the minimising mu0 / mu* is located on a fine grid and compared with the
two candidate curves 1 + 1/n0 and 1 + 1/(alpha n0).
"""

import argparse
import math

import numpy as np
from scipy import integrate, optimize, stats


def map_kl(alpha, n, n0, ratio):
    law = stats.gamma(n * alpha, scale=1 / alpha)  # sum of T / mu*

    def f(s):
        r = (n0 + n) / (n0 * ratio + s)  # mu* / mu_hat
        return law.pdf(s) * alpha * (r - 1 - math.log(r))

    return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-10, limit=400)[0]


def valley(alpha, n, n0):
    res = optimize.minimize_scalar(lambda lr: map_kl(alpha, n, n0, math.exp(lr)), bounds=(-5, 5), method="bounded",
                                   options={"xatol": 1e-8})
    return math.exp(res.x)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--n", type=int, nargs="+", default=[1, 5, 10])
    args = parser.parse_args()
    print(f"{'n':>3} {'n0':>8} {'argmin':>10} {'1+1/n0':>10} {'1+1/(a n0)':>11}")
    for n in args.n:
        for n0 in np.geomspace(1e-2, 1e2, 9):
            v = valley(args.alpha, n, n0)
            print(f"{n:>3} {n0:>8.3g} {v:>10.4g} {1 + 1 / n0:>10.4g} {1 + 1 / (args.alpha * n0):>11.4g}")
