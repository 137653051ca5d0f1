"""Closed-form risks, upper bounds and asymptotes as plain scalar functions.

MAP bounds control the expected *symmetrized* Bregman S = B(mu*; mu) + B(mu; mu*),
which is at least the expected KL.  Asymptotically the KL is d/(2n) while the
symmetrized bound behaves like d/n, so overlays of the MAP bounds sit a factor
of about 2 above the KL curves for large n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError
from .special import QuadratureConfig, digamma, multivariate_digamma, scaled_gen_exp_integral

INF = float("inf")


@dataclass(frozen=True)
class GammaRiskParams:
    alpha: float
    n: int
    n0: float = 0.0
    ratio: float = 1.0  # mu0 / mu*

    def __post_init__(self):
        if not (self.alpha > 0 and self.n >= 0 and self.n0 >= 0 and self.ratio > 0):
            raise DomainError("need alpha > 0, n >= 0, n0 >= 0, ratio > 0")

    @property
    def a(self):
        return self.n0 * self.ratio


def _pos(x):
    return max(0.0, x)


def mle_bound_gamma(alpha, n):
    if n * alpha <= 1:
        return INF
    return 1.0 / (2 * n) + 1.0 / (n * (n * alpha - 1))


def mle_lower_bound_gamma(alpha, n):
    """The Omega(n^-2) lower bound obtained from psi(x) >= log x - 1/x."""
    if n * alpha <= 1:
        return INF
    return 1.0 / (n * (n * alpha - 1))


def mle_exact_gamma(alpha, n):
    """E[B(mu*; mu_hat)] for the MLE, from E[mu*/mu_hat] and E[log mu_hat]."""
    k = n * alpha
    if k <= 1:
        return INF
    return alpha * (1.0 / (k - 1) + digamma(k) - np.log(k))


def symmetrized_gamma(alpha, ratio):
    """S_{A*}(mu*, mu) for a gamma family as a function of mu / mu*."""
    return alpha * (ratio + 1.0 / ratio - 2.0)


def map_bound_gaussian_variance(n, n0, ratio):
    """Bound on E[S(mu*, mu_hat_n)] for the Gaussian-variance MAP."""
    if not (n0 > 0 and ratio > 0 and n >= 0):
        raise DomainError("need n0 > 0, ratio > 0 and n >= 0")
    if n == 0:
        return symmetrized_gamma(0.5, ratio)
    b_n = (1 + 1 / n0 - ratio) ** 2 / (2 * (ratio + _pos(n - 2) / n0) * (1 + n / n0))
    if n == 1:
        return 1.0 / (2 * (n0 + 1)) + b_n
    return 1.0 / (n0 * ratio + n - 2) + b_n


def map_bound_gamma(alpha, n, n0, ratio):
    """Bound on E[S(mu*, mu_hat_n)] for the gamma MAP.

    For n * alpha >= 1 this is 1/(n0+n) plus a bias term vanishing at
    ratio = 1 + 1/(alpha n0).  Below that it uses the recurrence-based bound on
    E[mu*/mu_hat]; the overall alpha factor of the symmetrized divergence is
    kept in both branches.
    """
    if not (alpha > 0 and n0 > 0 and ratio > 0 and n >= 0):
        raise DomainError("need alpha > 0, n0 > 0, ratio > 0 and n >= 0")
    a = n0 * ratio
    if n * alpha >= 1:
        bias = alpha * (ratio - 1 / (alpha * n0) - 1) ** 2
        bias /= (1 + n / n0) * (ratio + (n - 1 / alpha) / n0)
        return 1.0 / (n0 + n) + bias
    inv = (n0 + n) / (a + n + 1 / alpha) * (1 + 1 / (a * alpha))
    return alpha * (inv - 1 + (a - n0) / (n0 + n))


def nat_param_sandwich(alpha, n, n0, ratio):
    """(lo, hi) bracketing E[mu*/mu_hat_n] for the gamma MAP."""
    a = n0 * ratio
    if not a > 0 and n == 0:
        raise DomainError("need n0 * ratio > 0 or n >= 1")
    lo = (n0 + n) / (a + n)
    den = a + _pos(n - 1 / alpha)
    hi = (n0 + n) / den if den > 0 else INF
    return lo, hi


def map_exact_expected_inverse(alpha, n, n0, ratio, cfg=None):
    """E[mu*/mu_hat_n] = (n0+n) alpha e^{a alpha} E_{n alpha}(a alpha)."""
    a = n0 * ratio
    if not a > 0:
        raise DomainError("need a = n0 * ratio > 0")
    if n == 0:
        return n0 / a
    return (n0 + n) * alpha * scaled_gen_exp_integral(n * alpha, a * alpha, cfg or QuadratureConfig())


def map_exact_symmetrized_gamma(alpha, n, n0, ratio, cfg=None):
    """Exact E[S(mu*, mu_hat_n)] for the gamma MAP (the quantity the MAP bounds control)."""
    a = n0 * ratio
    inv = map_exact_expected_inverse(alpha, n, n0, ratio, cfg)
    return alpha * (inv - 1 + (a + n) / (n0 + n) - 1)


def _p(d):
    return d * (d + 1) / 2


def mle_bound_multivariate(d, n):
    if n <= d + 1:
        return INF
    p = _p(d)
    return p / (2 * n) + p * (d + 2) / (n * (n - d - 1))


def mle_exact_multivariate(d, n):
    if n <= d + 1:
        return INF
    return _p(d) / (n - d - 1) + 0.5 * (multivariate_digamma(d, n / 2) - d * np.log(n / 2))


def quadratic_map_exact(d, n, n0, bias_sq):
    """Exact expected KL of the MAP for the unit-covariance Gaussian location model."""
    if not n + n0 > 0:
        raise DomainError("need n + n0 > 0")
    return (n * d + n0**2 * bias_sq) / (2 * (n + n0) ** 2)


def asymptote(d, n):
    if n < 1:
        raise DomainError("need n >= 1")
    return d / (2 * n)
