"""Digamma, multivariate digamma and the generalized exponential integral."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import DomainError, NumericalFailure

# B_{2k} / (2k) for k = 1..8, the asymptotic series of digamma
_BERNOULLI_OVER_2K = np.array([
    1.0 / 6 / 2,
    -1.0 / 30 / 4,
    1.0 / 42 / 6,
    -1.0 / 30 / 8,
    5.0 / 66 / 10,
    -691.0 / 2730 / 12,
    7.0 / 6 / 14,
    -3617.0 / 510 / 16,
])
_SHIFT_TO = 6.0
# quadpack refuses relative tolerances below 50 machine epsilons
_QUAD_MIN_REL = 50 * np.finfo(float).eps


def digamma(x):
    """psi(x) for x > 0 via upward recurrence and the asymptotic series."""
    x = np.array(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("digamma needs x > 0")
    acc = np.zeros_like(x)
    while np.any(x < _SHIFT_TO):
        small = x < _SHIFT_TO
        acc = acc - np.where(small, 1.0 / x, 0.0)
        x = np.where(small, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for c in _BERNOULLI_OVER_2K[::-1]:
        series = (series + c) * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return out if out.ndim else float(out)


def multivariate_digamma(d, x):
    """sum_{i<d} psi(x - i/2)."""
    d = int(d)
    if d < 1:
        raise DomainError("multivariate digamma needs d >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > (d - 1) / 2.0)):
        raise DomainError(f"multivariate digamma needs x > {(d - 1) / 2}")
    out = sum(np.asarray(digamma(x - 0.5 * i)) for i in range(d))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    max_depth: int = 200

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-4:
            raise ValueError("rel_tol must lie in (0, 1e-4]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")


def scaled_gen_exp_integral(k, z, cfg=None):
    """e^z E_k(z), computed without forming e^{-z} or e^{z} separately.

    With t = e^s the definitional integral becomes
    int_0^inf exp(-z (e^s - 1) + (1 - k) s) ds, whose integrand is smooth and
    decays like exp(-z e^s); it is cut where the exponent drops below -L.
    """
    cfg = cfg or QuadratureConfig()
    k, z = float(k), float(z)
    if not (k > 0 and z > 0):
        raise DomainError("gen_exp_integral needs k > 0 and z > 0")
    cutoff = 60.0 + 2.0 * abs(k)
    s_max = np.log1p(cutoff / z)

    def integrand(s):
        return np.exp(-z * np.expm1(s) + (1.0 - k) * s)

    value, err, info = integrate.quad(
        integrand, 0.0, s_max, epsabs=0.0, epsrel=max(cfg.rel_tol, _QUAD_MIN_REL), limit=cfg.max_depth, full_output=1
    )[:3]
    if err > 10.0 * cfg.rel_tol * abs(value) or not np.isfinite(value):
        raise NumericalFailure(f"quadrature for E_{k}({z}) did not converge", achieved_error=err)
    return value


def gen_exp_integral(k, z, cfg=None):
    """E_k(z) = int_1^inf e^{-z t} t^{-k} dt."""
    return scaled_gen_exp_integral(k, z, cfg) * np.exp(-float(z))
