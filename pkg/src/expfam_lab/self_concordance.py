"""Local quadratic certificate for self-concordant entropies.

When the entropy A* is self-concordant and mu is close to mu* in the local
norm of F = hess A*(mu*), the KL is at most the squared local norm.  The
certificate chains two classical facts: B(y; x) <= omega*(|y - x|_x), and the
conversion |y - x|_x <= t / (1 - t) with t = |y - x|_{x*}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import DomainError, check_mean

PROP1_RADIUS = 0.21


def omega(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("omega is defined for t >= 0")
    out = t - np.log1p(t)
    return out if out.ndim else float(out)


def omega_star(t):
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t >= 1)):
        raise DomainError("omega_star is defined on [0, 1)")
    out = -t - np.log1p(-t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LocalMetric:
    """Inverse Fisher information at an anchor mean parameter."""

    F: np.ndarray
    anchor: np.ndarray

    @classmethod
    def at(cls, fam, mu_star):
        mu_star = check_mean(fam, np.asarray(mu_star, dtype=float).reshape(-1))
        return cls(fam.fisher_inverse_at(mu_star), mu_star)


def local_norm(metric, mu):
    diff = np.asarray(mu, dtype=float) - metric.anchor
    return float(np.sqrt(max(diff @ metric.F @ diff, 0.0)))


@dataclass(frozen=True)
class Prop1Result:
    applicable: bool
    holds: bool
    lhs: float
    rhs: float


def _require_certified(fam):
    if fam.self_concordance_scale is None:
        raise DomainError(f"no self-concordance constant is certified for {fam.name}")
    return fam.self_concordance_scale


def prop1_check(fam, mu_star, mu):
    """Is B(mu*; mu) <= |mu - mu*|_F^2?  Only asserted when the norm is below 0.21."""
    _require_certified(fam)
    mu_star = check_mean(fam, np.asarray(mu_star, dtype=float).reshape(-1))
    mu = check_mean(fam, np.asarray(mu, dtype=float).reshape(-1))
    t = local_norm(LocalMetric.at(fam, mu_star), mu)
    lhs = float(fam.divergence_dual(mu_star, mu))
    applicable = t < PROP1_RADIUS
    return Prop1Result(applicable, bool(lhs <= t * t), lhs, t * t)


def prop1_chain(fam, mu_star, mu):
    """The intermediate inequalities of the certificate, evaluated on c * A*.

    c is the family's self-concordance scale, which makes c * A* standard
    self-concordant.  Returns (c B, omega*(|.|_mu), omega*(t/(1-t)), t^2) with
    local norms of c * A*, or None when t >= 1/2 and the chain is not defined.
    """
    c = _require_certified(fam)
    mu_star = np.asarray(mu_star, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    t = np.sqrt(c) * local_norm(LocalMetric.at(fam, mu_star), mu)
    s = np.sqrt(c) * local_norm(LocalMetric.at(fam, mu), mu_star)
    if t >= 0.5 or s >= 1:
        return None
    return (
        c * float(fam.divergence_dual(mu_star, mu)),
        omega_star(s),
        omega_star(t / (1 - t)),
        t * t,
    )


def self_concordance_ratio(func, x, direction, h):
    """|g'''(0)| / (2 g''(0)^{3/2}) for g(s) = func(x + s direction), by central differences."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    g = {k: float(func(x + k * h * v)) for k in (-2, -1, 0, 1, 2)}
    g2 = (-g[2] + 16 * g[1] - 30 * g[0] + 16 * g[-1] - g[-2]) / (12 * h * h)
    g3 = (g[2] - 2 * g[1] + 2 * g[-1] - g[-2]) / (2 * h**3)
    return abs(g3) / (2 * max(g2, 1e-300) ** 1.5)


def omega_crossing(lo=0.05, hi=0.4, xtol=1e-12):
    """Positive root of omega*(t/(1-t)) - t^2, located by bisection."""
    return optimize.bisect(lambda t: omega_star(t / (1 - t)) - t * t, lo, hi, xtol=xtol)


def quadratic_regime_threshold(d, kind="mle", n0=0.0, bias_norm=0.0):
    """Heuristic sample size after which the quadratic regime is expected.

    This is a condition on the expected local norm, not a certificate on the
    expected KL.
    """
    if d < 1:
        raise DomainError("need d >= 1")
    if kind == "mle":
        return 25.0 * d
    if kind == "map":
        return max(0.0, 25.0 * d + 5.0 * bias_norm - n0)
    raise DomainError(f"unknown estimator kind {kind!r}")
