"""Monte Carlo estimates of the expected KL of MLE/MAP and its bias-variance split."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import DomainError, check_natural
from .estimators import PriorHyper, map_from_sums, mle_from_sums
from .parallel import BLOCK_SIZE, blocks, ordered_map, stream

Z90 = 1.6448536269514722
# leading stream keys that keep experiment families on disjoint streams
_BV_TAG = 0xB5
_LANDSCAPE_TAG = 0x1A


@dataclass(frozen=True)
class Estimator:
    kind: str = "mle"
    prior: PriorHyper | None = None

    def __post_init__(self):
        if self.kind not in ("mle", "map"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "map" and self.prior is None:
            raise ValueError("a MAP estimator needs a prior")

    @classmethod
    def mle(cls):
        return cls("mle")

    @classmethod
    def map(cls, n0, mu0):
        return cls("map", PriorHyper(n0, mu0))

    @property
    def label(self):
        return self.kind

    def from_sums(self, fam, sums, n):
        if self.kind == "mle":
            return mle_from_sums(fam, sums, n)
        return map_from_sums(fam, sums, n, self.prior)


@dataclass
class RiskEstimate:
    """Expected KL estimate.

    ``mean`` is +inf whenever the expectation diverges, either because some
    trials hit the boundary ("boundary") or because the family's theory says
    the expectation is infinite at this n ("analytic").  ``finite_mean`` and
    ``std_err`` always summarise the finite trials.
    """

    mean: float
    std_err: float
    trials: int
    infinite_fraction: float
    ci90: tuple
    finite_mean: float = float("nan")
    divergent: bool = False
    divergence_source: str | None = None

    def row(self):
        return {
            "mean": self.mean,
            "std_err": self.std_err,
            "lo90": self.ci90[0],
            "hi90": self.ci90[1],
            "infinite_fraction": self.infinite_fraction,
            "trials": self.trials,
        }


@dataclass
class BiasVariance:
    total: float
    bias: float
    variance: float
    primal_mean: np.ndarray
    dual_of_primal_mean: np.ndarray
    se_total: float = float("nan")
    se_bias: float = float("nan")
    se_variance: float = float("nan")
    trials: int = 0
    divergent: bool = False

    @property
    def combined_se(self):
        return float(np.sqrt(self.se_total**2 + self.se_bias**2 + self.se_variance**2))

    @property
    def residual(self):
        return self.total - self.bias - self.variance


@dataclass
class _Moments:
    """Streaming count/mean/M2 with an order-dependent but deterministic merge."""

    count: int = 0
    mean: np.ndarray | float = 0.0
    m2: np.ndarray | float = 0.0

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=float)
        if values.shape[0] == 0:
            return cls()
        mean = values.mean(axis=0)
        centred = values - mean
        if values.ndim == 1:
            m2 = float(centred @ centred)
        else:
            m2 = centred.T @ centred
        return cls(values.shape[0], mean, m2)

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = np.asarray(other.mean) - np.asarray(self.mean)
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + np.multiply.outer(delta, delta) * self.count * other.count / n
        return _Moments(n, mean, m2)

    @property
    def var(self):
        return self.m2 / (self.count - 1) if self.count > 1 else np.zeros_like(self.m2) * np.nan


# --- risk ----------------------------------------------------------------------

def _risk_block(task):
    fam, theta_star, estimator, n, seed, keys, size = task
    rng = stream(seed, *keys)
    mu_star = fam.to_mean(theta_star)
    sums = fam.sample_suffstat_sum(theta_star, n, rng, size=size)
    mu_hat, boundary = estimator.from_sums(fam, sums, n)
    safe = np.where(boundary[:, None], mu_star, mu_hat)
    loss = fam.divergence_dual(mu_star, safe)
    finite = ~boundary & np.isfinite(loss)
    return _Moments.of(loss[finite]), int(size - finite.sum())


def _summarise(fam, n, estimator, parts, trials):
    acc, n_inf = _Moments(), 0
    for mom, inf in parts:
        acc = acc.merge(mom)
        n_inf += inf
    finite_mean = float(acc.mean) if acc.count else float("nan")
    se = float(np.sqrt(acc.var / acc.count)) if acc.count > 1 else float("nan")
    inf_frac = n_inf / trials
    source = None
    if n_inf > 0:
        source = "boundary"
    elif estimator.kind == "mle" and fam.mle_risk_diverges(n):
        source = "analytic"
    if source:
        return RiskEstimate(float("inf"), se, trials, inf_frac, (finite_mean - Z90 * se, float("inf")),
                            finite_mean, True, source)
    return RiskEstimate(finite_mean, se, trials, inf_frac, (finite_mean - Z90 * se, finite_mean + Z90 * se),
                        finite_mean)


def _risk_tasks(fam, theta_star, estimator, n, trials, seed, key):
    return [(fam, theta_star, estimator, n, seed, (*key, n, b), size) for b, size in blocks(trials)]


def _validate(fam, theta_star, estimator, trials):
    theta_star = check_natural(fam, np.asarray(theta_star, dtype=float).reshape(-1))
    if trials < 1:
        raise DomainError("at least one trial is required")
    if estimator.kind == "mle" and estimator.prior is not None:
        raise DomainError("MLE takes no prior")
    return theta_star


def estimate_risk(fam, theta_star, estimator, n, trials, seed, workers=1, key=()):
    """MC estimate of E[KL(p_theta* || p_hat)] over datasets of size n."""
    theta_star = _validate(fam, theta_star, estimator, trials)
    if n < 1:
        raise DomainError("n must be at least 1")
    tasks = _risk_tasks(fam, theta_star, estimator, n, trials, seed, key)
    return _summarise(fam, n, estimator, ordered_map(_risk_block, tasks, workers), trials)


def risk_curve(fam, theta_star, estimator, n_grid, trials, seed, workers=1, key=()):
    """One estimate per n with per-n streams derived from a common seed."""
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])) or n_grid[0] < 1:
        raise DomainError("n grid must be nonempty, positive and strictly increasing")
    theta_star = _validate(fam, theta_star, estimator, trials)
    tasks, owners = [], []
    for n in n_grid:
        chunk = _risk_tasks(fam, theta_star, estimator, n, trials, seed, key)
        tasks += chunk
        owners += [n] * len(chunk)
    parts = ordered_map(_risk_block, tasks, workers)
    out = []
    for n in n_grid:
        mine = [p for p, o in zip(parts, owners) if o == n]
        out.append((n, _summarise(fam, n, estimator, mine, trials)))
    return out


# --- bias / variance -------------------------------------------------------------

def _draw_estimates(fam, theta_star, estimator, n, seed, keys, size):
    rng = stream(seed, *keys)
    sums = fam.sample_suffstat_sum(theta_star, n, rng, size=size)
    return estimator.from_sums(fam, sums, n)


def _primal_block(task):
    fam, theta_star, estimator, n, seed, keys, size = task
    mu_hat, boundary = _draw_estimates(fam, theta_star, estimator, n, seed, keys, size)
    if boundary.any():
        return None
    return _Moments.of(fam.to_natural(mu_hat))


def _split_block(task, mu_tilde):
    fam, theta_star, estimator, n, seed, keys, size = task
    mu_star = fam.to_mean(theta_star)
    mu_hat, _ = _draw_estimates(fam, theta_star, estimator, n, seed, keys, size)
    total = fam.divergence_dual(mu_star, mu_hat)
    var = fam.divergence_dual(mu_tilde, mu_hat)
    return _Moments.of(np.stack([total, var], axis=-1))


def bias_variance_mc(fam, theta_star, estimator, n, trials, seed, workers=1):
    """Split E[B(mu*; mu_hat)] at the primal mean theta_tilde = E[theta_hat].

    theta_tilde is estimated by averaging grad A*(mu_hat) over the trials; the
    same datasets are then regenerated from their streams to evaluate the
    total and the variance term.  The bias standard error uses the delta
    method, the gradient of B(mu*; grad A(theta)) in theta being
    grad A(theta) - mu*.
    """
    theta_star = _validate(fam, theta_star, estimator, trials)
    tasks = _risk_tasks(fam, theta_star, estimator, n, trials, seed, (_BV_TAG,))
    first = ordered_map(_primal_block, tasks, workers)
    if any(p is None for p in first):
        inf = float("inf")
        nan = np.full(fam.dim, np.nan)
        return BiasVariance(inf, inf, inf, nan, nan, trials=trials, divergent=True)
    acc = _Moments()
    for p in first:
        acc = acc.merge(p)
    theta_tilde = np.asarray(acc.mean, dtype=float)
    if not fam.in_theta(theta_tilde):
        raise DomainError("averaged natural parameter left Theta")
    mu_tilde = fam.to_mean(theta_tilde)
    mu_star = fam.to_mean(theta_star)
    bias = float(fam.divergence_dual(mu_star, mu_tilde))
    grad = mu_tilde - mu_star
    se_bias = float(np.sqrt(max(grad @ np.atleast_2d(acc.var) @ grad, 0.0) / trials))

    second = ordered_map(partial(_split_block, mu_tilde=mu_tilde), tasks, workers)
    acc2 = _Moments()
    for p in second:
        acc2 = acc2.merge(p)
    se = np.sqrt(np.diag(acc2.var) / trials)
    return BiasVariance(
        float(acc2.mean[0]), bias, float(acc2.mean[1]), theta_tilde, mu_tilde,
        float(se[0]), se_bias, float(se[1]), trials,
    )


# --- prior landscape ---------------------------------------------------------------

def _landscape_block(task):
    fam, theta_star, n, n0_grid, mu0_grid, seed, keys, size = task
    rng = stream(seed, *keys)
    mu_star = fam.to_mean(theta_star)
    sums = fam.sample_suffstat_sum(theta_star, n, rng, size=size)[:, 0]
    n0 = np.asarray(n0_grid, dtype=float)[:, None, None]
    mu0 = np.asarray(mu0_grid, dtype=float)[None, :, None]
    mu_hat = (n0 * mu0 + sums[None, None, :]) / (n0 + n)
    loss = fam.divergence_dual(mu_star[None, None, None, :], mu_hat[..., None])
    return loss.sum(axis=-1), (loss * loss).sum(axis=-1)


def prior_landscape(fam, theta_star, n, n0_grid, mu0_grid, trials, seed, workers=1):
    """MAP risk on an (n0, mu0) grid for a one-dimensional family.

    All grid points reuse the same datasets, so the landscape is smooth in the
    prior and the location of its valley is not blurred by independent noise.
    Returns (risk, std_err), each of shape (len(n0_grid), len(mu0_grid)).
    """
    theta_star = check_natural(fam, np.asarray(theta_star, dtype=float).reshape(-1))
    if fam.dim != 1:
        raise DomainError("prior landscape is defined for one-dimensional families")
    tasks = [(fam, theta_star, n, tuple(n0_grid), tuple(mu0_grid), seed, (_LANDSCAPE_TAG, n, b), size)
             for b, size in blocks(trials, 1024)]
    total = np.zeros((len(n0_grid), len(mu0_grid)))
    total_sq = np.zeros_like(total)
    for s, sq in ordered_map(_landscape_block, tasks, workers):
        total += s
        total_sq += sq
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return mean, np.sqrt(var / trials)


__all__ = [
    "BLOCK_SIZE", "BiasVariance", "Estimator", "RiskEstimate", "bias_variance_mc",
    "estimate_risk", "prior_landscape", "risk_curve",
]
