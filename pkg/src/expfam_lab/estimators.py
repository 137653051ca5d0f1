"""MLE, conjugate MAP, the conjugate prior and the stochastic mirror descent runner."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, NumericalFailure, bregman_primal, check_mean, check_natural


@dataclass(frozen=True)
class PriorHyper:
    """Conjugate prior: n0 fictive points with mean statistic mu0."""

    n0: float
    mu0: np.ndarray

    def __post_init__(self):
        if not self.n0 >= 0:
            raise DomainError("prior pseudo-count n0 must be nonnegative")
        object.__setattr__(self, "mu0", np.asarray(self.mu0, dtype=float).reshape(-1))


@dataclass
class Dataset:
    """n observed sufficient statistics, stored as an (n, d) array."""

    suffstats: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.suffstats, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        self.suffstats = arr

    @property
    def n(self):
        return self.suffstats.shape[0]

    @classmethod
    def draw(cls, fam, theta, n, rng):
        return cls(fam.sample_suffstat(theta, rng, size=n))


@dataclass(frozen=True)
class Boundary:
    """An estimate that fell on the boundary of M (KL to it is infinite)."""

    value: np.ndarray
    is_boundary: bool = True


@dataclass
class SmdTrajectory:
    iterates: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)

    @property
    def final(self):
        return self.iterates[-1]


def _check_dims(fam, data):
    if data.n and data.suffstats.shape[1] != fam.dim:
        raise DomainError(f"data has dimension {data.suffstats.shape[1]}, family has {fam.dim}")


def mle(fam, data):
    """Moment matching: the mean of the sufficient statistics, or a Boundary marker."""
    _check_dims(fam, data)
    if data.n == 0:
        raise DomainError("MLE needs at least one observation")
    mu = data.suffstats.mean(axis=0)
    if not fam.in_m(mu):
        return Boundary(mu)
    return mu


def map_estimate(fam, data, prior):
    """Conjugate MAP in mean coordinates: (n0 mu0 + sum T) / (n0 + n)."""
    _check_dims(fam, data)
    if prior.n0 == 0:
        return mle(fam, data)
    check_mean(fam, prior.mu0)
    total = prior.n0 * prior.mu0 + data.suffstats.sum(axis=0)
    return total / (prior.n0 + data.n)


def conjugate_prior_log_density(fam, theta, prior):
    """log p(theta) up to a constant: -n0 B_A(theta; grad A*(mu0))."""
    if not prior.n0 > 0:
        raise DomainError("conjugate prior needs n0 > 0")
    theta0 = fam.to_natural(check_mean(fam, prior.mu0))
    return -prior.n0 * bregman_primal(fam, theta, theta0)


def _step_sizes(n0, n):
    return [1.0 / (n0 + k) for k in range(1, n + 1)]


def smd_run(fam, data, prior):
    """Mirror descent in mean coordinates: mu_k = mu_{k-1} - gamma_k (mu_{k-1} - T_k)."""
    _check_dims(fam, data)
    if not prior.n0 > 0:
        raise DomainError("SMD needs n0 > 0 so that the first step stays inside M")
    mu = check_mean(fam, prior.mu0).copy()
    traj = SmdTrajectory([mu.copy()], [])
    for gamma, t in zip(_step_sizes(prior.n0, data.n), data.suffstats):
        mu = mu - gamma * (mu - t)
        if not fam.in_m(mu):
            raise NumericalFailure("SMD iterate left the mean domain")
        traj.iterates.append(mu.copy())
        traj.step_sizes.append(gamma)
    return traj


def stochastic_gradient(fam, theta, t):
    """Gradient of the one-sample negative log-likelihood: grad A(theta) - T."""
    return fam.to_mean(theta) - t


def smd_run_primal(fam, data, prior):
    """The same recursion written through the mirror map.

    Each step evaluates g_k = grad A(theta_{k-1}) - T_k, takes the dual step
    grad A*(theta_k) = grad A(theta_{k-1}) - gamma_k g_k and maps back with
    grad A*.  Returns the natural parameters theta_0..theta_n.
    """
    _check_dims(fam, data)
    if not prior.n0 > 0:
        raise DomainError("SMD needs n0 > 0 so that the first step stays inside M")
    theta = fam.to_natural(check_mean(fam, prior.mu0))
    out = [theta]
    for gamma, t in zip(_step_sizes(prior.n0, data.n), data.suffstats):
        dual = fam.to_mean(theta) - gamma * stochastic_gradient(fam, theta, t)
        if not fam.in_m(dual):
            raise NumericalFailure("SMD iterate left the mean domain")
        theta = check_natural(fam, fam.to_natural(dual))
        out.append(theta)
    return out


# --- batched forms used by the Monte Carlo engine ---------------------------

def mle_from_sums(fam, sums, n):
    """Batched MLE from summed statistics; second output flags boundary estimates."""
    mu = np.asarray(sums, dtype=float) / n
    return mu, ~fam.in_m(mu)


def map_from_sums(fam, sums, n, prior):
    if prior.n0 == 0:
        return mle_from_sums(fam, sums, n)
    mu = (prior.n0 * prior.mu0 + np.asarray(sums, dtype=float)) / (prior.n0 + n)
    return mu, ~fam.in_m(mu)
