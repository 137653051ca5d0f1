"""Exponential-family duality: mirror maps, Bregman divergences and KL.

Every family implements :class:`ExponentialFamily`.  Parameters are plain
numpy arrays whose last axis has length ``fam.dim``; leading axes are batch
axes and all family methods broadcast over them.
"""

from __future__ import annotations

import numpy as np

# Strict-interior margin used by every domain predicate.
DOMAIN_EPS = 1e-12

NaturalParam = np.ndarray
MeanParam = np.ndarray


class DomainError(ValueError):
    """A parameter lies outside (or on the boundary of) its open domain."""


class NumericalFailure(ArithmeticError):
    """A numerical routine did not reach its target accuracy."""

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


def phi(z):
    """``z - 1 - log z``, accurate near ``z = 1``."""
    z = np.asarray(z, dtype=float)
    e = z - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = e - np.log1p(e)
    # alternating series of -log1p(e) + e for small |e|
    series = np.zeros_like(e)
    p = e * e
    for k in range(2, 12):
        series = series + (1.0 if k % 2 == 0 else -1.0) * p / k
        p = p * e
    out = np.where(np.abs(e) < 1e-2, series, direct)
    return out if out.ndim else float(out)


def bregman(func, grad, x, y):
    """Generic ``F(x) - F(y) - <grad F(y), x - y>`` over the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return func(x) - func(y) - np.sum(grad(y) * (x - y), axis=-1)


class ExponentialFamily:
    """Base class bundling log-partition, entropy and their gradients.

    Subclasses provide ``log_partition``, ``entropy``, ``to_mean``,
    ``to_natural``, ``fisher_inverse_at``, the domain predicates and a sampler
    for the sufficient statistic.  Constants are dropped from both ``A`` and
    ``A*``; Bregman divergences do not see them.
    """

    name = "abstract"
    dim = 0
    # c such that c * A* is self-concordant with the standard constant 2;
    # None when no constant is certified for the family.
    self_concordance_scale: float | None = None

    # --- potentials -----------------------------------------------------
    def log_partition(self, theta):
        raise NotImplementedError

    def entropy(self, mu):
        raise NotImplementedError

    def to_mean(self, theta):
        raise NotImplementedError

    def to_natural(self, mu):
        raise NotImplementedError

    def fisher_inverse_at(self, mu):
        """Hessian of the entropy at a single mean parameter, shape (d, d)."""
        raise NotImplementedError

    def log_partition_hessian(self, theta):
        """Covariance of T under ``theta``; the inverse of ``fisher_inverse_at``."""
        return np.linalg.inv(self.fisher_inverse_at(self.to_mean(theta)))

    # --- domains ----------------------------------------------------------
    def in_theta(self, theta, eps=DOMAIN_EPS):
        raise NotImplementedError

    def in_m(self, mu, eps=DOMAIN_EPS):
        raise NotImplementedError

    def entropy_closure(self, mu):
        """Entropy extended to the closure of M (``+inf`` on barrier faces)."""
        mu = np.asarray(mu, dtype=float)
        inside = self.in_m(mu, eps=0.0)
        safe = np.where(np.expand_dims(inside, -1), mu, self.default_mean())
        return np.where(inside, self.entropy(safe), np.inf)

    def boundary_point(self, mu):
        """A point of the boundary of M reached by moving away from ``mu``.

        ``None`` when M has no boundary.
        """
        return None

    # --- sampling ---------------------------------------------------------
    def sample_suffstat(self, theta, rng, size=None):
        """Independent draws of T(X), X ~ p_theta, shape ``(*size, d)``."""
        raise NotImplementedError

    def sample_suffstat_sum(self, theta, n, rng, size=()):
        """Draws of ``sum_{i<=n} T(X_i)``, shape ``(*size, d)``.

        The default sums explicit draws in chunks; families whose summed
        statistic has a closed-form law override this.
        """
        size = as_shape(size)
        total = np.zeros(size + (self.dim,))
        count = int(np.prod(size)) if size else 1
        chunk = max(1, 2_000_000 // max(1, count * self.dim))
        done = 0
        while done < n:
            m = min(chunk, n - done)
            draws = self.sample_suffstat(theta, rng, size=size + (m,))
            total += draws.sum(axis=-2)
            done += m
        return total

    # --- divergences ------------------------------------------------------
    def divergence_primal(self, theta, theta0):
        """B_A(theta; theta0).  Override with a closed form when one is stable."""
        return bregman(self.log_partition, self.to_mean, theta, theta0)

    def divergence_dual(self, mu_a, mu_b):
        """B_{A*}(mu_a; mu_b) = KL(p_{mu_a} || p_{mu_b})."""
        return bregman(self.entropy, self.to_natural, mu_a, mu_b)

    # --- theory hooks -----------------------------------------------------
    def mle_risk_diverges(self, n):
        """True when the expected KL of the MLE from ``n`` samples is infinite."""
        return False

    def default_mean(self):
        raise NotImplementedError

    def random_mean(self, rng):
        """A random interior mean parameter, for property tests and smd-check."""
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def as_shape(size):
    """Normalise a numpy-style ``size`` argument to a tuple."""
    if size is None:
        return ()
    if np.ndim(size) == 0:
        return (int(size),)
    return tuple(int(s) for s in size)


def _require(mask, what):
    if not np.all(mask):
        raise DomainError(f"{what} outside the open domain")


def check_natural(fam, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (fam.dim,):
        raise DomainError(f"expected natural parameter of length {fam.dim}, got shape {theta.shape}")
    _require(fam.in_theta(theta), "natural parameter")
    return theta


def check_mean(fam, mu):
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1:] != (fam.dim,):
        raise DomainError(f"expected mean parameter of length {fam.dim}, got shape {mu.shape}")
    _require(fam.in_m(mu), "mean parameter")
    return mu


def _as_real(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def bregman_primal(fam, theta, theta0, generic=False):
    """B_A(theta; theta0) for natural parameters in Theta.

    ``generic=True`` forces the textbook formula instead of the family's
    closed form; tests use it to cross-check the two routes.
    """
    theta = check_natural(fam, theta)
    theta0 = check_natural(fam, theta0)
    if generic:
        return _as_real(bregman(fam.log_partition, fam.to_mean, theta, theta0))
    return _as_real(fam.divergence_primal(theta, theta0))


def bregman_dual(fam, mu_star, mu, generic=False):
    """B_{A*}(mu_star; mu).  A boundary-marker estimate maps to ``+inf``."""
    if getattr(mu, "is_boundary", False):
        check_mean(fam, mu_star)
        return float("inf")
    mu_star = check_mean(fam, mu_star)
    mu = check_mean(fam, mu)
    if generic:
        return _as_real(bregman(fam.entropy, fam.to_natural, mu_star, mu))
    return _as_real(fam.divergence_dual(mu_star, mu))


def kl(fam, theta_star, theta):
    """KL(p_{theta_star} || p_theta), evaluated as B_A(theta; theta_star)."""
    return bregman_primal(fam, theta, theta_star)


def symmetrized_bregman(fam, mu1, mu2):
    """B_{A*}(mu1; mu2) + B_{A*}(mu2; mu1)."""
    mu1 = check_mean(fam, mu1)
    mu2 = check_mean(fam, mu2)
    return _as_real(fam.divergence_dual(mu1, mu2) + fam.divergence_dual(mu2, mu1))


def symmetrized_inner(fam, mu1, mu2):
    """The same quantity as an inner product of primal and dual differences."""
    mu1 = check_mean(fam, mu1)
    mu2 = check_mean(fam, mu2)
    diff = fam.to_natural(mu1) - fam.to_natural(mu2)
    return _as_real(np.sum(diff * (mu1 - mu2), axis=-1))
