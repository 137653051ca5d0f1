"""Concrete exponential families with exact samplers for T(X)."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, xlogy

from .core import DOMAIN_EPS, ExponentialFamily, as_shape, phi


class QuadraticFamily(ExponentialFamily):
    """Unit-covariance Gaussian location model: A(theta) = |theta|^2 / 2."""

    self_concordance_scale = 1.0

    def __init__(self, d=1):
        self.dim = int(d)
        self.name = "quadratic" if d == 1 else f"quadratic:{d}"

    def log_partition(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 0.5 * np.sum(theta * theta, axis=-1)

    entropy = log_partition

    def to_mean(self, theta):
        return np.array(theta, dtype=float)

    to_natural = to_mean

    def fisher_inverse_at(self, mu):
        return np.eye(self.dim)

    def in_theta(self, theta, eps=DOMAIN_EPS):
        return np.all(np.isfinite(theta), axis=-1)

    in_m = in_theta

    def entropy_closure(self, mu):
        return self.entropy(mu)

    def divergence_primal(self, theta, theta0):
        diff = np.asarray(theta, dtype=float) - np.asarray(theta0, dtype=float)
        return 0.5 * np.sum(diff * diff, axis=-1)

    divergence_dual = divergence_primal

    def sample_suffstat(self, theta, rng, size=None):
        size = as_shape(size)
        return np.asarray(theta, dtype=float) + rng.standard_normal(size + (self.dim,))

    def sample_suffstat_sum(self, theta, n, rng, size=()):
        size = as_shape(size)
        z = rng.standard_normal(size + (self.dim,))
        return n * np.asarray(theta, dtype=float) + np.sqrt(n) * z

    def default_mean(self):
        return np.zeros(self.dim)

    def random_mean(self, rng):
        return rng.normal(0.0, 2.0, size=self.dim)


class GammaKnownShapeFamily(ExponentialFamily):
    """Gamma(alpha, rate) with known shape; T(x) = x, theta = -rate.

    alpha = 1/2 is the Gaussian-variance model (T = x^2 with x ~ N(0, sigma^2)),
    alpha = 1 the exponential model.
    """

    dim = 1

    def __init__(self, alpha=0.5, name=None):
        if not alpha > 0:
            raise ValueError("shape alpha must be positive")
        self.alpha = float(alpha)
        self.name = name or f"gamma:{alpha:g}"
        # c * (-alpha log mu) has third/second-derivative ratio 2 / sqrt(c alpha)
        self.self_concordance_scale = max(1.0, 1.0 / self.alpha)

    def log_partition(self, theta):
        return -self.alpha * np.log(-np.asarray(theta, dtype=float)[..., 0])

    def entropy(self, mu):
        return -self.alpha * np.log(np.asarray(mu, dtype=float)[..., 0])

    def to_mean(self, theta):
        return self.alpha / (-np.asarray(theta, dtype=float))

    def to_natural(self, mu):
        return -self.alpha / np.asarray(mu, dtype=float)

    def fisher_inverse_at(self, mu):
        mu = float(np.asarray(mu, dtype=float).reshape(-1)[0])
        return np.array([[self.alpha / mu**2]])

    def in_theta(self, theta, eps=DOMAIN_EPS):
        return np.asarray(theta, dtype=float)[..., 0] < -eps

    def in_m(self, mu, eps=DOMAIN_EPS):
        return np.asarray(mu, dtype=float)[..., 0] > eps

    def boundary_point(self, mu):
        return np.zeros(1)

    def divergence_primal(self, theta, theta0):
        ratio = np.asarray(theta, dtype=float)[..., 0] / np.asarray(theta0, dtype=float)[..., 0]
        return self.alpha * phi(ratio)

    def divergence_dual(self, mu_a, mu_b):
        ratio = np.asarray(mu_a, dtype=float)[..., 0] / np.asarray(mu_b, dtype=float)[..., 0]
        return self.alpha * phi(ratio)

    def sample_suffstat(self, theta, rng, size=None):
        size = as_shape(size)
        rate = -float(np.asarray(theta).reshape(-1)[0])
        return rng.gamma(self.alpha, 1.0 / rate, size=size + (1,))

    def sample_suffstat_sum(self, theta, n, rng, size=()):
        # a sum of n independent Gamma(alpha, rate) is Gamma(n alpha, rate)
        size = as_shape(size)
        rate = -float(np.asarray(theta).reshape(-1)[0])
        if n == 0:
            return np.zeros(size + (1,))
        return rng.gamma(n * self.alpha, 1.0 / rate, size=size + (1,))

    def mle_risk_diverges(self, n):
        return n * self.alpha <= 1

    def default_mean(self):
        return np.ones(1)

    def random_mean(self, rng):
        return np.exp(rng.uniform(-2.0, 2.0, size=1))


class FullGaussian1DFamily(ExponentialFamily):
    """N(m, s2) with both parameters unknown; T(x) = (x, x^2)."""

    name = "full-gaussian-1d"
    dim = 2
    self_concordance_scale = 2.0

    @staticmethod
    def _split_mean(mu):
        mu = np.asarray(mu, dtype=float)
        return mu[..., 0], mu[..., 1] - mu[..., 0] ** 2

    def log_partition(self, theta):
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        return t1 * t1 / (-4.0 * t2) - 0.5 * np.log(-t2)

    def entropy(self, mu):
        _, v = self._split_mean(mu)
        return -0.5 * np.log(v)

    def to_mean(self, theta):
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        m = -t1 / (2.0 * t2)
        s2 = -1.0 / (2.0 * t2)
        return np.stack([m, m * m + s2], axis=-1)

    def to_natural(self, mu):
        m, v = self._split_mean(mu)
        return np.stack([m / v, -0.5 / v], axis=-1)

    def fisher_inverse_at(self, mu):
        m, v = (float(x) for x in self._split_mean(mu))
        return np.array([
            [1.0 / v + 2.0 * m * m / v**2, -m / v**2],
            [-m / v**2, 0.5 / v**2],
        ])

    def in_theta(self, theta, eps=DOMAIN_EPS):
        theta = np.asarray(theta, dtype=float)
        return np.isfinite(theta[..., 0]) & (theta[..., 1] < -eps)

    def in_m(self, mu, eps=DOMAIN_EPS):
        mu = np.asarray(mu, dtype=float)
        m, v = self._split_mean(mu)
        return np.isfinite(m) & (v > eps * np.maximum(1.0, np.abs(mu[..., 1])))

    def boundary_point(self, mu):
        # same mean, zero variance; the segment towards it scales v linearly
        m = float(np.asarray(mu, dtype=float)[0])
        return np.array([m, m * m])

    def divergence_dual(self, mu_a, mu_b):
        ma, va = self._split_mean(mu_a)
        mb, vb = self._split_mean(mu_b)
        return 0.5 * (phi(va / vb) + (ma - mb) ** 2 / vb)

    def divergence_primal(self, theta, theta0):
        return self.divergence_dual(self.to_mean(theta0), self.to_mean(theta))

    def _moments(self, theta):
        m, second = self.to_mean(np.asarray(theta, dtype=float))
        return m, second - m * m

    def sample_suffstat(self, theta, rng, size=None):
        size = as_shape(size)
        m, s2 = self._moments(theta)
        x = m + np.sqrt(s2) * rng.standard_normal(size)
        return np.stack([x, x * x], axis=-1)

    def sample_suffstat_sum(self, theta, n, rng, size=()):
        # sum x = n m + sqrt(n s2) z, and sum (x - xbar)^2 ~ s2 chi2_{n-1}, independent
        size = as_shape(size)
        if n == 0:
            return np.zeros(size + (2,))
        m, s2 = self._moments(theta)
        sx = n * m + np.sqrt(n * s2) * rng.standard_normal(size)
        ss = s2 * rng.chisquare(n - 1, size=size) if n > 1 else np.zeros(size)
        return np.stack([sx, ss + sx * sx / n], axis=-1)

    def degenerate_nll(self, tbar, eps):
        """A(theta) - <theta, tbar> at mean m = tbar_1 and variance v_hat + eps."""
        v_hat = max(float(tbar[1] - tbar[0] ** 2), 0.0)
        s2 = v_hat + eps
        return 0.5 * np.log(2.0 * s2) + 0.5 * v_hat / s2

    def mle_risk_diverges(self, n):
        # E[1/s2_hat] is finite only with at least three residual degrees of freedom
        return n <= 3

    def default_mean(self):
        return np.array([0.0, 1.0])

    def random_mean(self, rng):
        m = rng.uniform(-2.0, 2.0)
        return np.array([m, m * m + np.exp(rng.uniform(-2.0, 2.0))])


class CategoricalFamily(ExponentialFamily):
    """Categorical on k classes in minimal coordinates; class k is the reference."""

    self_concordance_scale = None

    def __init__(self, k=3):
        if k < 2:
            raise ValueError("categorical family needs k >= 2")
        self.k = int(k)
        self.dim = self.k - 1
        self.name = f"categorical:{self.k}"

    @staticmethod
    def _full(mu):
        mu = np.asarray(mu, dtype=float)
        return np.concatenate([mu, 1.0 - mu.sum(axis=-1, keepdims=True)], axis=-1)

    def log_partition(self, theta):
        theta = np.asarray(theta, dtype=float)
        pad = np.zeros(theta.shape[:-1] + (1,))
        return logsumexp(np.concatenate([theta, pad], axis=-1), axis=-1)

    def entropy(self, mu):
        p = self._full(mu)
        return np.sum(xlogy(p, p), axis=-1)

    def entropy_closure(self, mu):
        p = self._full(mu)
        inside = np.all(p >= 0.0, axis=-1)
        return np.where(inside, np.sum(xlogy(p, np.where(p >= 0, p, 1.0)), axis=-1), np.inf)

    def to_mean(self, theta):
        theta = np.asarray(theta, dtype=float)
        pad = np.zeros(theta.shape[:-1] + (1,))
        full = np.concatenate([theta, pad], axis=-1)
        return np.exp(full - logsumexp(full, axis=-1, keepdims=True))[..., :-1]

    def to_natural(self, mu):
        p = self._full(mu)
        return np.log(p[..., :-1]) - np.log(p[..., -1:])

    def fisher_inverse_at(self, mu):
        p = self._full(np.asarray(mu, dtype=float).reshape(-1))
        return np.diag(1.0 / p[:-1]) + 1.0 / p[-1]

    def in_theta(self, theta, eps=DOMAIN_EPS):
        return np.all(np.isfinite(theta), axis=-1)

    def in_m(self, mu, eps=DOMAIN_EPS):
        return np.all(self._full(mu) > eps, axis=-1)

    def boundary_point(self, mu):
        # the vertex of the most likely class
        p = self._full(np.asarray(mu, dtype=float).reshape(-1))
        vertex = np.zeros(self.k)
        vertex[np.argmax(p)] = 1.0
        return vertex[:-1]

    def divergence_dual(self, mu_a, mu_b):
        pa, pb = self._full(mu_a), self._full(mu_b)
        return np.sum(xlogy(pa, pa) - xlogy(pa, pb), axis=-1)

    def divergence_primal(self, theta, theta0):
        return self.divergence_dual(self.to_mean(theta0), self.to_mean(theta))

    def _probs(self, theta):
        return self._full(self.to_mean(np.asarray(theta, dtype=float).reshape(-1)))

    def sample_suffstat(self, theta, rng, size=None):
        size = as_shape(size)
        return rng.multinomial(1, self._probs(theta), size=size)[..., :-1].astype(float)

    def sample_suffstat_sum(self, theta, n, rng, size=()):
        size = as_shape(size)
        return rng.multinomial(n, self._probs(theta), size=size)[..., :-1].astype(float)

    def mle_risk_diverges(self, n):
        # any finite sample misses some class with positive probability
        return True

    def default_mean(self):
        return np.full(self.dim, 1.0 / self.k)

    def random_mean(self, rng):
        return rng.dirichlet(np.ones(self.k))[:-1]


class GaussianCovarianceFamily(ExponentialFamily):
    """Zero-mean N(0, Sigma) in R^d with T(X) = X X^T.

    Mean coordinates are the upper triangle of Sigma (row-major).  Natural
    coordinates pair with them through tr(Theta X X^T), so off-diagonal
    natural coordinates are 2 * Theta_ij with Theta = -Sigma^{-1} / 2.
    """

    self_concordance_scale = 2.0

    def __init__(self, d=2):
        self.d = int(d)
        self.dim = self.d * (self.d + 1) // 2
        self.name = f"gaussian-cov:{self.d}"
        self._iu = np.triu_indices(self.d)
        self._offdiag = self._iu[0] != self._iu[1]

    # --- packing ------------------------------------------------------------
    def unpack(self, vec):
        vec = np.asarray(vec, dtype=float)
        mat = np.zeros(vec.shape[:-1] + (self.d, self.d))
        mat[..., self._iu[0], self._iu[1]] = vec
        mat[..., self._iu[1], self._iu[0]] = vec
        return mat

    def pack(self, mat):
        return np.asarray(mat, dtype=float)[..., self._iu[0], self._iu[1]]

    def _theta_matrix(self, theta):
        theta = np.array(theta, dtype=float)
        theta[..., self._offdiag] *= 0.5
        return self.unpack(theta)

    def _theta_vector(self, mat):
        vec = self.pack(mat)
        vec[..., self._offdiag] *= 2.0
        return vec

    # --- potentials -----------------------------------------------------------
    def log_partition(self, theta):
        _, logdet = np.linalg.slogdet(-2.0 * self._theta_matrix(theta))
        return -0.5 * logdet

    def entropy(self, mu):
        _, logdet = np.linalg.slogdet(self.unpack(mu))
        return -0.5 * logdet

    def to_mean(self, theta):
        return self.pack(np.linalg.inv(-2.0 * self._theta_matrix(theta)))

    def to_natural(self, mu):
        return self._theta_vector(-0.5 * np.linalg.inv(self.unpack(mu)))

    def fisher_inverse_at(self, mu):
        prec = np.linalg.inv(self.unpack(np.asarray(mu, dtype=float).reshape(-1)))
        basis = self.unpack(np.eye(self.dim))
        left = prec @ basis  # (p, d, d)
        # second derivative of -1/2 logdet along directions E_a, E_b
        return 0.5 * np.einsum("aij,bji->ab", left, left)

    def in_theta(self, theta, eps=DOMAIN_EPS):
        return self._spd(-2.0 * self._theta_matrix(theta), eps)

    def in_m(self, mu, eps=DOMAIN_EPS):
        return self._spd(self.unpack(mu), eps)

    @staticmethod
    def _spd(mat, eps):
        finite = np.all(np.isfinite(mat), axis=(-2, -1))
        mat = np.where(finite[..., None, None], mat, np.eye(mat.shape[-1]))
        eig = np.linalg.eigvalsh(mat)
        scale = np.maximum(1.0, np.abs(eig).max(axis=-1))
        return finite & (eig[..., 0] > eps * scale)

    def boundary_point(self, mu):
        # drop the smallest eigen-direction
        mat = self.unpack(np.asarray(mu, dtype=float).reshape(-1))
        w, v = np.linalg.eigh(mat)
        return self.pack(mat - w[0] * np.outer(v[:, 0], v[:, 0]))

    def divergence_dual(self, mu_a, mu_b):
        sa, sb = self.unpack(mu_a), self.unpack(mu_b)
        prod = np.linalg.solve(sb, sa)
        _, logdet = np.linalg.slogdet(prod)
        return 0.5 * (np.trace(prod, axis1=-2, axis2=-1) - self.d - logdet)

    def divergence_primal(self, theta, theta0):
        return self.divergence_dual(self.to_mean(theta0), self.to_mean(theta))

    def sample_suffstat(self, theta, rng, size=None):
        size = as_shape(size)
        chol = np.linalg.cholesky(self.unpack(self.to_mean(np.asarray(theta).reshape(-1))))
        x = rng.standard_normal(size + (self.d,)) @ chol.T
        return self.pack(x[..., :, None] * x[..., None, :])

    def degenerate_nll(self, tbar, eps):
        """A(theta) - <theta, tbar> at Sigma = tbar + eps I."""
        lam = np.clip(np.linalg.eigvalsh(self.unpack(tbar)), 0.0, None)
        return float(np.sum(0.5 * np.log(lam + eps) + 0.5 * lam / (lam + eps)))

    def mle_risk_diverges(self, n):
        return n <= self.d + 1

    def default_mean(self):
        return self.pack(np.eye(self.d))

    def random_mean(self, rng):
        g = rng.standard_normal((self.d, self.d))
        return self.pack(g @ g.T / self.d + 0.5 * np.eye(self.d))


def family_catalog():
    """Stable family identifiers mapped to constructors."""
    return {
        "quadratic": lambda: QuadraticFamily(1),
        "gaussian-variance": lambda: GammaKnownShapeFamily(0.5, name="gaussian-variance"),
        "exponential": lambda: GammaKnownShapeFamily(1.0, name="exponential"),
        "full-gaussian-1d": FullGaussian1DFamily,
        "categorical": lambda: CategoricalFamily(3),
        "gaussian-cov": lambda: GaussianCovarianceFamily(2),
    }


_PARAMETRIZED = {
    "quadratic": lambda arg: QuadraticFamily(int(arg)),
    "gamma": lambda arg: GammaKnownShapeFamily(float(arg)),
    "categorical": lambda arg: CategoricalFamily(int(arg)),
    "gaussian-cov": lambda arg: GaussianCovarianceFamily(int(arg)),
}


def get_family(family_id):
    """Build a family from an id such as ``gamma:0.5`` or ``gaussian-cov:3``."""
    key, sep, arg = str(family_id).partition(":")
    if sep:
        if key not in _PARAMETRIZED:
            raise KeyError(f"unknown family id {family_id!r}")
        try:
            return _PARAMETRIZED[key](arg)
        except ValueError as exc:
            raise KeyError(f"bad parameter in family id {family_id!r}: {exc}") from None
    catalog = family_catalog()
    if key not in catalog:
        raise KeyError(f"unknown family id {family_id!r}")
    return catalog[key]()
