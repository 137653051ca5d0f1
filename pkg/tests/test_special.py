import math

import mpmath
import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings, strategies as st

from expfam_lab import DomainError, NumericalFailure
from expfam_lab.special import (QuadratureConfig, digamma, gen_exp_integral, multivariate_digamma,
                                scaled_gen_exp_integral)

import oracles

EULER = 0.57721566490153286


def test_digamma_examples():
    assert digamma(1.0) == pytest.approx(-EULER, abs=1e-13)
    assert digamma(5.0) == pytest.approx(1 + 1 / 2 + 1 / 3 + 1 / 4 - EULER, abs=1e-13)
    assert digamma(5.0) == pytest.approx(1.50611766843, abs=1e-11)
    assert digamma(1.5) == pytest.approx(2 - EULER - 2 * math.log(2), abs=1e-13)


def test_digamma_against_scipy_on_a_wide_grid():
    x = np.concatenate([np.geomspace(1e-3, 1e6, 4000), np.linspace(0.5, 20, 997)])
    assert np.max(np.abs(digamma(x) - sc.digamma(x)) / np.maximum(1, np.abs(sc.digamma(x)))) <= 1e-13


def test_digamma_sandwich_on_random_points():
    x = np.random.default_rng(0).uniform(0.05, 1e4, size=10_000)
    psi = digamma(x)
    assert np.all(np.log(x) - 1 / x <= psi)
    assert np.all(psi <= np.log(x) - 1 / (2 * x))


@settings(max_examples=300, deadline=None)
@given(x=st.floats(1e-3, 1e5))
def test_digamma_recurrence(x):
    assert digamma(x + 1) == pytest.approx(digamma(x) + 1 / x, abs=1e-12 * max(1.0, 1 / x))


def test_digamma_rejects_nonpositive():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            digamma(bad)


def test_multivariate_digamma():
    assert multivariate_digamma(1, 3.3) == pytest.approx(digamma(3.3))
    assert multivariate_digamma(2, 5) == pytest.approx(digamma(5) + digamma(4.5))
    assert multivariate_digamma(3, 5) == pytest.approx(digamma(5) + digamma(4.5) + digamma(4))
    assert multivariate_digamma(3, 5) == pytest.approx(float(mpmath.digamma(5) + mpmath.digamma(4.5) + mpmath.digamma(4)),
                                                       abs=1e-13)
    with pytest.raises(DomainError):
        multivariate_digamma(3, 1.0)
    with pytest.raises(DomainError):
        multivariate_digamma(0, 1.0)


def test_exp_integral_example():
    assert gen_exp_integral(1, 1.0) == pytest.approx(0.21938393439552, rel=1e-11)
    # recurrence with E_2(1): 1 * E_2(1) + 1 * E_1(1) = e^{-1}
    assert gen_exp_integral(2, 1.0) + gen_exp_integral(1, 1.0) == pytest.approx(math.exp(-1), rel=1e-10)
    assert math.e * gen_exp_integral(3, 1.0) <= 1 / 3


@pytest.mark.parametrize("k", [0.5, 1.0, 2.5, 5.0, 10.0, 20.0])
@pytest.mark.parametrize("z", [0.01, 0.1, 0.7, 1.0, 5.0, 20.0, 50.0])
def test_exp_integral_against_mpmath_and_recurrence(k, z):
    got = gen_exp_integral(k, z)
    assert got == pytest.approx(oracles.expint_mp(k, z), rel=2e-9)
    # k E_{k+1}(z) + z E_k(z) = e^{-z}, in scaled form k e^z E_{k+1} + z e^z E_k = 1
    residual = k * scaled_gen_exp_integral(k + 1, z) + z * scaled_gen_exp_integral(k, z) - 1
    assert abs(residual) <= 10 * QuadratureConfig().rel_tol
    if k > 1:
        assert scaled_gen_exp_integral(k, z) <= 1 / (z + k - 1)


def test_recurrence_residual_example():
    k, z = 2.5, 0.7
    assert abs(k * gen_exp_integral(k + 1, z) + z * gen_exp_integral(k, z) - math.exp(-z)) <= 1e-10


def test_scaled_form_survives_large_arguments():
    # e^{-z} underflows but the scaled value is ~ 1/(z + k)
    v = scaled_gen_exp_integral(3.0, 800.0)
    assert v == pytest.approx(float(mpmath.exp(800) * mpmath.expint(3, 800)), rel=1e-9)


def test_domain_and_config_errors():
    with pytest.raises(DomainError):
        gen_exp_integral(0.0, 1.0)
    with pytest.raises(DomainError):
        gen_exp_integral(1.0, 0.0)
    for bad in (0.0, 1e-3, -1.0):
        with pytest.raises(ValueError):
            QuadratureConfig(rel_tol=bad)
    with pytest.raises(ValueError):
        QuadratureConfig(max_depth=0)


def test_nonconvergence_reports_the_achieved_error():
    with pytest.raises(NumericalFailure) as info:
        scaled_gen_exp_integral(0.5, 1e-6, QuadratureConfig(rel_tol=1e-12, max_depth=1))
    assert info.value.achieved_error is not None and info.value.achieved_error > 0
