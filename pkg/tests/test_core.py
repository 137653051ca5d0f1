import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expfam_lab import (DomainError, FullGaussian1DFamily, GammaKnownShapeFamily, QuadraticFamily, bregman_dual,
                        bregman_primal, get_family, kl, symmetrized_bregman, symmetrized_inner)
from expfam_lab.core import phi
from expfam_lab.estimators import Boundary

from conftest import FAMILY_IDS

GV = GammaKnownShapeFamily(0.5)
HALF_PHI_HALF = 0.5 * (0.5 - 1 - math.log(0.5))  # 0.09657...


def test_bregman_primal_examples():
    q = QuadraticFamily(1)
    assert bregman_primal(q, [1.0], [0.0]) == pytest.approx(0.5)
    assert bregman_primal(GV, [-1.0], [-2.0]) == pytest.approx(HALF_PHI_HALF, rel=1e-12)
    assert HALF_PHI_HALF == pytest.approx(0.09657, abs=1e-5)


def test_bregman_dual_examples():
    assert bregman_dual(GV, [1.0], [2.0]) == pytest.approx(HALF_PHI_HALF, rel=1e-12)
    fg = FullGaussian1DFamily()
    assert bregman_dual(fg, [0.0, 1.0], [0.0, 2.0]) == pytest.approx(HALF_PHI_HALF, rel=1e-12)
    assert bregman_dual(fg, [0.0, 1.0], [0.0, 2.0], generic=True) == pytest.approx(HALF_PHI_HALF, rel=1e-12)


def test_kl_examples():
    assert kl(QuadraticFamily(1), [0.0], [1.0]) == pytest.approx(0.5)
    assert kl(GV, [-0.5], [-0.25]) == pytest.approx(HALF_PHI_HALF, rel=1e-12)


@pytest.mark.parametrize("fid", FAMILY_IDS)
def test_divergences_vanish_on_the_diagonal(fid):
    fam = get_family(fid)
    mu = fam.default_mean()
    theta = fam.to_natural(mu)
    assert bregman_dual(fam, mu, mu) == 0.0
    assert abs(bregman_primal(fam, theta, theta)) <= 1e-15
    assert abs(kl(fam, theta, theta)) <= 1e-15
    assert symmetrized_bregman(fam, mu, mu) == 0.0


def test_symmetrized_examples():
    assert symmetrized_bregman(GV, [1.0], [2.0]) == pytest.approx(0.25, rel=1e-12)
    assert symmetrized_inner(GV, [1.0], [2.0]) == pytest.approx(0.25, rel=1e-12)
    q = QuadraticFamily(2)
    a, b = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    assert symmetrized_bregman(q, a, b) == pytest.approx(2 * bregman_dual(q, a, b))


@pytest.mark.parametrize("fid", FAMILY_IDS)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_symmetrized_bregman_is_an_inner_product(fid, seed):
    fam = get_family(fid)
    rng = np.random.default_rng(seed)
    a, b = fam.random_mean(rng), fam.random_mean(rng)
    s = symmetrized_bregman(fam, a, b)
    assert s == pytest.approx(symmetrized_inner(fam, a, b), rel=1e-9, abs=1e-12)


def test_domain_violations_are_rejected():
    with pytest.raises(DomainError):
        bregman_dual(GV, [0.0], [1.0])
    with pytest.raises(DomainError):
        bregman_dual(GV, [1.0], [-1.0])
    with pytest.raises(DomainError):
        bregman_primal(GV, [0.5], [-1.0])
    with pytest.raises(DomainError):
        kl(FullGaussian1DFamily(), [0.0, 0.0], [0.0, -1.0])
    with pytest.raises(DomainError):
        bregman_dual(FullGaussian1DFamily(), [1.0, 1.0], [0.0, 1.0])
    with pytest.raises(DomainError):
        bregman_dual(GV, [1.0, 2.0], [1.0])


def test_boundary_estimate_has_infinite_divergence():
    assert bregman_dual(GV, [1.0], Boundary(np.zeros(1))) == math.inf
    with pytest.raises(DomainError):
        bregman_dual(GV, [0.0], Boundary(np.zeros(1)))


def test_divergence_grows_without_overflow_towards_the_barrier():
    vals = [bregman_dual(GV, [1.0], [10.0**-k]) for k in range(1, 12)]
    assert all(np.isfinite(vals)) and all(b > a for a, b in zip(vals, vals[1:]))


@settings(max_examples=200, deadline=None)
@given(z=st.floats(1e-6, 1e6))
def test_phi_matches_direct_formula(z):
    direct = z - 1 - math.log(z)
    assert phi(z) >= 0
    assert phi(z) == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_phi_is_accurate_near_one():
    e = 1e-9
    assert phi(1 + e) == pytest.approx(e * e / 2 - e**3 / 3, rel=1e-12)
