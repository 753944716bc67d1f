import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_tw.specfun import (
    GOLDEN,
    NotLocalizedError,
    almost_mathieu_eigen,
    bessel_table,
    harper_matrix,
    is_diophantine_candidate,
    mathieu_coeffs,
    participation_ratio,
    poly_generating_series,
    poly_sequence,
    poly_sequence_exact,
)
from oracles import bessel_j, mathieu_dense_alpha, poly_series_mpmath


@pytest.mark.parametrize("theta", [1e-6, 0.25, 1.0, 4.0, 16.0])
def test_bessel_matches_mpmath(theta):
    t = bessel_table(theta, 40)
    for n in range(0, 41, 3):
        ref = bessel_j(n, theta)
        assert abs(t.values[n] - ref) <= 1e-14 * max(abs(ref), 1e-300) + 1e-300 or abs(t.values[n] - ref) <= 1e-15


def test_bessel_theta_one_value():
    assert abs(bessel_table(1.0, 4).values[0] - 0.22389077914123567) <= 1e-15


@pytest.mark.parametrize("theta", [0.25, 1.0, 4.0])
def test_bessel_normalization(theta):
    assert bessel_table(theta, 64).normalization_error() <= 1e-12


def test_bessel_recurrence_residual():
    assert bessel_table(2.0, 60).recurrence_residual() <= 1e-12


def test_bessel_rejects_nonpositive():
    with pytest.raises(ValueError):
        bessel_table(0.0, 5)


def test_poly_first_terms():
    p = poly_sequence_exact(Fraction(1), 4)
    assert p == [1, 1, Fraction(-1, 2), Fraction(-7, 6), Fraction(5, 24)]


@pytest.mark.parametrize("theta", [1, Fraction(1, 3), 2])
def test_poly_exact_vs_series(theta):
    assert poly_sequence_exact(theta, 12) == poly_generating_series(theta, 12)


@pytest.mark.parametrize("theta", [1.0, 0.5, 3.0])
def test_poly_float_vs_mpmath_series(theta):
    ref = poly_series_mpmath(theta, 12)
    got = poly_sequence(theta, 12).values
    assert np.max(np.abs(got - np.array(ref))) <= 1e-12


def test_poly_theta_zero_periodic():
    p = poly_sequence(0.0, 8).values
    assert list(p[:5]) == [1.0, 0.0, -1.0, 0.0, 1.0]


@given(st.floats(0.05, 4.0))
def test_poly_bounded(theta):
    # |p_j| stays bounded: the recurrence is a perturbation of rotation by pi/2
    p = poly_sequence(theta, 2000).values
    assert np.all(np.isfinite(p))
    assert np.max(np.abs(p)) <= math.exp(theta * math.pi / 2) * 2


@pytest.mark.parametrize("beta,branch", [(1.0, 0), (5.0, 0), (-3.0, 0), (1.0, 1), (2.0, 2)])
def test_mathieu_alpha_vs_dense(beta, branch):
    c = mathieu_coeffs(beta, branch)
    assert abs(c.alpha - mathieu_dense_alpha(beta, branch)) <= 1e-12
    assert c.residual() <= 1e-12
    assert abs(c.b[0] ** 2 + 2 * np.sum(c.b[1:] ** 2) - 1) <= 1e-14


def test_mathieu_small_beta_limit():
    # beta -> 0: the first even branch tends to the constant function
    c = mathieu_coeffs(1e-6, 0)
    assert abs(c.alpha) <= 1e-12
    assert abs(c.b[0] - 1) <= 1e-10


def test_mathieu_beta_zero():
    with pytest.raises(ValueError, match="beta must be nonzero"):
        mathieu_coeffs(0.0)


def test_mathieu_decay():
    c = mathieu_coeffs(1.0, 0, 32)
    assert c.moment_tail(4) <= 1e-12


def test_harper_symmetric():
    h = harper_matrix(3.0, GOLDEN, 0.1, 5)
    assert np.array_equal(h, h.T)
    assert h.shape == (11, 11)


def test_diophantine_heuristic():
    assert is_diophantine_candidate(GOLDEN)
    assert not is_diophantine_candidate(0.5)
    assert not is_diophantine_candidate(3 / 7)


def test_participation_ratio_extremes():
    e = np.zeros(10)
    e[3] = 1
    assert participation_ratio(e) == pytest.approx(1.0)
    assert participation_ratio(np.ones(10) / math.sqrt(10)) == pytest.approx(10.0)


@pytest.fixture(scope="module")
def am():
    return almost_mathieu_eigen(10.0, GOLDEN, 0.3)


def test_almost_mathieu_localized(am):
    assert am.residual <= 1e-10
    assert abs(am.site(0)) == pytest.approx(np.max(np.abs(am.u)))
    lyap = math.log(10.0 / 2)
    assert abs(am.decay[1] - lyap) <= 0.5 * lyap
    assert am.decay[2] >= 0.95
    assert not am.flags


def test_almost_mathieu_reindexing_consistent(am):
    # the re-indexed vector satisfies the equation with the shifted phase
    n = np.arange(-20, 21)
    u = am.site(n)
    lhs = am.site(n + 1) + am.site(n - 1) + am.lam * np.cos(2 * np.pi * (n * am.theta_freq + am.alpha_phase)) * u
    assert np.max(np.abs(lhs - am.energy * u)) <= 1e-10


def test_almost_mathieu_delocalized_rejected():
    with pytest.raises(NotLocalizedError):
        almost_mathieu_eigen(1.5)


def test_almost_mathieu_rational_flagged():
    # 0.618 = 309/500: period longer than the box, so localized vectors still appear
    ev = almost_mathieu_eigen(10.0, 0.618, 0.3)
    assert any("non-Diophantine" in f for f in ev.flags)


def test_almost_mathieu_periodic_extended():
    with pytest.raises(RuntimeError, match="no eigenvector localized"):
        almost_mathieu_eigen(10.0, 0.5, 0.3)
