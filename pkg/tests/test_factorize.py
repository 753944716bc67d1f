import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_tw import factorize as fz
from discrete_tw.specfun import bessel_table
from oracles import bessel_j


def test_bessel_propagation_matches_table():
    # forward propagation in 50-digit arithmetic, compared with an independent Bessel source
    mpmath.mp.dps = 50
    th = mpmath.mpf(1)
    r = mpmath.sqrt(th)
    x = 2 * r

    def T(n):
        return np.array([[mpmath.mpf(0), r], [-1 / r, (n + 1) / r]], dtype=object)

    a1 = np.array([r * mpmath.besselj(1, x), mpmath.besselj(2, x)], dtype=object)
    a, _ = fz.propagate(fz.TransferSystem(T, a1), 20)
    for n in range(1, 21):
        assert abs(float(a[n - 1][0]) - bessel_j(n, 1.0)) <= 1e-10
        assert abs(float(a[n - 1][1]) - bessel_j(n + 1, 1.0)) <= 1e-10
    mpmath.mp.dps = 40


def test_bessel_certificate():
    cert = fz.rank_one_certificate(fz.bessel_system(1.0), tol=1e-13)
    assert np.max(np.abs(cert.C - np.diag([0.0, -1.0]))) <= 1e-13
    assert cert.lam == pytest.approx(-1.0, abs=1e-13)
    assert np.allclose(np.abs(cert.v_lambda), [0.0, 1.0])
    assert cert.max_residual <= 1e-13


def test_bessel_symbol_is_shifted_bessel():
    t = bessel_table(1.0, 30)
    sys = fz.bessel_system(1.0, t)
    a = np.stack([t.values[1:28], t.values[2:29]], axis=1)
    phi = fz.extract_symbol(fz.rank_one_certificate(sys), sys, a)
    assert np.max(np.abs(phi - t.values[2:29])) <= 1e-15
    assert phi[0] == pytest.approx(bessel_j(2, 1.0), abs=1e-15)


def test_laguerre_certificate_weighted():
    cert = fz.rank_one_certificate(fz.laguerre_system(2.0))
    assert np.max(np.abs(cert.C - np.diag([-2.0, 0.0]))) <= 1e-12


def test_unweighted_laguerre_rejected():
    with pytest.raises(fz.RankOneError):
        fz.rank_one_certificate(fz.laguerre_system(1.0, weighted=False))


def test_mathieu_system_rejected():
    with pytest.raises(fz.RankOneError) as info:
        fz.rank_one_certificate(fz.mathieu_system(1.0, 0.3))
    assert info.value.residual > 1e-3


@pytest.mark.parametrize("name", sorted(fz.SYSTEMS))
def test_registry_systems_unimodular(name):
    sys = fz.SYSTEMS[name]({})
    assert sys.det_error() <= 1e-12
    assert sys.symplectic_error() <= 1e-10


def test_tw_kernel_zero_diagonal_and_symmetry():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((10, 2))
    k = fz.tw_kernel(a, 10)
    assert np.array_equal(k.values, k.values.T)
    assert np.all(np.diag(k.values) == 0)


def test_tw_kernel_rules():
    a = np.ones((4, 2))
    with pytest.raises(ValueError):
        fz.tw_kernel(a, 4, "from-factorization")
    with pytest.raises(ValueError):
        fz.tw_kernel(a, 4, "bogus")
    k = fz.tw_kernel(a, 4, "supplied", supplied=lambda j: float(j))
    assert list(np.diag(k.values)) == [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ValueError, match="need a"):
        fz.tw_kernel(a, 5)


@given(st.floats(0.1, 9.0))
def test_bessel_verify_passes(theta):
    t = bessel_table(theta, 120)
    sys = fz.bessel_system(theta, t)
    a = np.stack([math.sqrt(theta) * t.values[1:118], t.values[2:119]], axis=1)
    phi = fz.extract_symbol(fz.rank_one_certificate(sys), sys, a)
    k = fz.tw_kernel(a, 16, "from-factorization", symbol=phi)
    res = fz.verify_factorization(k, phi, len(phi) - 31)
    assert res["pass"], res


def test_telescoping_detects_wrong_symbol():
    t = bessel_table(1.0, 100)
    a = np.stack([t.values[1:98], t.values[2:99]], axis=1)
    phi = t.values[2:99].copy()
    k = fz.tw_kernel(a, 12, "from-factorization", symbol=phi)
    assert fz.telescoping_error(k.values, phi) <= 1e-15
    assert fz.telescoping_error(k.values, phi * 1.01) > 1e-6
