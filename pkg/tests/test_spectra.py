import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from discrete_tw.linalg import HankelOperator, hankel_square, materialize, sym_eigen
from discrete_tw.spectra import check_prop23, decay_fit, multiplicity_profile, singular_transfer_check


def test_multiplicity_profile_clusters():
    prof = multiplicity_profile([3.0, 3.0 + 1e-12, 1.0, 0.0], 1e-9)
    assert [m for _, m in prof.clusters] == [2, 1, 1]
    assert prof.total == 4


def test_prop23_even_multiplicity_splits_evenly():
    # Gamma = diag(1, -1): K = I has one cluster of multiplicity 2 at 1
    g = np.array([1.0, -1.0])
    res = check_prop23([1.0, 1.0], g, 1e-9)
    assert res["pass"]
    assert res["clusters"][0]["nu_plus"] == res["clusters"][0]["nu_minus"] == 1


def test_prop23_detects_bad_parity():
    g = np.array([1.0, 1.0])
    res = check_prop23([1.0, 1.0], g, 1e-9)
    assert not res["pass"]


def test_singular_transfer_on_hankel():
    phi = 0.5 ** np.arange(1, 40)
    h = HankelOperator(phi, 8)
    gamma = materialize(h)
    res = singular_transfer_check(gamma @ gamma, gamma, symbol=phi)
    assert res["pass"]
    assert all(b["ok"] for b in res["truncation_bounds"])
    # with the whole symbol, K(1,1) = sum 4^-k = 1/3
    k, _ = hankel_square(h, len(phi) - 15, 0.0)
    assert k[0, 0] == pytest.approx(1 / 3, abs=1e-12)


def test_singular_transfer_dimension_mismatch():
    with pytest.raises(ValueError):
        singular_transfer_check(np.eye(2), np.eye(3))


def test_decay_fit_exact_exponential():
    c, d, r2 = decay_fit(3.0 * np.exp(-0.7 * np.arange(20)))
    assert c == pytest.approx(3.0)
    assert d == pytest.approx(0.7)
    assert r2 == pytest.approx(1.0)


def test_decay_fit_needs_points():
    with pytest.raises(ValueError, match="at least 8"):
        decay_fit([1.0, 0.5, 0.25])


@given(arrays(np.float64, st.integers(4, 9), elements=st.floats(-1, 1, allow_nan=False)))
def test_square_of_symmetric_relations(v):
    # any symmetric Gamma: s_n(Gamma^2) = s_n(Gamma)^2 and the multiplicity relations hold
    n = len(v)
    rng = np.random.default_rng(abs(hash(v.tobytes())) % 2**32)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    gamma = q @ np.diag(v) @ q.T
    gamma = (gamma + gamma.T) / 2
    k = gamma @ gamma
    k = (k + k.T) / 2
    res = singular_transfer_check(k, gamma)
    assert res["max_abs_error"] <= 1e-10
    ke = sym_eigen(k).eigenvalues
    ge = sym_eigen(gamma).eigenvalues
    p = check_prop23(ke, ge, 1e-8)
    # parity is special to Hankel operators; the count relation holds for any symmetric Gamma
    gaps = np.diff(np.sort(np.abs(v) ** 2))
    if np.all((gaps < 1e-14) | (gaps > 1e-6)):
        assert all(c["sum_ok"] for c in p["clusters"]), p


def test_generic_symmetric_can_break_parity():
    p = check_prop23([1.0] * 4, np.ones(4), 1e-8)
    assert p["clusters"][0]["sum_ok"] and not p["clusters"][0]["parity_ok"]
