import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from discrete_tw.linalg import (
    ConvergenceError,
    HankelOperator,
    NotSymmetricError,
    ToeplitzOperator,
    _tournament,
    hankel_product,
    hankel_square,
    materialize,
    max_abs_diff,
    singular_numbers,
    sym_eigen,
    sym_matrix,
)
from oracles import hankel_square_loops


def test_identity_eigenvalues():
    dec = sym_eigen(np.eye(3))
    assert np.allclose(dec.eigenvalues, [1, 1, 1])
    assert dec.residual == 0.0


def test_rank_one_diag():
    dec = sym_eigen(np.diag([0.0, -1.0]))
    assert list(dec.eigenvalues) == [0.0, -1.0]
    assert np.allclose(np.abs(dec.eigenvectors[:, 1]), [0, 1])


def test_random_reconstruction():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((8, 8))
    a = a + a.T
    dec = sym_eigen(a)
    v, w = dec.eigenvectors, dec.eigenvalues
    assert np.max(np.abs(v @ np.diag(w) @ v.T - a)) <= 1e-10
    assert np.max(np.abs(v.T @ v - np.eye(8))) <= 1e-12
    assert np.all(np.diff(w) <= 0)


def test_against_lapack():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((60, 60))
    a = a + a.T
    assert np.allclose(sym_eigen(a).eigenvalues, np.linalg.eigvalsh(a)[::-1], atol=1e-11)


@pytest.mark.parametrize("n", [1, 2, 5, 6, 11])
def test_tournament_covers_all_pairs(n):
    seen = [tuple(x) for p, q in _tournament(n) for x in zip(p, q)]
    assert sorted(seen) == [(i, j) for i in range(n) for j in range(i + 1, n)]


def test_not_symmetric():
    with pytest.raises(NotSymmetricError):
        sym_eigen([[1.0, 2.0], [0.0, 1.0]])


def test_too_large():
    with pytest.raises(ValueError, match="exceeds"):
        sym_matrix(np.zeros((513, 513)))


def test_convergence_error_reports_residual():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((20, 20))
    with pytest.raises(ConvergenceError) as info:
        sym_eigen(a + a.T, max_sweeps=1)
    assert info.value.residual > 0


def test_singular_numbers_sorted_abs():
    s = singular_numbers(np.diag([1.0, -3.0, 2.0]))
    assert list(s) == [3.0, 2.0, 1.0]


def test_hankel_square_constant_symbol():
    # phi = 1 on 1..L: entry (m, n) counts k with max(m, n) + k - 1 <= L
    dim, tail = 4, 3
    length = 2 * dim - 1 + tail
    k, _ = hankel_square(HankelOperator(np.ones(length), dim), tail, 0.0)
    m = np.arange(1, dim + 1)
    assert np.array_equal(k, length - np.maximum.outer(m, m) + 1.0)


def test_hankel_square_vs_loops():
    rng = np.random.default_rng(5)
    phi = rng.standard_normal(40) * 0.8 ** np.arange(40)
    k, _ = hankel_square(HankelOperator(phi, 6), 29, 0.0)
    assert np.max(np.abs(k - hankel_square_loops(phi, 6, 40))) <= 1e-14


def test_hankel_square_short_symbol():
    with pytest.raises(ValueError, match="phi\\(1..12\\)"):
        hankel_square(HankelOperator(np.ones(8), 3), 7)


def test_hankel_square_tail_bound_covers_truncation():
    phi = 0.7 ** np.arange(1, 200)
    dim, tail = 5, 10
    length = 2 * dim - 1 + tail
    full, _ = hankel_square(HankelOperator(phi, dim), len(phi) - (2 * dim - 1), 0.0)
    tail_norm = float(np.sqrt(np.sum(phi[length:] ** 2)))
    k, bound = hankel_square(HankelOperator(phi, dim), tail, tail_norm)
    assert np.all(np.abs(full - k) <= bound + 1e-14)


def test_hankel_product_matches_square_and_transpose():
    rng = np.random.default_rng(11)
    phi, psi = rng.standard_normal(30), rng.standard_normal(30)
    dim, tail = 5, 21
    sq, _ = hankel_square(HankelOperator(phi, dim), tail, 0.0)
    assert np.array_equal(hankel_product(phi, phi, dim, tail), sq)
    ab = hankel_product(phi, psi, dim, tail)
    assert np.allclose(ab.T, hankel_product(psi, phi, dim, tail), atol=1e-14)
    # all-k reference: k runs while both indices stay inside the symbol
    ref = np.array([[sum(phi[m + k] * psi[n + k] for k in range(30 - max(m, n))) for n in range(dim)]
                    for m in range(dim)])
    assert np.max(np.abs(ab - ref)) <= 1e-13


def test_materialize_toeplitz_asymmetric_rejected():
    with pytest.raises(NotSymmetricError):
        materialize(ToeplitzOperator({-1: 1.0, 0: 0.0, 1: 2.0}, 2))
    t = materialize(ToeplitzOperator.from_function(lambda d: 1.0 / (1 + abs(d)), 3))
    assert t[0, 2] == t[2, 0] == 1 / 3


def test_max_abs_diff_masks():
    a = np.eye(2)
    assert max_abs_diff(a, np.zeros((2, 2))) == 1.0
    assert max_abs_diff(a, np.zeros((2, 2)), mask="off-diagonal") == 0.0
    with pytest.raises(ValueError):
        max_abs_diff(a, np.zeros((3, 3)))


sym_mats = st.integers(1, 9).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, width=64))
)


@given(sym_mats)
def test_eigen_properties(a):
    a = a + a.T
    dec = sym_eigen(a)
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a)))
    assert dec.residual <= 1e-10 * scale
    assert np.max(np.abs(dec.eigenvectors.T @ dec.eigenvectors - np.eye(n))) <= 1e-10
    assert np.all(np.diff(dec.eigenvalues) <= 1e-12 * scale)
    assert abs(dec.eigenvalues.sum() - np.trace(a)) <= 1e-9 * scale


@given(arrays(np.float64, st.integers(8, 30), elements=st.floats(-1, 1, allow_nan=False)),
       st.integers(1, 4))
def test_hankel_square_is_gram(phi, dim):
    tail = len(phi) - (2 * dim - 1)
    k, _ = hankel_square(HankelOperator(phi, dim), tail, 0.0)
    assert np.array_equal(k, k.T)
    assert np.min(np.linalg.eigvalsh(k)) >= -1e-10 * max(1.0, np.abs(k).max())


@pytest.mark.parametrize("n", [1, 2, 7, 16])
def test_hankel_square_vs_loops_up_to_16(n):
    rng = np.random.default_rng(n)
    length = 2 * n - 1 + 20
    phi = rng.standard_normal(length) * 0.9 ** np.arange(length)
    k, _ = hankel_square(HankelOperator(phi, n), 20, 0.0)
    assert np.max(np.abs(k - hankel_square_loops(phi, n, length))) <= 1e-13
