"""Reference values computed by routes independent of the package code."""

from __future__ import annotations

import mpmath
import numpy as np

mpmath.mp.dps = 40


def bessel_j(n: int, theta: float) -> float:
    return float(mpmath.besselj(n, 2 * mpmath.sqrt(mpmath.mpf(theta))))


def poly_series_mpmath(theta: float, j_max: int) -> list[float]:
    """Taylor coefficients of exp(theta atan z)/(1 + z^2) by mpmath.taylor."""
    f = lambda z: mpmath.exp(theta * mpmath.atan(z)) / (1 + z * z)  # noqa: E731
    return [float(c) for c in mpmath.taylor(f, 0, j_max)]


def mathieu_dense_alpha(beta: float, branch: int, n_half: int = 40) -> float:
    """Even-branch alpha from the full two-sided tridiagonal on -n_half..n_half via LAPACK."""
    n = np.arange(-n_half, n_half + 1)
    m = np.diag(n.astype(float) ** 2)
    m += np.diag(np.full(2 * n_half, -beta / 2.0), 1) + np.diag(np.full(2 * n_half, -beta / 2.0), -1)
    w, v = np.linalg.eigh(m)
    even = [w[i] for i in range(len(w)) if np.allclose(v[:, i], v[::-1, i], atol=1e-8)]
    return float(sorted(even)[branch])


def hankel_square_loops(phi, dim: int, length: int) -> np.ndarray:
    """sum_k phi(m+k-1) phi(n+k-1) with plain loops; phi[i] holds phi(i+1)."""
    out = np.zeros((dim, dim))
    for m in range(1, dim + 1):
        for n in range(1, dim + 1):
            s = 0.0
            k = 1
            while max(m, n) + k - 1 <= length:
                s += phi[m + k - 2] * phi[n + k - 2]
                k += 1
            out[m - 1, n - 1] = s
    return out


def dpp_inclusion_exact(k: np.ndarray) -> dict:
    """P(X = S) for every subset S of a tiny window, from L = K (I - K)^{-1}."""
    import itertools

    n = k.shape[0]
    lmat = k @ np.linalg.inv(np.eye(n) - k)
    z = np.linalg.det(np.eye(n) + lmat)
    out = {}
    for r in range(n + 1):
        for s in itertools.combinations(range(n), r):
            out[s] = float(np.linalg.det(lmat[np.ix_(s, s)])) / z if s else 1.0 / z
    return out
