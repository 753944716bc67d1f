"""Dense symmetric linear algebra at desk scale (dim <= 512).

Eigenproblems are solved by a cyclic Jacobi method in round-robin
(tournament) order: every round applies n/2 disjoint rotations at once,
so a sweep costs n-1 vectorised rounds instead of n(n-1)/2 scalar ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 512
DEFAULT_EIG_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 64


class NotSymmetricError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def sym_matrix(a, tol: float = 0.0) -> np.ndarray:
    """Return `a` as a float array with exactly symmetric entries.

    Raises NotSymmetricError if max|a - a^T| exceeds `tol`.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > tol:
        raise NotSymmetricError(f"matrix not symmetric: max|A - A^T| = {asym:.3e} > {tol:.3e}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class HankelOperator:
    """Finite section of the Hankel matrix [phi(j+k-1)] with a stored symbol.

    `symbol[i]` holds phi(i+1). The symbol may be much longer than 2*dim;
    the surplus is the tail used by `hankel_square`.
    """

    symbol: np.ndarray
    dim: int

    def __post_init__(self):
        sym = np.asarray(self.symbol, dtype=float)
        object.__setattr__(self, "symbol", sym)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if sym.ndim != 1 or len(sym) < 2 * self.dim - 1:
            raise ValueError(
                f"Hankel symbol of length {len(sym)} too short for dim {self.dim}; "
                f"need at least {2 * self.dim - 1}"
            )

    def tail_norm(self) -> float:
        """sqrt(sum phi(k)^2) over the last 2*dim stored entries (tail proxy)."""
        return float(np.sqrt(np.sum(self.symbol[-2 * self.dim:] ** 2)))

    def hs_norm_sq(self) -> float:
        k = np.arange(1, len(self.symbol) + 1)
        return float(np.sum(k * self.symbol**2))


@dataclass(frozen=True)
class ToeplitzOperator:
    """Toeplitz section [w(m-n)] of size dim; `symbol(d)` for |d| < dim."""

    values: dict
    dim: int

    @classmethod
    def from_function(cls, w, dim: int) -> "ToeplitzOperator":
        return cls({d: float(w(d)) for d in range(-(dim - 1), dim)}, dim)

    def symbol(self, d: int) -> float:
        return self.values[d]


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    residual: float
    sweeps: int = 0
    off_norm: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def singular_numbers(self) -> np.ndarray:
        return np.sort(np.abs(self.eigenvalues))[::-1]


def _tournament(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Round-robin pairings covering every (p, q), p < q, exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def sym_eigen(a, eig_tol: float = DEFAULT_EIG_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SpectralDecomposition:
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm is at most
    eig_tol * ||A||_F. Eigenvalues are returned in descending order with
    orthonormal eigenvectors as columns.
    """
    a0 = sym_matrix(a)
    a = a0.copy()
    n = a.shape[0]
    vt = np.eye(n)
    if n == 0:
        return SpectralDecomposition(np.zeros(0), vt, 0.0)
    fro = float(np.linalg.norm(a))
    target = eig_tol * fro
    rounds = _tournament(n)

    offdiag = ~np.eye(n, dtype=bool)

    def off(x):
        return float(np.linalg.norm(x[offdiag]))

    sweeps = 0
    off_norm = off(a)
    polished = False
    while off_norm > target or not polished:
        # one sweep past the target: convergence is quadratic, so this is cheap
        polished = off_norm <= target
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off_norm:.3e})", off_norm
            )
        for p, q in rounds:
            if len(p) == 0:
                continue
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            app, aqq = a[p, p], a[q, q]
            with np.errstate(over="ignore"):
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cc, ss = c[:, None], s[:, None]
            # A <- R^T A R as two row rotations with a transpose in between;
            # rows are contiguous, columns are not
            for _ in range(2):
                ap, aq = a[p], a[q]
                a[p] = cc * ap - ss * aq
                a[q] = ss * ap + cc * aq
                a = np.ascontiguousarray(a.T)
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = vt[p], vt[q]
            vt[p] = cc * vp - ss * vq
            vt[q] = ss * vp + cc * vq
        sweeps += 1
        off_norm = off(a)

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w, v = w[order], vt[order].T.copy()
    dec = SpectralDecomposition(w, v, 0.0, sweeps, off_norm)
    dec.residual = eigen_residual(a0, dec)
    return dec


def eigen_residual(a, dec: SpectralDecomposition) -> float:
    """max_i ||A v_i - lambda_i v_i||_2."""
    if dec.eigenvectors.size == 0:
        return 0.0
    r = a @ dec.eigenvectors - dec.eigenvectors * dec.eigenvalues
    return float(np.max(np.linalg.norm(r, axis=0)))


def singular_numbers(a, eig_tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """Absolute eigenvalues of a symmetric matrix, sorted descending."""
    return sym_eigen(a, eig_tol).singular_numbers


def hankel_square(h: HankelOperator, tail_len: int, tail_norm: float | None = None):
    """Finite section of Gamma_phi^2 including the symbol tail.

    Entry (m, n) = sum_k phi(m+k-1) phi(n+k-1) over all k with
    max(m, n)+k-1 <= L, where L = 2*dim - 1 + tail_len. Each diagonal
    d = |m-n| is one reversed cumulative sum over phi(i) phi(i+d).

    Returns (K, bound) where bound[m, n] is a Cauchy-Schwarz bound on the
    omitted terms, given `tail_norm` >= sqrt(sum_{k>L} phi(k)^2). Without
    `tail_norm` the proxy `h.tail_norm()` over the used range is taken.
    """
    n = h.dim
    length = 2 * n - 1 + tail_len
    if len(h.symbol) < length:
        raise ValueError(
            f"symbol too short: hankel_square needs phi(1..{length}), got {len(h.symbol)} entries"
        )
    phi = h.symbol[:length]
    if tail_norm is None:
        tail_norm = float(np.sqrt(np.sum(phi[-2 * n:] ** 2)))
    k = np.zeros((n, n))
    bound = np.zeros((n, n))
    sq = phi * phi
    for d in range(n):
        prod = phi[: length - d] * phi[d:]
        suffix = np.cumsum(prod[::-1])[::-1]
        vals = suffix[:n]
        idx = np.arange(n - d)
        k[idx, idx + d] = vals[: n - d]
        k[idx + d, idx] = vals[: n - d]
        seg = float(np.sum(sq[length - d:])) if d else 0.0
        b = np.sqrt(seg + tail_norm**2) * tail_norm
        bound[idx, idx + d] = b
        bound[idx + d, idx] = b
    return k, bound


def hankel_product(phi, psi, dim: int, tail_len: int) -> np.ndarray:
    """Finite section of Gamma_phi Gamma_psi with the same tail convention as
    `hankel_square`: entry (m, n) = sum_k phi(m+k-1) psi(n+k-1)."""
    length = 2 * dim - 1 + tail_len
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if len(phi) < length or len(psi) < length:
        raise ValueError(f"symbol too short: hankel_product needs entries 1..{length}")
    phi, psi = phi[:length], psi[:length]
    out = np.zeros((dim, dim))
    for d in range(-(dim - 1), dim):
        # entries with n - m = d pair phi(i) with psi(i + d)
        if d >= 0:
            prod = phi[: length - d] * psi[d:]
        else:
            prod = phi[-d:] * psi[: length + d]
        suffix = np.cumsum(prod[::-1])[::-1]
        cnt = dim - abs(d)
        if d >= 0:
            idx = np.arange(cnt)
            out[idx, idx + d] = suffix[:cnt]
        else:
            idx = np.arange(cnt)
            # row m = idx - d, so the phi index starts at m
            out[idx - d, idx] = suffix[:cnt]
    return out


def hankel_square_naive(symbol, dim: int, length: int) -> np.ndarray:
    """Double-sum reference for `hankel_square` (O(dim^2 * length))."""
    phi = np.asarray(symbol, dtype=float)[:length]
    out = np.zeros((dim, dim))
    for m in range(dim):
        for n in range(dim):
            top = length - max(m, n)
            out[m, n] = sum(phi[m + j] * phi[n + j] for j in range(top))
    return out


def materialize(op, tol: float = 0.0) -> np.ndarray:
    """Dense symmetric matrix of a Hankel or Toeplitz section."""
    if isinstance(op, HankelOperator):
        n = op.dim
        j = np.arange(n)
        return op.symbol[j[:, None] + j[None, :]].copy()
    if isinstance(op, ToeplitzOperator):
        n = op.dim
        out = np.array([[op.symbol(m - k) for k in range(n)] for m in range(n)], dtype=float)
        return sym_matrix(out, tol)
    raise TypeError(f"cannot materialize {type(op).__name__}")


def matmul(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def max_abs_diff(a, b, mask: str = "all") -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    if mask == "off-diagonal":
        diff = diff[~np.eye(a.shape[0], dtype=bool)]
    elif mask != "all":
        raise ValueError(f"unknown mask {mask!r}")
    return float(diff.max()) if diff.size else 0.0
