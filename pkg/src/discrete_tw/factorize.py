"""Tracy-Widom kernels from 2x2 transfer recurrences and their Hankel-square factorization.

A recurrence a(j+1) = T(j) a(j) gives K(m, n) = <J a(m), a(n)> / (m - n).
If (T(n)^t J T(m) - J) / (m - n) = B(n)^t C B(m) for a fixed symmetric C
with eigenvalues {0, lambda < 0}, and a(j) -> 0, then K = Gamma_phi^2 with
phi(j) = |lambda|^(1/2) <v_lambda, B(j) a(j)>.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import HankelOperator, hankel_square, sym_eigen

J = np.array([[0.0, -1.0], [1.0, 0.0]])


class RankOneError(ValueError):
    def __init__(self, message: str, residual: float, C=None):
        super().__init__(message)
        self.residual = residual
        self.C = C


def _identity(_n):
    return np.eye(2)


@dataclass
class TransferSystem:
    T: Callable[[int], np.ndarray]
    a1: np.ndarray
    B: Callable[[int], np.ndarray] = _identity
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def det_error(self, ns=range(1, 33)) -> float:
        return max(abs(float(np.linalg.det(np.asarray(self.T(n), dtype=float))) - 1.0) for n in ns)

    def symplectic_error(self, ns=range(1, 33)) -> float:
        """max_n ||T(n)^t J T(n) - J||, zero whenever det T(n) = 1."""
        out = 0.0
        for n in ns:
            t = np.asarray(self.T(n), dtype=float)
            out = max(out, float(np.max(np.abs(t.T @ J @ t - J))))
        return out


@dataclass
class RankOneCertificate:
    C: np.ndarray
    lam: float
    v_lambda: np.ndarray
    max_residual: float
    pairs: list


@dataclass
class KernelMatrix:
    values: np.ndarray
    model: str
    diagonal_rule: str
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


# --------------------------------------------------------------------------


def propagate(sys: TransferSystem, n_max: int):
    """a(1..n_max) with a(j+1) = T(j) a(j); row j-1 holds a(j).

    Works for object arrays (e.g. mpmath numbers) as well as floats.
    Returns (a, ||a(n_max)|| / ||a(1)||) so callers can test decay.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    a1 = np.asarray(sys.a1)
    out = np.empty((n_max, 2), dtype=a1.dtype if a1.dtype == object else float)
    out[0] = a1
    cur = a1
    for j in range(1, n_max):
        cur = np.asarray(sys.T(j)) @ cur
        out[j] = cur
    first = math.hypot(float(out[0][0]), float(out[0][1]))
    last = math.hypot(float(out[-1][0]), float(out[-1][1]))
    return out, (last / first if first else 0.0)


def default_pairs(upto: int = 12) -> list:
    return [(m, n) for m, n in itertools.combinations(range(1, upto + 1), 2)]


def commutator_matrix(sys: TransferSystem, m: int, n: int) -> np.ndarray:
    """(T(n)^t J T(m) - J) / (m - n)."""
    tm = np.asarray(sys.T(m), dtype=float)
    tn = np.asarray(sys.T(n), dtype=float)
    return (tn.T @ J @ tm - J) / (m - n)


def rank_one_certificate(sys: TransferSystem, sample_pairs=None, tol: float = 1e-12) -> RankOneCertificate:
    """Fit a symmetric C to (T(n)^t J T(m) - J)/(m - n) = B(n)^t C B(m).

    C is the least-squares solution over the three free entries across all
    sample pairs. Raises RankOneError if the worst residual exceeds `tol` or
    C is not negative semidefinite of rank one.
    """
    pairs = default_pairs() if sample_pairs is None else list(sample_pairs)
    if not pairs or any(m == n for m, n in pairs):
        raise ValueError("sample pairs must be non-empty with m != n")
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]]),
             np.array([[0.0, 0.0], [0.0, 1.0]])]
    rows, rhs = [], []
    for m, n in pairs:
        bm = np.asarray(sys.B(m), dtype=float)
        bn = np.asarray(sys.B(n), dtype=float)
        rows.append(np.stack([(bn.T @ e @ bm).ravel() for e in basis], axis=1))
        rhs.append(commutator_matrix(sys, m, n).ravel())
    design = np.vstack(rows)
    target = np.concatenate(rhs)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    c = coef[0] * basis[0] + coef[1] * basis[1] + coef[2] * basis[2]
    resid = float(np.max(np.abs(design @ coef - target)))
    if resid > tol:
        raise RankOneError(f"condition (T^t J T - J)/(m-n) = B^t C B fails: residual {resid:.3e}", resid, c)
    dec = sym_eigen(c)
    hi, lo = dec.eigenvalues  # descending
    scale = max(1.0, abs(lo))
    if abs(hi) > tol * scale or lo >= -tol * scale:
        raise RankOneError(
            f"C not negative semidefinite of rank one: eigenvalues ({hi:.3e}, {lo:.3e})", resid, c
        )
    v = dec.eigenvectors[:, 1].copy()
    lead = np.flatnonzero(np.abs(v) > 1e-12)[0]
    if v[lead] < 0:
        v = -v
    # clean exact zeros so the sign convention is reproducible
    v[np.abs(v) < 1e-15] = 0.0
    return RankOneCertificate(c, float(lo), v, resid, pairs)


def extract_symbol(cert: RankOneCertificate, sys: TransferSystem, a) -> np.ndarray:
    """phi(j) = |lambda|^(1/2) <v_lambda, B(j) a(j)>; entry j-1 holds phi(j)."""
    a = np.asarray(a, dtype=float)
    scale = math.sqrt(abs(cert.lam))
    out = np.empty(len(a))
    for j in range(1, len(a) + 1):
        out[j - 1] = scale * float(cert.v_lambda @ (np.asarray(sys.B(j), dtype=float) @ a[j - 1]))
    return out


def tw_numerator(a, dim: int) -> np.ndarray:
    """<J a(m), a(n)> for m, n = 1..dim (exactly antisymmetric)."""
    a = np.asarray(a, dtype=float)[:dim]
    return np.outer(a[:, 0], a[:, 1]) - np.outer(a[:, 1], a[:, 0])


def tw_kernel(a, dim: int, diagonal_rule: str = "zero", symbol=None, supplied=None,
              model: str = "custom", denominator=None) -> KernelMatrix:
    """K(m, n) = <J a(m), a(n)> / (m - n) off the diagonal.

    diagonal_rule: "from-factorization" (sum_k phi(n+k-1)^2, needs the
    certificate symbol), "zero", or "supplied" (callable n -> value).
    `denominator(m, n)` replaces m - n when given (vectorised over arrays).
    """
    if len(a) < dim:
        raise ValueError(f"need a(1..{dim}), got {len(a)} vectors")
    num = tw_numerator(a, dim)
    m = np.arange(1, dim + 1)[:, None]
    n = np.arange(1, dim + 1)[None, :]
    den = (m - n).astype(float) if denominator is None else denominator(m, n)
    off = ~np.eye(dim, dtype=bool)
    k = np.zeros((dim, dim))
    k[off] = (num / np.where(off, den, 1.0))[off]
    if diagonal_rule == "from-factorization":
        if symbol is None:
            raise ValueError("diagonal_rule 'from-factorization' needs the certificate symbol")
        sq = np.asarray(symbol, dtype=float) ** 2
        suffix = np.cumsum(sq[::-1])[::-1]
        k[np.arange(dim), np.arange(dim)] = suffix[:dim]
    elif diagonal_rule == "supplied":
        if supplied is None:
            raise ValueError("diagonal_rule 'supplied' needs a callback")
        k[np.arange(dim), np.arange(dim)] = [supplied(j) for j in range(1, dim + 1)]
    elif diagonal_rule != "zero":
        raise ValueError(f"unknown diagonal rule {diagonal_rule!r}")
    return KernelMatrix(k, model, diagonal_rule)


def telescoping_error(k, symbol, pairs: str = "off-diagonal") -> float:
    """max |K(m+1, n+1) - K(m, n) + phi(m) phi(n)| over the section."""
    k = np.asarray(k, dtype=float)
    phi = np.asarray(symbol, dtype=float)
    dim = k.shape[0]
    if dim < 2:
        return 0.0
    d = k[1:, 1:] - k[:-1, :-1] + np.outer(phi[: dim - 1], phi[: dim - 1])
    if pairs == "off-diagonal":
        d = d[~np.eye(dim - 1, dtype=bool)]
    return float(np.max(np.abs(d))) if d.size else 0.0


def verify_factorization(kernel: KernelMatrix, symbol, tail_len: int, tol: float = 1e-10,
                         tail_norm: float | None = None) -> dict:
    """Compare K with Gamma_phi^2 off the diagonal, and check the shift identity
    K(m+1, n+1) - K(m, n) = -phi(m) phi(n). Both errors are reported with
    the Hankel tail truncation bound; pass means both are <= tol."""
    k = kernel.values
    dim = k.shape[0]
    h = HankelOperator(np.asarray(symbol, dtype=float), dim)
    g2, bound = hankel_square(h, tail_len, tail_norm)
    off = ~np.eye(dim, dtype=bool)
    err = float(np.max(np.abs(k - g2)[off])) if dim > 1 else 0.0
    tele = telescoping_error(k, symbol)
    tb = float(np.max(bound))
    return {
        "model": kernel.model,
        "N": dim,
        "tail": tail_len,
        "max_offdiag_error": err,
        "telescoping_error": tele,
        "tail_bound": tb,
        "diagonal_error": float(np.max(np.abs(np.diag(k) - np.diag(g2)))),
        "tol": tol,
        "pass": bool(err <= tol and tele <= tol),
    }


# --------------------------------------------------------------------------
# built-in systems


def bessel_system(theta: float, table=None) -> TransferSystem:
    """a(n) = [sqrt(theta) J_n, J_{n+1}] with J_n = J_n(2 sqrt(theta))."""
    from .specfun import bessel_table

    r = math.sqrt(theta)
    if table is None:
        table = bessel_table(theta, 4)

    def T(n):
        return np.array([[0.0, r], [-1.0 / r, (n + 1) / r]])

    a1 = np.array([r * table.values[1], table.values[2]])
    return TransferSystem(T, a1, name="bessel", meta={"theta": theta})


def laguerre_system(theta: float, weighted: bool = True) -> TransferSystem:
    """T(j) = [[theta/(j+1), -1], [1, 0]], a(1) = [theta, 1].

    With `weighted`, B(j) = diag(1/(j+1), 1) so the commutator condition
    holds with C = diag(-theta, 0).
    """

    def T(j):
        return np.array([[theta / (j + 1), -1.0], [1.0, 0.0]])

    def B(j):
        return np.diag([1.0 / (j + 1), 1.0])

    return TransferSystem(T, np.array([float(theta), 1.0]), B if weighted else _identity,
                          name="laguerre", meta={"theta": theta, "weighted": weighted})


def mathieu_system(beta: float, alpha: float, b0: float = 1.0, b1: float = 0.0) -> TransferSystem:
    """[b_n, b_{n+1}] = [[0, 1], [-1, (2/beta)(n^2 - alpha)]] [b_{n-1}, b_n]."""

    def T(n):
        return np.array([[0.0, 1.0], [-1.0, (2.0 / beta) * (n * n - alpha)]])

    return TransferSystem(T, np.array([b0, b1]), name="mathieu", meta={"beta": beta, "alpha": alpha})


def almost_mathieu_system(lam: float, theta_freq: float, alpha: float, energy: float,
                          u0: float = 0.0, u1: float = 1.0) -> TransferSystem:
    """[u_n, u_{n+1}] = [[0, 1], [-1, E - lam cos 2pi(n theta + alpha)]] [u_{n-1}, u_n]."""

    def T(n):
        return np.array([[0.0, 1.0], [-1.0, energy - lam * math.cos(2 * math.pi * (n * theta_freq + alpha))]])

    return TransferSystem(T, np.array([u0, u1]), name="almost-mathieu",
                          meta={"lambda": lam, "theta_freq": theta_freq, "alpha": alpha, "E": energy})


SYSTEMS = {
    "bessel": lambda p: bessel_system(p.get("theta", 1.0)),
    "laguerre": lambda p: laguerre_system(p.get("theta", 1.0)),
    "mathieu": lambda p: mathieu_system(p.get("beta", 1.0), p.get("alpha", 0.0)),
    "almost-mathieu": lambda p: almost_mathieu_system(
        p.get("lambda", 10.0), p.get("theta_freq", (math.sqrt(5) - 1) / 2), p.get("alpha", 0.3), p.get("E", 0.0)
    ),
}
