"""Special sequences feeding the kernel models.

* Bessel values J_n(2 sqrt(theta)) by Miller's backward recurrence.
* Polynomials p_j(theta) with p_{n+1} + p_{n-1} = theta/(n+1) p_n.
* Even Fourier coefficients b_n of 2*pi-periodic Mathieu functions.
* Localized eigenvectors of the almost Mathieu operator on a finite box.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import sym_eigen

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_BIG = 1e250


# --------------------------------------------------------------------------
# Bessel


@dataclass
class BesselTable:
    theta: float
    values: np.ndarray  # values[n] = J_n(2 sqrt(theta))
    start: int  # backward recurrence start index

    @property
    def x(self) -> float:
        return 2.0 * math.sqrt(self.theta)

    def normalization_error(self) -> float:
        v = self.values
        return abs(v[0] ** 2 + 2.0 * math.fsum(v[1:] ** 2) - 1.0)

    def recurrence_residual(self) -> float:
        """max_n |J_{n+1} + J_{n-1} - (2n/x) J_n| relative to the local scale."""
        v, x = self.values, self.x
        n = np.arange(1, len(v) - 1)
        r = v[2:] + v[:-2] - (2.0 * n / x) * v[1:-1]
        scale = np.maximum.reduce([np.abs(v[2:]), np.abs(v[:-2]), np.abs(2.0 * n / x * v[1:-1])])
        mask = scale > 0
        return float(np.max(np.abs(r[mask]) / scale[mask])) if mask.any() else 0.0


def bessel_table(theta: float, n_max: int) -> BesselTable:
    """J_n(2 sqrt(theta)) for n = 0..n_max by Miller's algorithm.

    The recurrence J_{n-1} = (2n/x) J_n - J_{n+1} is run downwards from
    start = n_max + max(20, ceil(4 sqrt(theta))) (moved further out if that
    is not past x), rescaling to avoid overflow, then normalized so that
    J_0^2 + 2 sum J_m^2 = 1 with the sign fixed by J_0 + 2 sum J_{2m} = 1.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    x = 2.0 * math.sqrt(theta)
    start = n_max + max(20, math.ceil(4.0 * math.sqrt(theta)))
    # the backward sweep must start well inside the region where J_n decays
    start = max(start, math.ceil(x) + 30)
    f = np.zeros(start + 2)
    f[start] = 1.0
    for n in range(start, 0, -1):
        f[n - 1] = (2.0 * n / x) * f[n] - f[n + 1]
        if abs(f[n - 1]) > _BIG:
            f[n - 1:] /= _BIG
    f /= np.max(np.abs(f))
    sign_sum = f[0] + 2.0 * math.fsum(f[2::2])
    norm = math.sqrt(f[0] ** 2 + 2.0 * math.fsum(f[1:] ** 2))
    vals = f / (math.copysign(norm, sign_sum))
    return BesselTable(theta, vals[: n_max + 1].copy(), start)


# --------------------------------------------------------------------------
# p_j(theta)


@dataclass
class PolySequence:
    theta: float
    values: np.ndarray  # values[j] = p_j(theta)

    def recurrence_residual(self) -> float:
        p, th = self.values, self.theta
        n = np.arange(1, len(p) - 1)
        r = p[2:] + p[:-2] - th / (n + 1) * p[1:-1]
        return float(np.max(np.abs(r) / np.maximum(1.0, np.abs(p[1:-1])))) if len(r) else 0.0


def poly_sequence(theta: float, j_max: int) -> PolySequence:
    """p_0..p_{j_max} from p_0 = 1, p_1 = theta, p_{n+1} = theta/(n+1) p_n - p_{n-1}."""
    p = [0.0] * (j_max + 1)
    p[0] = 1.0
    if j_max >= 1:
        p[1] = float(theta)
    a, b = 1.0, float(theta)
    for n in range(1, j_max):
        a, b = b, theta / (n + 1) * b - a
        p[n + 1] = b
    return PolySequence(float(theta), np.array(p))


def poly_sequence_exact(theta, j_max: int) -> list[Fraction]:
    """Same recurrence in rational arithmetic (theta must be rational)."""
    th = Fraction(theta)
    p = [Fraction(1), th]
    for n in range(1, j_max):
        p.append(th / (n + 1) * p[n] - p[n - 1])
    return p[: j_max + 1]


def poly_generating_series(theta, j_max: int) -> list[Fraction]:
    """Taylor coefficients of exp(theta * arctan z) / (1 + z^2) up to z^j_max.

    Independent of the recurrence: exp of a power series via
    g_n = (1/n) sum_k k f_k g_{n-k}, then a product with sum (-1)^k z^2k.
    """
    th = Fraction(theta)
    f = [Fraction(0)] * (j_max + 1)
    for k in range(1, j_max + 1, 2):
        f[k] = th * Fraction((-1) ** ((k - 1) // 2), k)
    g = [Fraction(1)] + [Fraction(0)] * j_max
    for n in range(1, j_max + 1):
        g[n] = sum(k * f[k] * g[n - k] for k in range(1, n + 1)) / n
    return [sum((-1) ** (k // 2) * g[j - k] for k in range(0, j + 1, 2)) for j in range(j_max + 1)]


# --------------------------------------------------------------------------
# Mathieu


@dataclass
class MathieuCoeffs:
    beta: float
    alpha: float
    branch: int
    b: np.ndarray  # b[n] for n = 0..n_max; b_{-n} = b_n

    @property
    def n_max(self) -> int:
        return len(self.b) - 1

    def full(self) -> np.ndarray:
        """b_n for n = -n_max..n_max."""
        return np.concatenate([self.b[:0:-1], self.b])

    def residual(self) -> float:
        """max over |n| <= n_max-1 of |2(alpha - n^2) b_n + beta (b_{n+1} + b_{n-1})|."""
        bf = self.full()
        n = np.arange(-self.n_max + 1, self.n_max)
        mid = bf[1:-1]
        r = 2.0 * (self.alpha - n**2) * mid + self.beta * (bf[2:] + bf[:-2])
        return float(np.max(np.abs(r)))

    def moment_tail(self, power: int = 4, start: int | None = None) -> float:
        n = np.arange(len(self.b))
        start = self.n_max // 2 if start is None else start
        return float(np.sum((n[start:] ** power) * self.b[start:] ** 2))


def mathieu_coeffs(beta: float, branch: int = 0, n_max: int = 16) -> MathieuCoeffs:
    """Even Fourier coefficients of a 2*pi-periodic Mathieu solution.

    alpha is the `branch`-th smallest eigenvalue of the tridiagonal
    operator n^2 b_n - (beta/2)(b_{n+1} + b_{n-1}) restricted to b_{-n} = b_n,
    symmetrized by scaling the n = 0 unknown by 1/sqrt(2). b is normalized
    to sum_{n in Z} b_n^2 = 1 with b_0 > 0 (or the first nonzero entry).
    """
    if beta == 0:
        raise ValueError("beta must be nonzero")
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    if branch < 0:
        raise ValueError("branch must be non-negative")
    while True:
        m = np.zeros((n_max + 1, n_max + 1))
        idx = np.arange(n_max + 1)
        m[idx, idx] = idx.astype(float) ** 2
        off = np.full(n_max, -beta / 2.0)
        off[0] = -beta / math.sqrt(2.0)
        m[idx[:-1], idx[1:]] = off
        m[idx[1:], idx[:-1]] = off
        dec = sym_eigen(m)
        k = n_max - branch  # eigenvalues are descending
        if k < 0:
            raise ValueError(f"branch {branch} exceeds the {n_max + 1} available eigenvalues")
        alpha = float(dec.eigenvalues[k])
        c = dec.eigenvectors[:, k].copy()
        b = c.copy()
        b[0] = c[0] * math.sqrt(2.0)
        b /= math.sqrt(b[0] ** 2 + 2.0 * math.fsum(b[1:] ** 2))
        lead = np.flatnonzero(np.abs(b) > 1e-8 * np.abs(b).max())[0]
        if b[lead] < 0:
            b = -b
        # the truncated spectrum only represents the branch once the tail is negligible
        if abs(b[-1]) < 1e-14 and abs(b[-2]) < 1e-14 and branch < n_max // 2:
            return MathieuCoeffs(float(beta), alpha, branch, b)
        n_max *= 2
        if n_max > 511:
            raise RuntimeError("Mathieu coefficients do not decay within n_max = 511")


# --------------------------------------------------------------------------
# almost Mathieu


class NotLocalizedError(ValueError):
    pass


@dataclass
class LocalizedEigenvector:
    lam: float
    theta_freq: float
    alpha_phase: float  # phase after re-indexing: center of localization at index 0
    energy: float
    u: np.ndarray  # u[i] is site i - box
    box: int
    center_original: int
    decay: tuple  # (C, delta, r2)
    residual: float
    participation: float
    flags: list = field(default_factory=list)

    def site(self, n):
        return self.u[np.asarray(n) + self.box]

    def right_tail(self, length: int) -> np.ndarray:
        """u_1..u_length (zero beyond the box)."""
        out = np.zeros(length)
        avail = self.u[self.box + 1:]
        k = min(length, len(avail))
        out[:k] = avail[:k]
        return out


def harper_matrix(lam: float, theta_freq: float, alpha_phase: float, box: int) -> np.ndarray:
    n = np.arange(-box, box + 1)
    h = np.diag(lam * np.cos(2.0 * math.pi * (n * theta_freq + alpha_phase)))
    h += np.diag(np.ones(2 * box), 1) + np.diag(np.ones(2 * box), -1)
    return h


def is_diophantine_candidate(theta_freq: float, max_den: int = 10_000, tol: float = 1e-12) -> bool:
    """False when theta_freq is numerically a rational with small denominator."""
    approx = Fraction(theta_freq).limit_denominator(max_den)
    return abs(float(approx) - theta_freq) > tol


def participation_ratio(u: np.ndarray) -> float:
    u2 = u * u
    return float(u2.sum() ** 2 / np.sum(u2 * u2))


def almost_mathieu_eigen(
    lam: float,
    theta_freq: float = GOLDEN,
    alpha_phase: float = 0.0,
    box: int = 128,
    selector: str = "most-localized",
    energy: float | None = None,
    allow_delocalized: bool = False,
) -> LocalizedEigenvector:
    """Localized eigenvector of the almost Mathieu operator on {-box..box}.

    Dirichlet truncation, dense eigensolve. Only eigenvectors whose values
    at +-box are below 1e-10 * max|u| and whose center keeps the 10-site
    fit margin away from the walls are candidates; among them the selector
    picks the smallest participation ratio or the energy nearest `energy`.
    The result is re-indexed so the largest |u_n| sits at index 0, with
    the phase shifted to alpha + n0 * theta_freq (mod 1).
    """
    if lam <= 2 and not allow_delocalized:
        raise NotLocalizedError(
            "not in localized regime; identities will be tested but decay acceptance waived"
        )
    if box < 128:
        raise ValueError("box must be at least 128")
    flags = []
    if not is_diophantine_candidate(theta_freq):
        flags.append("non-Diophantine: localization hypotheses violated")
    if lam <= 2:
        flags.append("lambda <= 2: not in localized regime, decay acceptance waived")
    if selector not in ("most-localized", "nearest-to"):
        raise ValueError(f"unknown selector {selector!r}")
    if selector == "nearest-to" and energy is None:
        raise ValueError("selector 'nearest-to' needs an energy")

    while True:
        h = harper_matrix(lam, theta_freq, alpha_phase, box)
        dec = sym_eigen(h)
        vecs = dec.eigenvectors
        amax = np.max(np.abs(vecs), axis=0)
        edge = np.maximum(np.abs(vecs[0]), np.abs(vecs[-1])) / amax
        centers = np.argmax(np.abs(vecs), axis=0) - box
        margin = box - 40
        ok = (edge <= 1e-10) & (np.abs(centers) <= margin)
        if ok.any() or lam <= 2:
            break
        if 2 * (2 * box) + 1 > 512:
            raise RuntimeError(f"no eigenvector localized away from the walls within box {box}")
        box *= 2

    cand = np.flatnonzero(ok) if ok.any() else np.arange(vecs.shape[1])
    if selector == "most-localized":
        prs = np.array([participation_ratio(vecs[:, i]) for i in cand])
        pick = cand[int(np.argmin(prs))]
    else:
        pick = cand[int(np.argmin(np.abs(dec.eigenvalues[cand] - energy)))]
    e = float(dec.eigenvalues[pick])
    v = vecs[:, pick].copy()
    n0 = int(centers[pick])
    if v[n0 + box] < 0:
        v = -v
    # shift so the center is at index 0 (sites leaving the box are dropped, new ones are zero)
    u = np.zeros_like(v)
    if n0 >= 0:
        u[: len(v) - n0] = v[n0:]
    else:
        u[-n0:] = v[: len(v) + n0]
    alpha_new = (alpha_phase + n0 * theta_freq) % 1.0
    res = am_residual(u, lam, theta_freq, alpha_new, e, box)
    fit = _decay_fit_centered(u, box)
    if lam > 2 and fit[1] <= 0:
        warnings.warn("fitted decay rate is not positive", RuntimeWarning, stacklevel=2)
    return LocalizedEigenvector(
        float(lam), float(theta_freq), alpha_new, e, u, box, n0, fit, res, participation_ratio(u), flags
    )


def am_residual(u, lam, theta_freq, alpha, e, box) -> float:
    """max |u_{n+1} + u_{n-1} + lam cos 2pi(n theta + alpha) u_n - E u_n| for |n| <= box-2."""
    n = np.arange(-box + 1, box)
    r = u[2:] + u[:-2] + lam * np.cos(2.0 * math.pi * (n * theta_freq + alpha)) * u[1:-1] - e * u[1:-1]
    inner = np.abs(n) <= box - 2
    return float(np.max(np.abs(r[inner])))


def _decay_fit_centered(u: np.ndarray, box: int):
    from .spectra import decay_fit

    n = np.arange(-box, box + 1)
    keep = (np.abs(u) > 1e-12 * np.abs(u).max()) & (np.abs(n) <= box - 10)
    return decay_fit(np.abs(u[keep]), positions=np.abs(n[keep]))
