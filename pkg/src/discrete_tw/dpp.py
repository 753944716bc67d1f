"""Determinantal point processes on a finite window of {1, 2, ...}.

Sampling is the spectral (HKPV) algorithm: keep eigenvector i with
probability lambda_i, then draw points one at a time from the projection
kernel of the kept vectors. Trials with the same number of kept vectors
are processed together as a stacked array.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .linalg import SpectralDecomposition, hankel_square, HankelOperator, sym_eigen, sym_matrix

BAND = 1e-10
CHUNK = 10_000
# det(I - K) on indices > n matches P(L <= n + PINNED_OFFSET); calibrated by
# scripts/calibrate_offset.py at theta = 4
PINNED_OFFSET = 1


class DppRejected(ValueError):
    def __init__(self, message: str, eigenvalues):
        super().__init__(message)
        self.eigenvalues = list(eigenvalues)


@dataclass
class DppKernel:
    K: np.ndarray
    eig: SpectralDecomposition
    window: tuple[int, int]  # first and last index, inclusive
    clamped: float = 0.0  # largest amount an eigenvalue was moved
    raw_range: tuple[float, float] = (0.0, 0.0)

    @property
    def probs(self) -> np.ndarray:
        return self.eig.eigenvalues

    def index(self, i: int) -> int:
        lo, hi = self.window
        if not lo <= i <= hi:
            raise ValueError(f"index {i} outside window {lo}..{hi}")
        return i - lo


@dataclass
class PointSample:
    points: tuple
    seed: int | None
    algorithm: str = "spectral-hkpv"


def validate_dpp(k, first: int = 1, band: float = BAND) -> DppKernel:
    """Check 0 <= K <= I up to `band`, then clamp eigenvalues into [0, 1]."""
    k = sym_matrix(k, tol=1e-12)
    dec = sym_eigen(k)
    w = dec.eigenvalues
    bad = w[(w < -band) | (w > 1 + band)]
    if bad.size:
        raise DppRejected(f"spectrum outside [-{band:g}, 1+{band:g}]: {bad.tolist()}", bad)
    clamped = np.clip(w, 0.0, 1.0)
    moved = float(np.max(np.abs(clamped - w))) if w.size else 0.0
    dec = SpectralDecomposition(clamped, dec.eigenvectors, dec.residual, dec.sweeps, dec.off_norm)
    raw = (float(w.min()), float(w.max())) if w.size else (0.0, 0.0)
    return DppKernel(k, dec, (first, first + k.shape[0] - 1), moved, raw)


def _projection_batch(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample from projection DPPs given stacked orthonormal columns v (T, n, k).

    Returns (T, k) 0-based indices.
    """
    t, n, k = v.shape
    out = np.empty((t, k), dtype=int)
    rows = np.arange(t)
    for step in range(k):
        r = k - step
        p = np.einsum("tnj,tnj->tn", v, v) / r
        cdf = np.cumsum(p, axis=1)
        u = rng.random(t) * cdf[:, -1]
        idx = np.minimum((cdf < u[:, None]).sum(axis=1), n - 1)
        out[:, step] = idx
        if r == 1:
            break
        row = v[rows, idx, :]  # (T, r)
        j = np.argmax(np.abs(row), axis=1)
        pivot_col = v[rows, :, j]  # (T, n)
        pivot = row[rows, j]
        # eliminate coordinate idx from every column, then drop column j
        v = v - pivot_col[:, :, None] * (row / pivot[:, None])[:, None, :]
        last = r - 1
        swap = v[rows, :, last].copy()
        v[rows, :, j] = swap
        v = v[:, :, :last]
        v, _ = np.linalg.qr(v)
    return out


def sample_many(dpp: DppKernel, trials: int, seed: int) -> list[tuple]:
    """`trials` independent samples as sorted tuples of window indices."""
    rng = np.random.default_rng(seed)
    lam = dpp.eig.eigenvalues
    vecs = dpp.eig.eigenvectors
    lo = dpp.window[0]
    keep = rng.random((trials, len(lam))) < lam[None, :]
    counts = keep.sum(axis=1)
    result: list[tuple] = [()] * trials
    for k in np.unique(counts):
        if k == 0:
            continue
        which = np.nonzero(counts == k)[0]
        for start in range(0, len(which), CHUNK):
            block = which[start: start + CHUNK]
            cols = np.nonzero(keep[block])[1].reshape(len(block), k)
            v = np.transpose(vecs[:, cols], (1, 0, 2))  # (T, n, k)
            pts = np.sort(_projection_batch(v, rng), axis=1) + lo
            for t, row in zip(block, pts):
                result[t] = tuple(int(x) for x in row)
    return result


def sample(dpp: DppKernel, seed: int) -> PointSample:
    return PointSample(sample_many(dpp, 1, seed)[0], seed)


def correlation_check(dpp: DppKernel, sets, trials: int, seed: int, samples=None, sigmas: float = 4.0) -> dict:
    """Empirical P(A in X) against det K_A for each small index set A.

    A binomial standard error is used with a 0.5/trials continuity
    allowance, so events of tiny probability do not fail on a single hit.
    """
    sets = [tuple(a) for a in sets]
    for a in sets:
        if len(set(a)) != len(a):
            raise ValueError(f"duplicate index in {a}")
        if not 1 <= len(a) <= 3:
            raise ValueError(f"sets must have 1 to 3 indices, got {a}")
        for i in a:
            dpp.index(i)
    if samples is None:
        samples = sample_many(dpp, trials, seed)
    trials = len(samples)
    as_sets = [set(s) for s in samples]
    rows = []
    for a in sets:
        ix = [dpp.index(i) for i in a]
        expect = float(np.linalg.det(dpp.K[np.ix_(ix, ix)]))
        hits = sum(1 for s in as_sets if s.issuperset(a))
        freq = hits / trials
        se = math.sqrt(max(expect * (1 - expect), 0.0) / trials)
        dev = abs(freq - expect)
        ok = dev <= sigmas * se + 0.5 / trials
        rows.append({"set": list(a), "expected": expect, "empirical": freq, "stderr": se, "pass": ok})
    return {"trials": trials, "seed": seed, "rows": rows, "pass": all(r["pass"] for r in rows)}


def count_check(dpp: DppKernel, samples, sigmas: float = 4.0) -> dict:
    """Mean number of points against trace K (variance sum lambda(1 - lambda))."""
    lam = dpp.eig.eigenvalues
    counts = np.array([len(s) for s in samples], dtype=float)
    expect = float(np.sum(lam))
    se = math.sqrt(float(np.sum(lam * (1 - lam))) / len(counts))
    dev = abs(float(counts.mean()) - expect)
    return {"expected": expect, "empirical": float(counts.mean()), "stderr": se,
            "pass": dev <= sigmas * se + 0.5 / len(counts)}


def lis_length(perm) -> int:
    """Longest strictly increasing subsequence by patience sorting."""
    piles: list = []
    for x in perm:
        i = bisect.bisect_left(piles, x)
        if i == len(piles):
            piles.append(x)
        else:
            piles[i] = x
    return len(piles)


def rsk_lis_mc(theta: float, trials: int, seed: int) -> np.ndarray:
    """Empirical distribution of L under poissonized Plancherel measure.

    Each trial draws N ~ Poisson(theta) and a uniform permutation of size N.
    Returns counts[l] = number of trials with L = l.
    """
    if not 0 <= theta <= 16:
        raise ValueError(f"theta must lie in [0, 16], got {theta}")
    if trials < 10_000:
        raise ValueError(f"trials must be at least 10000, got {trials}")
    rng = np.random.default_rng(seed)
    sizes = rng.poisson(theta, trials)
    keys = rng.random(int(sizes.sum()))
    lengths = np.empty(trials, dtype=int)
    pos = 0
    for t, n in enumerate(sizes):
        # ranks of iid uniforms form a uniform permutation
        lengths[t] = lis_length(keys[pos: pos + n])
        pos += n
    return np.bincount(lengths, minlength=int(lengths.max()) + 2 if trials else 1)


def bessel_dpp_kernel(theta: float, n_max: int, tail: int = 64) -> np.ndarray:
    """Discrete Bessel kernel on {1..n_max}, diagonal included, as Gamma_phi^2."""
    from .models import bessel_symbols, bessel_tail_norm

    length = 2 * n_max - 1 + tail
    _, _, phi = bessel_symbols(theta, length)
    k, _ = hankel_square(HankelOperator(phi, n_max), tail, bessel_tail_norm(theta, length))
    return k


def gap_determinant(k, n: int, m: int, first: int = 1, tail_tol: float = 1e-12) -> float:
    """det(I - K) restricted to the indices n+1..n+m, as prod(1 - lambda_i).

    `k` is a kernel on first..first+len(k)-1 covering that range; the
    diagonal mass beyond n+m within `k` must be at most `tail_tol`.
    """
    k = np.asarray(k, dtype=float)
    last = first + k.shape[0] - 1
    if n + m > last:
        raise ValueError(f"kernel covers indices up to {last}, need {n + m}")
    lo = max(n + 1, first) - first
    beyond = float(np.sum(np.diag(k)[n + m + 1 - first:]))
    if beyond > tail_tol:
        raise ValueError(f"tail mass {beyond:.3e} beyond index {n + m} exceeds {tail_tol:g}")
    sub = k[lo: n + m + 1 - first, lo: n + m + 1 - first]
    if sub.size == 0:
        return 1.0
    lam = sym_eigen(sub).eigenvalues
    return float(np.prod(1.0 - lam))


def gap_sweep(theta: float, ns, m: int = 40) -> dict:
    ns = list(ns)
    size = max(ns) + m + 8
    k = bessel_dpp_kernel(theta, size)
    return {int(n): gap_determinant(k, int(n), m) for n in ns}


def calibrate_offset(theta: float, ns, lis_counts, offsets=(-1, 0, 1), sigmas: float = 4.0, m: int = 40) -> dict:
    """For each offset o: does det(I - K)_{>n} match P(L <= n + o) within `sigmas`?"""
    gaps = gap_sweep(theta, ns, m)
    trials = int(np.sum(lis_counts))
    cdf = np.cumsum(lis_counts) / trials
    out = {}
    for o in offsets:
        rows = []
        for n, g in gaps.items():
            idx = n + o
            emp = float(cdf[min(idx, len(cdf) - 1)]) if idx >= 0 else 0.0
            se = math.sqrt(max(g * (1 - g), 0.0) / trials)
            rows.append({"n": n, "gap_det": g, "mc": emp, "stderr": se,
                         "pass": abs(emp - g) <= sigmas * se + 0.5 / trials})
        out[o] = {"rows": rows, "pass": all(r["pass"] for r in rows)}
    return out


def default_sets(first: int = 1) -> list[tuple]:
    base = range(first, first + 4)
    return [(i,) for i in base] + list(combinations(base, 2)) + [tuple(base[:3])]


@dataclass
class DppCheckConfig:
    theta: float = 1.0
    window: int = 48
    trials: int = 200_000
    seed: int = 0
    marginal_max: int = 20
    extras: dict = field(default_factory=dict)


def verify_bessel_dpp(cfg: DppCheckConfig) -> dict:
    """Validation, marginals, small-set correlations and point counts."""
    k = bessel_dpp_kernel(cfg.theta, cfg.window)
    dpp = validate_dpp(k)
    samples = sample_many(dpp, cfg.trials, cfg.seed)
    marg = correlation_check(dpp, [(i,) for i in range(1, min(cfg.marginal_max, cfg.window) + 1)],
                             cfg.trials, cfg.seed, samples)
    corr = correlation_check(dpp, default_sets(), cfg.trials, cfg.seed, samples)
    cnt = count_check(dpp, samples)
    return {
        "theta": cfg.theta,
        "window": [1, cfg.window],
        "spectrum": {"min": dpp.raw_range[0], "max": dpp.raw_range[1], "clamped": dpp.clamped},
        "marginals": marg,
        "correlations": corr,
        "counts": cnt,
        "pass": marg["pass"] and corr["pass"] and cnt["pass"],
    }
