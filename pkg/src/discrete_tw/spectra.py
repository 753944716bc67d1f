"""Spectral checks on finite sections: singular-number transfer K = Gamma^2,
multiplicity relations between K and Gamma, and exponential decay fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import sym_eigen


@dataclass
class MultiplicityProfile:
    clusters: list  # [(value, multiplicity)], in input order
    tol: float

    @property
    def total(self) -> int:
        return sum(m for _, m in self.clusters)


def multiplicity_profile(eigs, tol: float) -> MultiplicityProfile:
    """Greedy clustering of sorted eigenvalues: a new cluster starts whenever
    the gap to the previous value exceeds `tol`. Cluster value is the mean."""
    eigs = [float(e) for e in eigs]
    clusters = []
    group: list[float] = []
    for e in eigs:
        if group and abs(e - group[-1]) > tol:
            clusters.append((float(np.mean(group)), len(group)))
            group = []
        group.append(e)
    if group:
        clusters.append((float(np.mean(group)), len(group)))
    return MultiplicityProfile(clusters, tol)


def check_prop23(k_eigs, gamma_eigs, tol: float) -> dict:
    """Multiplicity relations between K = Gamma^2 and Gamma.

    For each K-cluster with value above `tol`, Gamma eigenvalues g with
    |g^2 - value| <= tol are counted by sign. The relations checked are
    nu_K = n_plus + n_minus, and |n_plus - n_minus| is 0 for even nu_K and
    1 for odd nu_K. Matching is done in the squared domain because
    sqrt amplifies errors near zero.
    """
    k_sorted = sorted((float(x) for x in k_eigs), reverse=True)
    g = np.asarray(gamma_eigs, dtype=float)
    prof = multiplicity_profile(k_sorted, tol)
    rows, failures = [], []
    for value, mult in prof.clusters:
        if value <= tol:
            continue
        near = np.abs(g * g - value) <= tol
        n_plus = int(np.sum(near & (g > 0)))
        n_minus = int(np.sum(near & (g < 0)))
        ok_sum = mult == n_plus + n_minus
        split = abs(n_plus - n_minus)
        ok_parity = split == (mult % 2)
        row = {"value": value, "nu_K": mult, "nu_plus": n_plus, "nu_minus": n_minus,
               "sum_ok": ok_sum, "parity_ok": ok_parity}
        rows.append(row)
        if not (ok_sum and ok_parity):
            failures.append(row)
    kernel_count = sum(m for v, m in prof.clusters if abs(v) <= tol)
    return {
        "clusters": rows,
        "failures": failures,
        "pass": not failures,
        "tol": tol,
        # nu_K(0) is an infinite-dimensional statement; finite sections only report it
        "near_zero_count": kernel_count,
    }


def _anti_triangular(symbol, dim: int, rank: int) -> np.ndarray:
    """Hankel section keeping phi(j) for j <= rank (rank at most `rank`)."""
    phi = np.asarray(symbol, dtype=float)
    j = np.arange(dim)
    idx = j[:, None] + j[None, :]
    return np.where(idx < rank, phi[np.minimum(idx, len(phi) - 1)], 0.0)


def singular_transfer_check(k, gamma, tol: float = 1e-8, symbol=None, ranks=(1, 2, 4, 8)) -> dict:
    """max_n |s_n(K) - s_n(Gamma)^2| against tol * s_1(K), plus the bound
    s_{n+1}(Gamma) <= ||Gamma - Gamma_n|| for anti-triangular truncations
    Gamma_n of rank <= n (needs the Hankel `symbol`)."""
    k = np.asarray(k, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if k.shape != gamma.shape:
        raise ValueError(f"dimension mismatch: {k.shape} vs {gamma.shape}")
    s_k = sym_eigen(k).singular_numbers
    s_g = sym_eigen(gamma).singular_numbers
    err = float(np.max(np.abs(s_k - s_g**2))) if len(s_k) else 0.0
    scale = float(s_k[0]) if len(s_k) else 0.0
    out = {
        "max_abs_error": err,
        "relative_error": err / scale if scale > 0 else err,
        "s_K": s_k.tolist(),
        "s_Gamma": s_g.tolist(),
    }
    out["pass"] = err <= tol * scale if scale > 0 else err <= tol
    if symbol is not None:
        bounds = []
        for r in ranks:
            if r >= len(s_g):
                continue
            dist = float(sym_eigen(gamma - _anti_triangular(symbol, gamma.shape[0], r)).singular_numbers[0])
            # Eckart-Young: any rank <= r matrix is at distance >= s_{r+1}
            ok = s_g[r] <= dist * (1 + 1e-12) + 1e-15
            bounds.append({"rank": r, "s_next": float(s_g[r]), "truncation_norm": dist, "ok": bool(ok)})
        out["truncation_bounds"] = bounds
        out["pass"] = out["pass"] and all(b["ok"] for b in bounds)
    return out


def decay_fit(seq, positions=None, floor: float = 1e-14, min_points: int = 8):
    """Least-squares fit of log(seq) = log C - delta * position.

    Returns (C, delta, r2). Values at or below `floor` are dropped; at
    least `min_points` must remain.
    """
    y = np.asarray(seq, dtype=float)
    x = np.arange(len(y), dtype=float) if positions is None else np.asarray(positions, dtype=float)
    keep = y > floor
    x, y = x[keep], y[keep]
    if len(y) < min_points:
        raise ValueError(f"decay_fit needs at least {min_points} points above {floor}, got {len(y)}")
    ly = np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    pred = intercept + slope * x
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(intercept)), float(-slope), r2
