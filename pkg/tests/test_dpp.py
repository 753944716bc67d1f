import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_tw import dpp
from oracles import dpp_inclusion_exact


@pytest.fixture(scope="module")
def bessel48():
    return dpp.validate_dpp(dpp.bessel_dpp_kernel(1.0, 48))


def test_bessel_kernel_accepted(bessel48):
    lo, hi = bessel48.raw_range
    assert lo >= -1e-10 and hi <= 1 + 1e-10
    assert bessel48.clamped <= 1e-10


def test_rejects_eigenvalue_two():
    with pytest.raises(dpp.DppRejected) as info:
        dpp.validate_dpp(2 * np.eye(1))
    assert info.value.eigenvalues == [2.0]


def test_zero_kernel_empty_samples():
    d = dpp.validate_dpp(np.zeros((4, 4)))
    assert all(s == () for s in dpp.sample_many(d, 50, 0))


def test_identity_kernel_full_window():
    d = dpp.validate_dpp(np.eye(5))
    assert dpp.sample(d, 3).points == (1, 2, 3, 4, 5)


def test_sampling_deterministic(bessel48):
    assert dpp.sample_many(bessel48, 500, 9) == dpp.sample_many(bessel48, 500, 9)


def test_projection_sampler_exact_distribution():
    # small random kernel: empirical subset frequencies vs exact probabilities
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    k = q @ np.diag([0.9, 0.6, 0.3, 0.1]) @ q.T
    d = dpp.validate_dpp((k + k.T) / 2)
    trials = 40_000
    samples = dpp.sample_many(d, trials, 1)
    exact = dpp_inclusion_exact(d.K)
    for s, p in exact.items():
        emp = sum(1 for x in samples if x == tuple(i + 1 for i in s)) / trials
        assert abs(emp - p) <= 4.5 * math.sqrt(p * (1 - p) / trials) + 1e-4, (s, emp, p)


def test_marginals_bessel_theta1(bessel48):
    res = dpp.correlation_check(bessel48, [(i,) for i in range(1, 21)], 200_000, 11)
    assert res["pass"], [r for r in res["rows"] if not r["pass"]]


def test_pair_correlation(bessel48):
    res = dpp.correlation_check(bessel48, [(1, 2)], 200_000, 12)
    assert res["pass"]


def test_correlation_input_checks(bessel48):
    with pytest.raises(ValueError, match="duplicate"):
        dpp.correlation_check(bessel48, [(1, 1)], 10, 0)
    with pytest.raises(ValueError):
        dpp.correlation_check(bessel48, [(1, 2, 3, 4)], 10, 0)
    with pytest.raises(ValueError, match="outside"):
        dpp.correlation_check(bessel48, [(49,)], 10, 0)


@given(st.lists(st.integers(0, 50), max_size=30))
def test_lis_matches_quadratic(seq):
    best = [1] * len(seq)
    for i in range(len(seq)):
        for j in range(i):
            if seq[j] < seq[i]:
                best[i] = max(best[i], best[j] + 1)
    assert dpp.lis_length(seq) == (max(best) if seq else 0)


def test_rsk_theta_one_empty_probability():
    counts = dpp.rsk_lis_mc(1.0, 100_000, 5)
    p0 = counts[0] / counts.sum()
    assert abs(p0 - math.exp(-1)) <= 4 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 100_000)


def test_rsk_small_theta():
    counts = dpp.rsk_lis_mc(1e-9, 10_000, 0)
    assert counts[0] == 10_000


def test_rsk_preconditions():
    with pytest.raises(ValueError):
        dpp.rsk_lis_mc(20.0, 10_000, 0)
    with pytest.raises(ValueError):
        dpp.rsk_lis_mc(1.0, 100, 0)


def test_gap_zero_kernel():
    assert dpp.gap_determinant(np.zeros((10, 10)), 2, 5) == 1.0


def test_gap_far_tail_is_one():
    g = dpp.gap_sweep(1.0, [12], m=20)
    assert g[12] == pytest.approx(1.0, abs=1e-12)


def test_gap_tail_mass_error():
    with pytest.raises(ValueError, match="tail mass"):
        dpp.gap_determinant(np.eye(10) * 0.5, 1, 3)


def test_gap_monotone_theta4():
    g = dpp.gap_sweep(4.0, range(0, 13))
    vals = [g[n] for n in sorted(g)]
    assert all(0 <= v <= 1 for v in vals)
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_gap_whole_window_exact():
    # det(I - K) on {1, 2, ...} is P(L <= 1): only decreasing permutations,
    # so the value is sum_n e^-theta theta^n / (n!)^2
    theta = 4.0
    exact = sum(math.exp(-theta) * theta**n / math.factorial(n) ** 2 for n in range(60))
    assert dpp.gap_sweep(theta, [0])[0] == pytest.approx(exact, abs=1e-12)


def test_pinned_offset_calibration(pinned_offset):
    theta = pinned_offset["theta"]
    lo, hi = pinned_offset["n_range"]
    lis = dpp.rsk_lis_mc(theta, 200_000, 2024)
    cal = dpp.calibrate_offset(theta, range(lo, hi + 1), lis)
    assert dpp.PINNED_OFFSET == pinned_offset["offset"]
    assert cal[pinned_offset["offset"]]["pass"]
    assert [o for o, v in cal.items() if v["pass"]] == [pinned_offset["offset"]]
