import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import factorial

from qlc.bosonic import (
    amplify,
    chernoff_tail_bound,
    coherent,
    coherent_overlap,
    hellinger_bures,
    poisson_tail,
    truncate_channel,
    truncation_error_exact,
)
from qlc.errors import ContractViolation
from qlc.linalg import random_density, trace_distance

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _dense_truncation_distance(alpha, m0, dim=120):
    # oracle: build both density matrices on a large Fock space directly
    m = np.arange(dim)
    vec = np.exp(-abs(alpha) ** 2 / 2) * alpha**m / np.sqrt(factorial(m))
    rho = np.outer(vec, vec.conj())
    out = np.zeros_like(rho)
    out[:m0, :m0] = rho[:m0, :m0]
    out[0, 0] += 1 - np.trace(rho[:m0, :m0]).real
    return 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - out)))


def test_vacuum():
    s = coherent(0, 10)
    assert s.tail_mass == 0
    assert_allclose(s.vector[0], 1)


def test_tail_matches_norm_deficit():
    s = coherent(1.0, 30)
    direct = sum(math.exp(-1) / math.factorial(m) for m in range(30, 80))
    assert_allclose(s.tail_mass, direct, atol=1e-12)
    assert_allclose(1 - s.norm_squared(), direct, atol=1e-12)
    s = coherent(2.5, 12)
    assert_allclose(1 - s.norm_squared(), s.tail_mass, atol=1e-12)


def test_overlap_vacuum_unit():
    assert_allclose(abs(coherent_overlap(coherent(0, 40), coherent(1, 40))), math.exp(-0.5), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
)
def test_overlap_identity(a, b):
    got = abs(coherent_overlap(coherent(a, 60), coherent(b, 60)))
    assert_allclose(got, math.exp(-abs(a - b) ** 2 / 2), atol=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7 + 0.4j, 3.0])
@pytest.mark.parametrize("m0", [1, 2, 5, 9, 20])
def test_truncation_exact_matches_dense(alpha, m0):
    assert_allclose(truncation_error_exact(alpha, m0), _dense_truncation_distance(alpha, m0), atol=1e-12)


def test_truncation_vacuum_exact():
    for m0 in (1, 3, 10):
        assert truncate_channel(coherent(0, 10), m0).err_exact == 0


def test_truncation_alpha_one():
    res = truncate_channel(coherent(1.0, 40), 8)
    assert res.err_exact <= res.err_bound
    tail = poisson_tail(1.0, 8)
    assert tail <= chernoff_tail_bound(1.0, 8)
    assert_allclose(res.err_bound, math.sqrt(2 * tail))


def test_truncation_bound_on_grid():
    for alpha in np.arange(0, 3.0001, 0.25):
        for m0 in range(1, 41):
            res = truncate_channel(coherent(alpha, 80), m0)
            assert res.err_exact <= res.err_bound + 1e-15


def test_chernoff_holds_when_cap_exceeds_mean():
    for alpha in np.arange(0.25, 3.0001, 0.25):
        lam = alpha**2
        for m0 in range(1, 41):
            if m0 > lam:
                assert poisson_tail(lam, m0) <= chernoff_tail_bound(lam, m0) * (1 + 1e-12)


def test_truncation_decays_with_alpha0():
    errs = [truncation_error_exact(a, math.ceil((math.e * a) ** 2)) for a in (0.5, 1.0, 1.5, 2.0)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    for a, e in zip((0.5, 1.0, 1.5, 2.0), errs):
        assert e <= math.sqrt(2) * math.exp(-(a**2) * math.e**2 / 2) * 1.5


def test_mixed_input_truncation():
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    from qlc.bosonic import TruncatedFockState

    s = TruncatedFockState(3, None, 0.0, None, rho)
    res = truncate_channel(s, 2)
    assert_allclose(res.err_exact, 0.2)


def test_amplify_unit_gain():
    assert amplify(coherent(0.7, 40), 1.0).err_model == 0


def test_amplify_worked_value():
    N, N0 = 10**6, 10**3
    g = math.sqrt(N / (N - N0))
    res = amplify(coherent(1.0, 40), g)
    assert_allclose((g - 1) ** 2, 2.5e-7, rtol=0.01)
    assert_allclose(res.err_model, 5e-4, rtol=0.01)
    assert_allclose(res.state.amplitude, g)


def test_amplify_error_matches_trace_distance():
    z, g = 0.9 + 0.3j, 1.2
    res = amplify(coherent(z, 60), g)
    d = trace_distance(coherent(z, 60).density(), coherent(g * z, 60).density())
    assert_allclose(res.err_model, d, atol=1e-10)


def test_amplify_scales_with_loss_fraction():
    N = 10**8
    errs = []
    for N0 in (10**3, 10**4):
        g = math.sqrt(N / (N - N0))
        errs.append(amplify(coherent(1.0, 40), g).err_model)
    assert_allclose(errs[1] / errs[0], 10, rtol=0.01)


def test_amplify_rejects_untagged_input():
    from qlc.bosonic import TruncatedFockState

    s = TruncatedFockState(2, None, 0.0, None, np.eye(2) / 2)
    with pytest.raises(ContractViolation):
        amplify(s, 1.1)


def test_hellinger_bures_identical():
    rho = coherent(0.5, 30).density()
    d_h, d_b = hellinger_bures(rho, rho)
    assert d_h < 1e-7 and d_b < 1e-7


def test_hellinger_bures_commuting_equal(rng):
    a = np.diag(rng.dirichlet(np.ones(5)))
    b = np.diag(rng.dirichlet(np.ones(5)))
    d_h, d_b = hellinger_bures(a, b)
    assert abs(d_h - d_b) <= 1e-10


def test_hellinger_bures_no_go_values():
    d_h, d_b = hellinger_bures(coherent(0, 40).density(), coherent(1, 40).density())
    assert_allclose(d_h, math.sqrt(2 * (1 - math.exp(-1))), atol=1e-10)
    assert_allclose(d_b, math.sqrt(2 * (1 - math.exp(-0.5))), atol=1e-10)
    assert d_h - d_b > 0.167


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=20))
def test_hellinger_bures_inequalities(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_density(dim, rng, rank=1 + seed % dim)
    b = random_density(dim, rng)
    d_h, d_b = hellinger_bures(a, b)
    assert d_h >= d_b - 1e-10
    assert d_h <= math.sqrt(2 * trace_distance(a, b)) + 1e-9
