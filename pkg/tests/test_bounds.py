import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qlc.bounds import (
    binary_entropy,
    classical_no_go_gap,
    h2,
    haar_qubits,
    holevo_lower_bound,
    single_qubit_holevo_check,
    symmetric_coordinates,
    tensor_power_rows,
)
from qlc.errors import ContractViolation, InsufficientCutoffError


def test_h2_convention():
    assert h2(0) == 0
    assert_allclose(h2(0.01), 0.0664385619, atol=1e-9)
    assert_allclose(binary_entropy(0.5), 1.0)


def test_holevo_examples():
    assert_allclose(holevo_lower_bound(1, 1, 0).holevo_bits, 1.0, atol=1e-12)
    assert_allclose(holevo_lower_bound(4, 15, 0).holevo_bits, 16.0, atol=1e-12)
    r = holevo_lower_bound(4, 15, 0.01)
    assert_allclose(r.corrected_bound_bits, 16 * 0.98 - 2 * h2(0.01), atol=1e-12)
    assert abs(r.corrected_bound_bits - 15.547) < 5e-4
    assert r.corrected_bound_binary_entropy < r.corrected_bound_bits


def test_holevo_corrected_below_and_converging():
    prev = None
    for eps in (0.4, 0.1, 1e-2, 1e-4, 0.0):
        r = holevo_lower_bound(6, 100, eps)
        assert r.corrected_bound_bits <= r.holevo_bits
        if prev is not None:
            assert r.corrected_bound_bits > prev
        prev = r.corrected_bound_bits
    assert prev == holevo_lower_bound(6, 100, 0.0).holevo_bits


def test_holevo_rejects_bad_eps():
    for eps in (-0.1, 0.5, 1.0):
        with pytest.raises(ContractViolation):
            holevo_lower_bound(2, 3, eps)


def test_dicke_coordinates_isometric(rng):
    states = haar_qubits(50, rng)
    for N in (1, 3, 6):
        full = tensor_power_rows(states, N)
        sym = symmetric_coordinates(states, N)
        assert_allclose(full @ full.conj().T, sym @ sym.conj().T, atol=1e-12)


@pytest.mark.parametrize("N,tol", [(1, 0.01), (3, 0.01), (7, 0.02), (10, 0.02)])
def test_single_qubit_entropy(N, tol):
    assert abs(single_qubit_holevo_check(N, samples=200_000) - math.log2(N + 1)) <= tol


def test_single_qubit_entropy_converges_with_samples():
    N = 5
    errs = [
        np.mean([abs(single_qubit_holevo_check(N, samples=s, seed=k) - math.log2(N + 1)) for k in range(4)])
        for s in (1_000, 100_000)
    ]
    assert errs[1] < errs[0]


def test_no_go_values():
    r = classical_no_go_gap(40)
    assert_allclose(r.d_hellinger, math.sqrt(2 - 2 * math.exp(-1.0)), atol=1e-10)
    assert_allclose(r.d_bures, math.sqrt(2 - 2 * math.exp(-0.5)), atol=1e-10)
    assert abs(r.gap - 0.23727) < 5e-5
    assert abs(r.eps_floor - 0.00704) < 5e-6
    assert r.gap > 0.167 and r.eps_floor > 0.003


def test_no_go_cutoff_stability():
    a, b = classical_no_go_gap(40), classical_no_go_gap(80)
    assert abs(a.gap - b.gap) <= 1e-10
    assert abs(a.eps_floor - b.eps_floor) <= 1e-10


def test_no_go_small_cutoff():
    with pytest.raises(InsufficientCutoffError):
        classical_no_go_gap(20)
