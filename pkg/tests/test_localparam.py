import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qlc.circuit import perturb_circuit, prepare_state, random_circuit
from qlc.errors import ContractViolation, NotSmallRotationError
from qlc.linalg import (
    basis_state,
    diamond_distance_unitary_bounds,
    expm_hermitian,
    pure_trace_distance,
    random_hermitian,
    random_state,
    random_unitary,
)
from qlc.localparam import (
    decouple,
    extract_rotation,
    localize_unitary,
    parameterize,
    random_decoupling_instance,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_extract_identity():
    rot = extract_rotation(np.eye(4))
    assert rot.eps_certificate == 0
    assert_allclose(rot.generator, 0, atol=1e-15)


def test_extract_single_qubit_x_rotation():
    rot = extract_rotation(expm_hermitian(X, 0.02))
    assert rot.eps_certificate <= 0.04
    assert_allclose(rot.eps_certificate, 0.02, atol=1e-12)
    # generator is X/2 up to sign and an identity shift absorbed in the phase
    assert_allclose(abs(np.trace(rot.generator @ X)) / 2, 0.5, atol=1e-10)
    assert_allclose(rot.reconstruct(), rot.unitary, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(min_value=1e-4, max_value=0.5))
def test_extract_round_trip(seed, t):
    rng = np.random.default_rng(seed)
    w = np.exp(1j * rng.uniform(0, 2 * np.pi)) * expm_hermitian(random_hermitian(4, rng), t)
    rot = extract_rotation(w)
    assert rot.eps_certificate <= 2 * t * (1 + 1e-9)
    assert_allclose(rot.reconstruct(), w, atol=1e-10)
    assert np.linalg.norm(rot.generator, 2) <= 1 + 1e-9
    upper = diamond_distance_unitary_bounds(w, np.eye(4))[1]
    assert upper <= rot.eps_certificate * (1 + 1e-6) + 1e-12


def test_extract_rejects_wide_spread():
    with pytest.raises(NotSmallRotationError):
        extract_rotation(np.diag(np.exp(1j * np.array([0.0, 2.1, 4.2]))))


def test_localize_identity():
    rot = localize_unitary(np.eye(4), basis_state(0, 4), 0.1)
    assert rot.eps_certificate < 1e-12


def test_localize_qubit_rotation():
    theta = math.asin(0.05)
    v = expm_hermitian(X, theta)
    rot = localize_unitary(v, basis_state(0, 2), 0.05)
    assert rot.eps_certificate <= 4 * 0.05
    assert_allclose(rot.unitary @ basis_state(0, 2), v @ basis_state(0, 2), atol=1e-12)


def test_localize_eigenphase_profile(rng):
    phi = random_state(8, rng)
    v = expm_hermitian(random_hermitian(8, rng), 0.05)
    rot = localize_unitary(v, phi, 1.0)
    c = np.vdot(phi, v @ phi)
    eta = math.acos(abs(c))
    phases = np.sort(np.angle(np.linalg.eigvals(rot.unitary) * np.exp(-1j * np.angle(c))))
    assert_allclose(phases[[0, -1]], [-eta, eta], atol=1e-9)
    assert_allclose(phases[1:-1], 0, atol=1e-9)


def test_localize_rejects_far_image(rng):
    with pytest.raises(ContractViolation):
        localize_unitary(X, basis_state(0, 2), 0.5)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(min_value=1e-4, max_value=0.3))
def test_localize_certificate_at_most_four_distance(seed, t):
    rng = np.random.default_rng(seed)
    phi = random_state(6, rng)
    v = expm_hermitian(random_hermitian(6, rng), t)
    d = pure_trace_distance(phi, v @ phi)
    rot = localize_unitary(v, phi, d)
    assert rot.eps_certificate <= 4 * d + 1e-12
    assert_allclose(rot.unitary @ phi, v @ phi, atol=1e-10)


def test_decouple_exact_product(rng):
    psi, phi = random_state(4, rng), random_state(4, rng)
    wa, ub = random_unitary(2, rng), random_unitary(2, rng)
    v = np.kron(np.kron(wa, ub), np.eye(2))
    res = decouple(
        psi,
        phi,
        v,
        1e-9,
        psi_target=np.kron(wa, np.eye(2)) @ psi,
        phi_target=np.kron(ub, np.eye(2)) @ phi,
        dims=(2, 2, 2, 2, 2),
    )
    assert res.achieved <= 1e-9


def test_decouple_rejects_violated_hypothesis(rng):
    kw = random_decoupling_instance(rng, 0.1)
    kw["eps"] = kw["eps"] / 2
    with pytest.raises(ContractViolation):
        decouple(**kw)


def test_decouple_random_bound(rng):
    ratios = []
    for _ in range(200):
        res = decouple(**random_decoupling_instance(rng, float(10 ** rng.uniform(-3, -0.5))))
        ratios.append(res.achieved / res.hypothesis)
    assert max(ratios) <= 3


def _entangled_example(p):
    # qubit register paired with the first qutrit, the control, as A and A'
    psi = np.zeros(6)
    psi[0] = math.sqrt(1 - p)
    psi[1 * 2 + 1] = math.sqrt(p / 2)
    psi[2 * 2 + 1] = math.sqrt(p / 2)
    v = np.eye(9)
    for a in (1, 2):
        i, j = 3 * a, 3 * a + a
        v[[i, j]] = v[[j, i]]
    return psi, np.array([1.0, 0, 0]), v


@pytest.mark.parametrize("p", [0.01, 1 - math.sqrt(1 - 1e-4)])
def test_decouple_controlled_qutrit_example(p):
    psi, phi, v = _entangled_example(p)
    res = decouple(psi, phi, v, 1.0, psi_target=psi, phi_target=phi, dims=(3, 2, 3, 1, 1))
    # the measured hypothesis distance is sqrt(1 - (1 - p)^2), not p
    assert_allclose(res.hypothesis, math.sqrt(1 - (1 - p) ** 2), atol=1e-12)
    assert res.achieved <= 3 * res.hypothesis + 1e-12
    if res.hypothesis <= 0.01 + 1e-12:
        assert res.achieved <= 0.03


def test_parameterize_identical_circuits(rng):
    c = random_circuit(6, 1, rng)
    lp = parameterize(c, c, 1e-9)
    assert all(r.eps_certificate < 1e-7 for r in lp.rotations)
    assert lp.reconstruction_error <= 1e-10


def test_parameterize_rejects_far_estimate(rng):
    a, b = random_circuit(4, 1, rng), random_circuit(4, 1, rng)
    with pytest.raises(ContractViolation):
        parameterize(a, b, 1e-3)


def test_parameterize_perturbed_instance(rng):
    base = random_circuit(6, 1, rng)
    target = perturb_circuit(base, 0.005, seed=11).circuit
    lp = parameterize(target, base, 0.1)
    dist = pure_trace_distance(prepare_state(target), prepare_state(base))
    assert lp.reconstruction_error <= 1e-8
    assert lp.max_overlap <= 4
    assert lp.max_support <= 8
    assert lp.n_gate <= 6 + 4
    assert all(r.eps_certificate <= 28 * dist for r in lp.rotations)
    assert_allclose(lp.state(), prepare_state(target), atol=1e-8)


def test_parameter_budget_scaling(rng):
    base = random_circuit(8, 2, rng)
    lp = parameterize(perturb_circuit(base, 0.005, seed=2).circuit, base, 0.5)
    assert lp.parameter_count <= lp.parameter_budget()
