import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qlc.circuit import random_circuit
from qlc.errors import AdmissibilityError, CapacityError, ContractViolation
from qlc.protocol import (
    DeskScaleParams,
    admissible_window,
    derive_config,
    error_ledger,
    memory_cost,
    run_pipeline_desk,
)

DECADES = [2.0**20, 2.0**30, 2.0**40, 2.0**60]


def test_worked_example_outside_window():
    with pytest.raises(AdmissibilityError, match="window"):
        derive_config(10, 1, 1e12, 0.5)
    cfg = derive_config(10, 1, 1e12, 0.5, enforce_window=False)
    assert not cfg.admissible
    assert_allclose(cfg.window, (1 / 6, 0.25), atol=1e-12)
    assert_allclose(cfg.eps0, 1e-3, rtol=1e-12)
    assert_allclose(cfg.N0, 1e9, rtol=1e-12)
    assert_allclose(cfg.alpha0, 896_000, rtol=1e-12)
    led = error_ledger(cfg)
    assert_allclose(led.eps_tomo, 1e-3, rtol=1e-12)
    assert_allclose(led.eps_amp, 2.56, rtol=1e-12)
    assert led.eps_trun == 0.0
    assert led.log_eps_trun < -1e11
    assert_allclose(memory_cost(cfg).r_qc, 16.0, rtol=1e-12)


def test_window_formula():
    gamma, lo, hi = admissible_window(2, 2.0**40)
    assert_allclose(gamma, 40 - 32 / 3, atol=1e-12)
    assert_allclose(lo, 6 / (32 + 3 * gamma), atol=1e-12)
    assert_allclose(hi, 0.75 - 18 / (32 + 3 * gamma), atol=1e-12)


def test_window_edges_rejected():
    _, lo, hi = admissible_window(2, 2.0**40)
    for edge in (lo, hi, lo - 1e-3, hi + 1e-3):
        with pytest.raises(AdmissibilityError):
            derive_config(2, 1, 2.0**40, edge)
    derive_config(2, 1, 2.0**40, 0.5 * (lo + hi))


def test_no_window_without_gamma():
    # N below n^(32/3) leaves gamma negative
    with pytest.raises(AdmissibilityError):
        derive_config(10, 1, 1e6, 0.2)


def test_contract_violations():
    with pytest.raises(ContractViolation):
        derive_config(1, 1, 100.0, 0.3)
    with pytest.raises(ContractViolation):
        derive_config(4, 0, 2.0**60, 0.3)
    with pytest.raises(ContractViolation):
        derive_config(4, 1, 3.0, 0.3)
    with pytest.raises(ContractViolation):
        error_ledger(derive_config(2, 1, 2.0**40, 0.3), qlan_numeric=-1.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 40), st.integers(1, 3), st.floats(20, 200), st.floats(0.05, 0.7))
def test_config_identities(n, d, log2N, delta):
    N = 2.0**log2N
    cfg = derive_config(n, d, N, delta, enforce_window=False)
    assert_allclose(cfg.eps0 * math.sqrt(N), n * d * N ** (delta / 3), rtol=1e-12)
    assert_allclose(cfg.N0, N ** (1 - delta / 2), rtol=1e-12)
    assert_allclose(cfg.alpha0, 896 * math.sqrt(N) * cfg.eps0, rtol=1e-12)
    led = error_ledger(cfg, 0.01)
    terms = (led.eps_tomo, led.eps_qlan, led.eps_amp, led.eps_trun)
    assert all(t >= 0 for t in terms)
    assert_allclose(led.total, sum(terms), rtol=1e-15)


@pytest.mark.parametrize(
    "n,d,delta,decades",
    [(2, 1, 0.3, DECADES), (3, 2, 0.3, [2.0**k for k in (40, 60, 80, 120)]), (4, 1, 0.25, [2.0**k for k in (40, 60, 80)])],
)
def test_ledger_decade_sweep_decreasing(n, d, delta, decades):
    ledgers = [error_ledger(derive_config(n, d, N, delta)) for N in decades]
    for name in ("eps_tomo", "eps_amp", "log_eps_trun"):
        values = [getattr(x, name) for x in ledgers]
        assert all(b < a for a, b in zip(values, values[1:])), name
    assert ledgers[-1].eps_tomo < 1e-3


def test_ledger_qlan_placeholder_flag():
    cfg = derive_config(2, 1, 2.0**40, 0.3)
    assert not error_ledger(cfg).qlan_is_numeric
    led = error_ledger(cfg, 1e-4)
    assert led.qlan_is_numeric and led.eps_qlan == 1e-4


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("delta", [0.05, 0.2, 0.35, 0.5, 0.7])
def test_memory_formulas(d, delta):
    n, N = 12, 2.0**50
    mem = memory_cost(derive_config(n, d, N, delta, enforce_window=False))
    assert abs(mem.M_c_bits / (n * d * math.log2(N)) - 8 * (1 - 2 * delta / 3)) <= 1e-12
    assert abs(mem.r_qc - 2 ** (8 * d - 2) * delta / (d**2 * (3 - 2 * delta))) <= 1e-12 * mem.r_qc
    assert_allclose(mem.M_q_qubits, (n / d + 4) * 2 ** (8 * d + 1) / 3 * delta * math.log2(N), rtol=1e-12)
    assert_allclose(mem.M_c_correction_bits, 8 * (1 - 2 * delta / 3) * n * d * math.log2(n), rtol=1e-12)


def test_r_qc_vanishes_with_delta():
    values = [memory_cost(derive_config(3, 1, 2.0**60, x, enforce_window=False)).r_qc for x in (1e-2, 1e-4, 1e-8)]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-6


def test_memory_linear_in_log_copies():
    ratios = []
    for k in (10, 20, 30, 40):
        mem = memory_cost(derive_config(6, 1, 2.0**k, 0.3, enforce_window=False))
        ratios.append((mem.M_c_bits + mem.M_q_qubits) / (6 * k))
    assert max(ratios) - min(ratios) <= 1e-12 * max(ratios)


def test_classical_memory_linear_in_n():
    base = memory_cost(derive_config(4, 1, 2.0**60, 0.3)).M_c_bits
    assert_allclose(memory_cost(derive_config(8, 1, 2.0**60, 0.3)).M_c_bits, 2 * base, rtol=1e-12)


# ---------------------------------------------------------------------------
# desk pipeline


def test_pipeline_exact_estimate_is_lossless():
    c = random_circuit(4, 1, np.random.default_rng(3))
    rep = run_pipeline_desk(c, DeskScaleParams(estimate=c))
    assert rep.eta == 0.0
    assert all(s.error == 0.0 for s in rep.stages)
    assert rep.fidelity_bound == 1.0
    assert [s.name for s in rep.stages] == ["selection", "parameterize", "qlan", "truncation", "amplification"]


def test_pipeline_qlan_error_falls_with_surrogate_N():
    c = random_circuit(4, 1, np.random.default_rng(0))
    errs = [
        {s.name: s.error for s in run_pipeline_desk(c, DeskScaleParams(N_surrogate=N)).stages}["qlan"]
        for N in (10**4, 10**5)
    ]
    assert errs[1] < errs[0]
    # eps^2 scaling of the linearization leaves roughly a factor sqrt(10)
    assert 2 < errs[0] / errs[1] < 5


def test_pipeline_bound_sweep():
    for seed in range(50):
        c = random_circuit(4, 1, np.random.default_rng(seed))
        rep = run_pipeline_desk(c, DeskScaleParams(seed=seed))
        bounds = [s.fidelity_bound for s in rep.stages]
        assert all(0 <= b <= 1 for b in bounds)
        assert rep.fidelity_bound <= min(bounds)
        assert rep.infidelity_proxy <= rep.desk_ledger.total + 1e-15
        parts = rep.desk_ledger
        assert_allclose(parts.total, parts.eps_tomo + parts.eps_qlan + parts.eps_amp + parts.eps_trun)
        assert rep.closed_form_ledger.qlan_is_numeric


def test_pipeline_depth_two():
    c = random_circuit(6, 2, np.random.default_rng(1))
    rep = run_pipeline_desk(c, DeskScaleParams(seed=1))
    assert 0 < rep.fidelity_bound <= 1
    assert {s.name: s for s in rep.stages}["parameterize"].error <= 1e-8


def test_pipeline_report_dict():
    rep = run_pipeline_desk(random_circuit(4, 1, np.random.default_rng(0)))
    doc = rep.as_dict()
    assert {"config", "closed_form_ledger", "desk_ledger", "memory", "stages"} <= set(doc)
    assert [s["name"] for s in doc["stages"]][0] == "selection"


def test_pipeline_errors_carry_stage_tag():
    c = random_circuit(4, 1, np.random.default_rng(0))
    far = random_circuit(4, 1, np.random.default_rng(1))
    with pytest.raises(CapacityError, match=r"^\[truncation\]"):
        run_pipeline_desk(c, DeskScaleParams(estimate=far))
    with pytest.raises(ContractViolation):
        run_pipeline_desk(random_circuit(10, 1, np.random.default_rng(0)))
