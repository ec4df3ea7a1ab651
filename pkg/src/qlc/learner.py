"""Covering nets for two-qubit gates, sample budgets, and an idealized
hypothesis-selection oracle.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, ContractViolation
from .linalg import (
    _spectral_centre,
    as_state,
    diamond_distance_unitary_bounds,
    expm_hermitian,
    pure_trace_distance,
    random_unitary,
)

MIN_NET_EPS = 0.05
PROBE_COUNT = 1000
# spacing multipliers tried on top of the worst-case spacing, smallest first
CALIBRATION_LADDER = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
MATERIALIZE_CAP = 100_000

_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
# the 15 non-identity two-qubit Pauli strings span the traceless Hermitian 4x4 matrices
CHART_BASIS = np.array([np.kron(_PAULI[a], _PAULI[b]) for a, b in itertools.product(range(4), repeat=2)][1:])


def covering_bits_bound(G: int, eps: float, n: int) -> float:
    """log2 of the covering number for G two-qubit gates on n qubits."""
    if not 0 < eps <= 1:
        raise ContractViolation(f"eps = {eps} must lie in (0, 1]")
    if G < 1 or n < 1:
        raise ContractViolation("need G >= 1 and n >= 1")
    return 32 * G * math.log2(12 * G / eps) + 2 * G * math.log2(n)


def chart_coordinates(u: np.ndarray) -> np.ndarray:
    """Pauli coordinates ``theta`` with ``u = e^{i c} exp(-i sum_a theta_a P_a)``.

    The logarithm is taken with the eigenphases centred on their shortest
    covering arc, so ``|theta_a| <= pi``.
    """
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    centre = _spectral_centre(phases)
    centred = np.angle(np.exp(1j * (phases - centre)))
    h = -(z * centred) @ z.conj().T
    return np.real(np.einsum("aij,ji->a", CHART_BASIS, h)) / 4.0


def chart_unitary(theta: Sequence[float]) -> np.ndarray:
    h = np.tensordot(np.asarray(theta, dtype=float), CHART_BASIS, axes=1)
    return expm_hermitian(h, 1.0)


@dataclass(frozen=True)
class CoveringNet:
    """Cubic grid ``{k * spacing : |k| <= half_width}^15`` in the Pauli chart.

    Members are implicit; :meth:`nearest` rounds to the closest grid point
    and :meth:`members` materializes small nets.
    """

    eps: float
    spacing: float
    half_width: int
    probe_max_error: float
    probes: int

    @property
    def cardinality(self) -> int:
        return (2 * self.half_width + 1) ** CHART_BASIS.shape[0]

    @property
    def log2_cardinality(self) -> float:
        return CHART_BASIS.shape[0] * math.log2(2 * self.half_width + 1)

    def nearest(self, u: np.ndarray) -> np.ndarray:
        if self.half_width == 0:
            return np.eye(4, dtype=complex)
        k = np.clip(np.rint(chart_coordinates(u) / self.spacing), -self.half_width, self.half_width)
        return chart_unitary(k * self.spacing)

    def members(self) -> list[np.ndarray]:
        if self.cardinality > MATERIALIZE_CAP:
            raise CapacityError(f"net has {self.cardinality} members, above {MATERIALIZE_CAP}")
        if self.half_width == 0:
            return [np.eye(4, dtype=complex)]
        grid = range(-self.half_width, self.half_width + 1)
        return [chart_unitary(np.array(k) * self.spacing) for k in itertools.product(grid, repeat=15)]


def _probe_errors(net: CoveringNet, probes: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([diamond_distance_unitary_bounds(p, net.nearest(p))[1] for p in probes])


def build_net_single_gate(eps: float, probes: int = PROBE_COUNT, seed: int = 0) -> CoveringNet:
    """Grid net for two-qubit gates with radius ``eps`` in the diamond upper bound.

    Rounding each of the 15 chart coordinates moves the generator by at most
    ``15 * spacing / 2`` in operator norm, so ``spacing = 2 eps / 15`` is a
    guaranteed covering. The spacing is then coarsened along a fixed ladder
    for as long as every Haar-random probe still has a member within
    ``eps``.

    Raises:
        CapacityError: for ``eps`` below 0.05.
    """
    if eps < MIN_NET_EPS:
        raise CapacityError(f"eps = {eps} is below the grid feasibility limit {MIN_NET_EPS}")
    if eps >= 2.0:
        # every pair of unitaries is within 2 of each other
        return CoveringNet(eps=eps, spacing=math.inf, half_width=0, probe_max_error=2.0, probes=0)
    rng = np.random.default_rng(seed)
    samples = [random_unitary(4, rng) for _ in range(probes)]
    base = 2.0 * eps / CHART_BASIS.shape[0]
    chosen = None
    for factor in CALIBRATION_LADDER:
        spacing = base * factor
        trial = CoveringNet(eps, spacing, math.ceil(math.pi / spacing), 0.0, probes)
        worst = float(_probe_errors(trial, samples).max())
        if worst > eps:
            break
        chosen = CoveringNet(eps, spacing, trial.half_width, worst, probes)
    if chosen is None:
        raise AssertionError("worst-case spacing failed certification")
    return chosen


def hypothesis_select(
    true_state,
    hypotheses: Sequence,
    M: int,
    delta: float,
    c: float = 1.0,
    seed: int = 0,
) -> tuple[int, float]:
    """Idealized selection oracle with the guarantee ``d <= 3 eta + eps_stat``.

    ``eta`` is the smallest distance from the true state to a hypothesis and
    ``eps_stat = c log2(m / delta) / sqrt(M)``. With probability
    ``1 - delta`` a uniformly chosen index meeting the guarantee is
    returned; otherwise a uniformly random index.
    """
    if M <= 0:
        raise ContractViolation("M must be positive")
    if not hypotheses:
        raise ContractViolation("need at least one hypothesis")
    if not 0 < delta <= 1:
        raise ContractViolation("delta must lie in (0, 1]")
    psi = as_state(true_state)
    m = len(hypotheses)
    eps_stat = c * math.log2(m / delta) / math.sqrt(M)
    dists = np.array([pure_trace_distance(psi, as_state(h)) for h in hypotheses])
    rng = np.random.default_rng(seed)
    if rng.random() < delta:
        return int(rng.integers(m)), eps_stat
    good = np.flatnonzero(dists <= 3 * dists.min() + eps_stat + 1e-12)
    return int(rng.choice(good)), eps_stat


@dataclass(frozen=True)
class SampleBudget:
    n: int
    d: int
    eps: float
    delta: float
    c: float
    N0: int
    covering_bits: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def tomography_budget(n: int, d: int, eps: float, delta: float, c: float = 1.0) -> SampleBudget:
    """Copies needed to learn a depth-d, n-qubit circuit state to ``eps``.

    ``covering_bits`` is the covering bound for the ``G = n d / 2`` gates
    at radius ``min(eps, 1)``.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ContractViolation("eps and delta must lie in (0, 1)")
    if n < 1 or d < 1:
        raise ContractViolation("need n >= 1 and d >= 1")
    nd = n * d
    n0 = math.ceil(c * (nd * math.log2(nd / eps) + math.log2(1 / delta)) ** 2 / eps**2)
    G = max(1, nd // 2)
    return SampleBudget(n, d, eps, delta, c, max(1, n0), covering_bits_bound(G, eps, n))
