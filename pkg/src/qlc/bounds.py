"""Memory lower bounds: the Holevo count and the classical-memory no-go gap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bosonic import coherent, hellinger_bures
from .errors import ContractViolation, InsufficientCutoffError

NO_GO_MIN_CUTOFF = 30
NO_GO_GAP_CLAIM = 0.167
NO_GO_EPS_CLAIM = 0.003


def h2(x: float) -> float:
    """``-x log2 x`` with ``h2(0) = 0``; this is not the binary entropy."""
    if x == 0:
        return 0.0
    return -x * math.log2(x)


def binary_entropy(x: float) -> float:
    return h2(x) + h2(1.0 - x)


@dataclass(frozen=True)
class LowerBoundReport:
    n: int
    N: int
    eps_N: float
    holevo_bits: float
    corrected_bound_bits: float
    binary_entropy_term: float
    corrected_bound_binary_entropy: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def holevo_lower_bound(n: int, N: int, eps_N: float) -> LowerBoundReport:
    """Memory needed by any compressor with error ``eps_N``.

    ``binary_entropy_term`` is ``h2(eps_N) = -eps log2 eps``; the bound
    with the usual binary entropy in its place is reported alongside.
    """
    if not 0 <= eps_N < 0.5:
        raise ContractViolation(f"eps_N = {eps_N} must lie in [0, 1/2)")
    if n < 1 or N < 1:
        raise ContractViolation("need n >= 1 and N >= 1")
    chi = n * math.log2(N + 1)
    term = h2(eps_N)
    return LowerBoundReport(
        n=n,
        N=N,
        eps_N=eps_N,
        holevo_bits=chi,
        corrected_bound_bits=(1 - 2 * eps_N) * chi - 2 * term,
        binary_entropy_term=term,
        corrected_bound_binary_entropy=(1 - 2 * eps_N) * chi - 2 * binary_entropy(eps_N),
    )


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def haar_qubits(samples: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random single-qubit pure states as rows, via normalised Gaussians."""
    z = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def tensor_power_rows(states: np.ndarray, N: int) -> np.ndarray:
    """Row-wise ``psi^{(x) N}`` in the full ``2^N`` space."""
    out = np.ones((states.shape[0], 1), dtype=complex)
    for _ in range(N):
        out = np.einsum("si,sj->sij", out, states).reshape(states.shape[0], -1)
    return out


def symmetric_coordinates(states: np.ndarray, N: int) -> np.ndarray:
    """Row-wise ``psi^{(x) N}`` in the orthonormal Dicke basis ``|D_k>``.

    ``(a|0> + b|1>)^{(x) N} = sum_k sqrt(C(N, k)) a^(N-k) b^k |D_k>``, so
    this is an isometric image of :func:`tensor_power_rows`.
    """
    k = np.arange(N + 1)
    log_binom = 0.5 * (gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1))
    a = states[:, :1]
    b = states[:, 1:]
    return np.exp(log_binom) * a ** (N - k) * b**k


DENSE_LIMIT = 8


def single_qubit_holevo_check(N: int, samples: int = 200_000, seed: int = 0, batch: int = 20_000) -> float:
    """Entropy of the sample average of ``psi^{(x) N}`` over Haar-random qubits.

    The exact average is the normalised symmetric projector, whose entropy
    is ``log2(N + 1)``. Up to ``N = 8`` the average is accumulated in the
    full tensor space; beyond that in Dicke coordinates.
    """
    if N < 1 or N > 10:
        raise ContractViolation("single_qubit_holevo_check supports 1 <= N <= 10")
    if samples < 1:
        raise ContractViolation("need at least one sample")
    rng = np.random.default_rng(seed)
    embed = tensor_power_rows if N <= DENSE_LIMIT else symmetric_coordinates
    dim = 2**N if N <= DENSE_LIMIT else N + 1
    acc = np.zeros((dim, dim), dtype=complex)
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        rows = embed(haar_qubits(size, rng), N)
        acc += rows.T @ rows.conj()
        done += size
    return von_neumann_entropy(acc / samples)


@dataclass(frozen=True)
class NoGoGap:
    d_hellinger: float
    d_bures: float
    gap: float
    eps_floor: float
    eps_floor_displayed: float
    cutoff: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def classical_no_go_gap(cutoff: int = 40) -> NoGoGap:
    """Hellinger-minus-Bures gap between the vacuum and the unit coherent state.

    A classical memory forces the encoded states to commute, which caps the
    gap at ``2 sqrt(2 eps)`` for reconstruction error ``eps``; so
    ``eps_floor = (gap / (2 sqrt 2))^2`` lower-bounds the error of any such
    scheme. ``eps_floor_displayed`` is the floor from the linear form
    ``2 sqrt(2) eps`` instead.

    Raises:
        InsufficientCutoffError: for cutoffs below 30.
    """
    if cutoff < NO_GO_MIN_CUTOFF:
        raise InsufficientCutoffError(f"cutoff {cutoff} is below the minimum {NO_GO_MIN_CUTOFF}")
    vac = coherent(0.0, cutoff).density()
    one = coherent(1.0, cutoff).density()
    d_h, d_b = hellinger_bures(vac, one)
    gap = d_h - d_b
    eps_floor = (gap / (2 * math.sqrt(2))) ** 2
    if gap <= NO_GO_GAP_CLAIM:
        raise AssertionError(f"gap {gap} not above {NO_GO_GAP_CLAIM}")
    if eps_floor <= NO_GO_EPS_CLAIM:
        raise AssertionError(f"eps floor {eps_floor} not above {NO_GO_EPS_CLAIM}")
    return NoGoGap(d_h, d_b, gap, eps_floor, gap / (2 * math.sqrt(2)), cutoff)
