"""Local asymptotic normality for N copies of slightly rotated product states.

The excitation strings of a circuit template play the role of bosonic
modes: ``N`` copies of a state close to ``|0...0>`` are mapped onto a
multi-mode coherent state whose amplitudes are the first-order matrix
elements of the summed generators.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CapacityError, ContractViolation, InsufficientCutoffError
from .linalg import embed_operator, expm_hermitian, pure_trace_distance

TAIL_TOL = 1e-12
ORACLE_CAP = 10**6


@dataclass(frozen=True)
class CircuitTemplate:
    n: int
    supports: tuple[tuple[int, ...], ...]
    d_tilde: int

    def __post_init__(self) -> None:
        for q in self.supports:
            if not q or any(i < 0 or i >= self.n for i in q):
                raise ContractViolation(f"support {q} is not a non-empty subset of [0, {self.n})")
            if len(q) > self.d_tilde or len(set(q)) != len(q):
                raise ContractViolation(f"support {q} exceeds the size cap {self.d_tilde}")

    @property
    def G(self) -> int:
        return len(self.supports)

    @property
    def n_overlap(self) -> int:
        counts = [0] * self.n
        for q in self.supports:
            for i in q:
                counts[i] += 1
        return max(counts, default=0)


def string_to_index(bits: str) -> int:
    return int(bits, 2)


def enumerate_B(q: CircuitTemplate, include_zero: bool = False) -> list[str]:
    """Non-zero n-bit strings whose ones sit inside a single support.

    Strings are big-endian (qubit 0 first) and sorted. The all-zero string
    is the reference state rather than a mode, so it is only included on
    request.
    """
    found: set[str] = set()
    for support in q.supports:
        support = sorted(support)
        for r in range(1, len(support) + 1):
            for ones in itertools.combinations(support, r):
                bits = ["0"] * q.n
                for i in ones:
                    bits[i] = "1"
                found.add("".join(bits))
    out = sorted(found)
    if len(out) > q.G * 2**q.d_tilde:
        raise AssertionError("mode count exceeds G 2^d_tilde")
    return (["0" * q.n] + out) if include_zero else out


@dataclass(frozen=True)
class CoherentAmplitudes:
    modes: dict[str, complex]
    eta: float

    @property
    def K(self) -> int:
        return len(self.modes)

    def values(self) -> np.ndarray:
        return np.array([self.modes[k] for k in sorted(self.modes)], dtype=complex)


def amplitudes_from_values(values: Sequence[complex], eta: float = 1.0) -> CoherentAmplitudes:
    """Wrap a plain amplitude list as modes labelled by position."""
    width = max(1, len(values))
    width = max(1, math.ceil(math.log2(width + 1)))
    modes = {format(i + 1, f"0{width}b"): complex(v) for i, v in enumerate(values)}
    return CoherentAmplitudes(modes=modes, eta=eta)


def summed_generator(q: CircuitTemplate, hs: Sequence[np.ndarray]) -> np.ndarray:
    """Embed each local generator on its support and add them up."""
    if len(hs) != q.G:
        raise ContractViolation("need one generator per support")
    register = list(range(q.n))
    total = np.zeros((2**q.n, 2**q.n), dtype=complex)
    for support, h in zip(q.supports, hs):
        h = np.asarray(h, dtype=complex)
        if h.shape != (2 ** len(support),) * 2:
            raise ContractViolation(f"generator shape {h.shape} does not match support {support}")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10:
            raise ContractViolation("generator is not Hermitian")
        if np.linalg.norm(h, 2) > 1 + 1e-10:
            raise ContractViolation("generator norm exceeds 1")
        total += embed_operator(h, support, register)
    return total


def amplitudes(q: CircuitTemplate, hs: Sequence[np.ndarray], eta: float) -> CoherentAmplitudes:
    """``u^k = eta <k| sum_j H_j |0...0>`` for every mode string ``k``."""
    total = summed_generator(q, hs)
    column = total[:, 0]
    strings = enumerate_B(q)
    bound = q.n_overlap
    modes = {}
    for k in strings:
        h_k = column[string_to_index(k)]
        if abs(h_k) > bound + 1e-10:
            raise AssertionError(f"|h^{k}| = {abs(h_k)} exceeds n_overlap = {bound}")
        modes[k] = complex(eta * h_k)
    # everything outside B(Q) must vanish
    outside = np.delete(column, [0] + [string_to_index(k) for k in strings])
    if outside.size and np.max(np.abs(outside)) > 1e-10:
        raise ContractViolation("generator has weight outside the template strings")
    if modes and max(abs(u) for u in modes.values()) > eta * bound + 1e-10:
        raise AssertionError("amplitude bound eta * n_overlap violated")
    return CoherentAmplitudes(modes=modes, eta=eta)


def linearization_error(q: CircuitTemplate, hs: Sequence[np.ndarray], eta: float, N: float) -> float:
    """Operator-norm gap between the ordered product and the exponential of the sum."""
    if q.n > 10:
        raise CapacityError("linearization check is limited to n <= 10")
    eps = eta / math.sqrt(N)
    register = list(range(q.n))
    product = np.eye(2**q.n, dtype=complex)
    for support, h in zip(q.supports, hs):
        product = embed_operator(expm_hermitian(np.asarray(h), eps), support, register) @ product
    single = expm_hermitian(summed_generator(q, hs), eps)
    return float(np.linalg.norm(product - single, 2))


def reduced_generator(h: np.ndarray) -> np.ndarray:
    """Keep only the couplings between ``|0...0>`` and the other basis states.

    The result is ``sum_k Re(h^k) sigma_x^k + Im(h^k) sigma_y^k`` with
    ``h^k = <k|h|0>``, ``sigma_x^k = |k><0| + |0><k|`` and
    ``sigma_y^k = i(|k><0| - |0><k|)``; its action on ``|0...0>`` agrees
    with ``h`` off the diagonal.
    """
    h = np.asarray(h, dtype=complex)
    col = h[:, 0].copy()
    col[0] = 0.0
    out = np.zeros_like(h)
    out[:, 0] = col
    out[0, :] = col.conj()
    return out


def parameter_reduction_gap(h, eps: float) -> float:
    """Trace distance between ``exp(-i eps h)|0>`` and its reduced-generator twin."""
    h = np.asarray(h, dtype=complex)
    if np.linalg.norm(h, 2) > 1 + 1e-10:
        raise ContractViolation("generator norm exceeds 1")
    zero = np.zeros(h.shape[0], dtype=complex)
    zero[0] = 1.0
    psi = expm_hermitian(h, eps) @ zero
    phi = expm_hermitian(reduced_generator(h), eps) @ zero
    return pure_trace_distance(psi, phi)


def truncated_state(amps: CoherentAmplitudes, N: float) -> tuple[float, dict[str, complex]]:
    """Single-copy state ``(|0> + sum_k u^k/sqrt(N) |k>)`` normalised."""
    if N < 1:
        raise ContractViolation("N must be at least 1")
    s = sum(abs(u) ** 2 for u in amps.modes.values())
    norm = math.sqrt(1.0 + s / N)
    coeffs = {k: u / math.sqrt(N) / norm for k, u in amps.modes.items()}
    return 1.0 / norm, coeffs


def default_cutoff(u: complex) -> int:
    """Per-mode photon cap that leaves a Poisson tail far below 1e-12."""
    a = abs(u)
    return max(25, math.ceil(a * a + 10 * a + 25))


def poisson_tail(mean: float, cutoff: int) -> float:
    """Probability that a Poisson(mean) variable exceeds ``cutoff``."""
    if mean == 0:
        return 0.0
    return float(poisson.sf(cutoff, mean))


def _kahan_sum(values: np.ndarray) -> float:
    total = 0.0
    comp = 0.0
    for v in values.tolist():
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@dataclass(frozen=True)
class OverlapResult:
    overlap: complex
    terms: int
    cutoffs: tuple[int, ...]

    @property
    def infidelity(self) -> float:
        return 1.0 - abs(self.overlap) ** 2


def qlan_overlap_detail(
    amps: CoherentAmplitudes, N: int, cutoff: int | Sequence[int] | None = None
) -> OverlapResult:
    """Overlap of the mapped N-copy state with the target coherent state.

    Every multi-index term is non-negative, so the sum is evaluated in log
    space and accumulated with compensated summation in a fixed order.

    Raises:
        InsufficientCutoffError: if some mode's neglected Poisson tail is
            above 1e-12.
    """
    u = amps.values()
    K = len(u)
    if K == 0:
        return OverlapResult(1.0 + 0j, 1, ())
    N = int(N)
    if N < 1:
        raise ContractViolation("N must be at least 1")
    if cutoff is None:
        caps = [default_cutoff(x) for x in u]
    elif isinstance(cutoff, (int, np.integer)):
        caps = [int(cutoff)] * K
    else:
        caps = [int(c) for c in cutoff]
    for x, cap in zip(u, caps):
        # the |m| <= N constraint truncates too; both must leave a tiny tail
        tail = poisson_tail(abs(x) ** 2, min(cap, N))
        if tail > TAIL_TOL and cap < N:
            raise InsufficientCutoffError(f"cutoff {cap} leaves Poisson tail {tail:.3g} for |u| = {abs(x):.3g}")

    a2 = np.abs(u) ** 2
    s = float(a2.sum())
    grids = np.meshgrid(*[np.arange(min(c, N) + 1) for c in caps], indexing="ij")
    m = np.stack([g.reshape(-1) for g in grids], axis=1)
    total_m = m.sum(axis=1)
    keep = total_m <= N
    m = m[keep]
    total_m = total_m[keep]
    kmax = int(total_m.max())
    # log([N]_k / N^k) = sum_{i<k} log(1 - i/N), exact for every k
    log_ratio = np.concatenate([[0.0], np.cumsum(np.log1p(-np.arange(kmax) / N))])
    log_a2 = np.log(np.where(a2 > 0, a2, 1.0))
    logs = 0.5 * log_ratio[total_m] - gammaln(m + 1).sum(axis=1) + (m * log_a2).sum(axis=1)
    # excitations of an empty mode contribute nothing
    logs = np.where(((m > 0) & (a2 == 0)).any(axis=1), -np.inf, logs)
    prefactor = -0.5 * s - 0.5 * N * math.log1p(s / N)
    terms = np.exp(np.sort(logs + prefactor))
    value = _kahan_sum(terms)
    if value > 1 + 1e-12:
        raise AssertionError(f"overlap {value} exceeds 1")
    return OverlapResult(complex(min(value, 1.0)), int(terms.size), tuple(caps))


def qlan_overlap(amps: CoherentAmplitudes, N: int, cutoff: int | Sequence[int] | None = None) -> complex:
    return qlan_overlap_detail(amps, N, cutoff).overlap


def aggregated_overlap(total_intensity: float, N: int) -> float:
    """Same overlap with the modes merged: only ``sum_k |u^k|^2`` matters.

    Summing the multinomial terms at fixed ``|m| = j`` gives ``s^j / j!``,
    so the overlap collapses to a single sum over ``j <= N``.
    """
    s = float(total_intensity)
    if s == 0:
        return 1.0
    j = np.arange(N + 1)
    log_ratio = np.concatenate([[0.0], np.cumsum(np.log1p(-np.arange(N) / N))])
    logs = 0.5 * log_ratio + j * math.log(s) - gammaln(j + 1)
    logs += -0.5 * s - 0.5 * N * math.log1p(s / N)
    return float(math.fsum(np.exp(logs)))


def coherent_amplitude(u: Sequence[complex], m: Sequence[int]) -> complex:
    """Fock amplitude ``<m|u>`` of a multi-mode coherent state."""
    out = 1.0 + 0j
    for uk, mk in zip(u, m):
        out *= math.exp(-abs(uk) ** 2 / 2) * uk**mk / math.sqrt(math.factorial(mk))
    return out


def symmetric_basis_vector(m: Sequence[int], N: int, K: int) -> np.ndarray:
    """Normalised permutation-symmetric vector with occupation ``m``.

    Built by summing the permuted copies of ``|1>^{m_1} ... |K>^{m_K} |0>^{rest}``
    and normalising by ``sqrt(m_1! ... m_K! / [N]_{|m|})`` up to the
    multiplicity of repeated permutations.
    """
    seq = []
    for k, mk in enumerate(m, start=1):
        seq += [k] * mk
    seq += [0] * (N - len(seq))
    dim = K + 1
    vec = np.zeros(dim**N, dtype=complex)
    for perm in set(itertools.permutations(seq)):
        idx = 0
        for digit in perm:
            idx = idx * dim + digit
        vec[idx] += 1.0
    return vec / np.linalg.norm(vec)


def qlan_bruteforce_oracle(amps: CoherentAmplitudes, N: int) -> complex:
    """Dense-tensor evaluation of the same overlap for tiny instances.

    Forms the N-fold tensor power explicitly, projects it onto every
    symmetric basis vector, relabels those as Fock states, and takes the
    inner product with the coherent vector.
    """
    u = amps.values()
    K = len(u)
    if (K + 1) ** N > ORACLE_CAP:
        raise CapacityError(f"(K+1)^N = {(K + 1) ** N} exceeds {ORACLE_CAP}")
    coeff0, coeffs = truncated_state(amps, N)
    single = np.array([coeff0] + [coeffs[k] for k in sorted(coeffs)], dtype=complex)
    power = np.ones(1, dtype=complex)
    for _ in range(N):
        power = np.kron(power, single)
    total = 0.0 + 0j
    for m in itertools.product(range(N + 1), repeat=K):
        if sum(m) > N:
            continue
        sym = symmetric_basis_vector(m, N, K)
        fock_coeff = np.vdot(sym, power)
        total += np.conj(coherent_amplitude(u, m)) * fock_coeff
    return complex(total)

