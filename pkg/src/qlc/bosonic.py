"""Truncated Fock-space coherent states, photon-number truncation and the
parametric amplifier model, plus the Hellinger and Bures distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ContractViolation
from .linalg import as_density, sqrtm_psd, trace_distance


@dataclass(frozen=True)
class TruncatedFockState:
    """Single-mode state on photon numbers ``0 .. cutoff-1``.

    ``vector`` holds the pure amplitudes (or is ``None`` for mixed states,
    which use ``density``). ``tail_mass`` is the probability dropped by the
    cutoff, and ``amplitude`` records the coherent amplitude when the state
    is known to be (a truncation of) a coherent state.
    """

    cutoff: int
    vector: np.ndarray | None
    tail_mass: float
    amplitude: complex | None = None
    density_matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ContractViolation("cutoff must be at least 1")
        total = self.norm_squared() + self.tail_mass
        if abs(total - 1.0) > 1e-10:
            raise ContractViolation(f"norm plus tail mass is {total!r}, not 1")

    def norm_squared(self) -> float:
        if self.vector is not None:
            return float(np.vdot(self.vector, self.vector).real)
        return float(np.trace(self.density_matrix).real)

    def density(self, renormalize: bool = True) -> np.ndarray:
        if self.vector is not None:
            rho = np.outer(self.vector, self.vector.conj())
        else:
            rho = np.array(self.density_matrix, dtype=complex)
        if renormalize:
            rho = rho / np.trace(rho).real
        return rho


def _coherent_vector(u: complex, cutoff: int) -> np.ndarray:
    m = np.arange(cutoff)
    a = abs(u)
    if a == 0:
        vec = np.zeros(cutoff, dtype=complex)
        vec[0] = 1.0
        return vec
    log_mag = -0.5 * a * a + m * math.log(a) - 0.5 * gammaln(m + 1)
    return np.exp(log_mag) * np.exp(1j * m * np.angle(u))


def coherent(u: complex, cutoff: int) -> TruncatedFockState:
    """Coherent state ``e^{-|u|^2/2} sum_m u^m / sqrt(m!) |m>`` below ``cutoff``."""
    if cutoff < 1:
        raise ContractViolation("cutoff must be at least 1")
    vec = _coherent_vector(u, cutoff)
    tail = poisson_tail(abs(u) ** 2, cutoff)
    return TruncatedFockState(cutoff=cutoff, vector=vec, tail_mass=tail, amplitude=complex(u))


def poisson_tail(mean: float, start: int) -> float:
    """``P(X >= start)`` for ``X ~ Poisson(mean)``."""
    if mean == 0:
        return 0.0 if start > 0 else 1.0
    return float(poisson.sf(start - 1, mean))


def chernoff_tail_bound(mean: float, m0: int) -> float:
    """``e^{-mean} (e mean / m0)^m0``, valid as a tail bound for ``m0 > mean``."""
    if mean == 0:
        return 0.0
    return math.exp(-mean + m0 * (1.0 + math.log(mean / m0)))


@dataclass(frozen=True)
class TruncationResult:
    state: TruncatedFockState
    err_exact: float
    err_bound: float
    tail: float


def truncation_error_exact(alpha: complex, m0: int) -> float:
    """Exact trace distance between a coherent state and its truncation.

    The truncation keeps photon numbers below ``m0`` and replaces the lost
    weight ``t`` by the vacuum. Both states live in the span of the kept
    part, the discarded part and the vacuum, so the distance is the half
    trace norm of a 3 x 3 matrix.
    """
    lam = abs(alpha) ** 2
    t = poisson_tail(lam, m0)
    if t == 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    keep = 1.0 - t
    # basis: e1 = normalised kept part, e2 = vacuum direction orthogonal to e1,
    # e3 = normalised discarded part
    c = math.exp(-lam / 2) / math.sqrt(keep)  # <e1|vac>, real and positive
    s = math.sqrt(max(0.0, 1.0 - c * c))
    psi = np.array([math.sqrt(keep), 0.0, math.sqrt(t)])
    vac = np.array([c, s, 0.0])
    e1 = np.array([1.0, 0.0, 0.0])
    rho_in = np.outer(psi, psi)
    rho_out = keep * np.outer(e1, e1) + t * np.outer(vac, vac)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho_in - rho_out))))


def truncate_channel(s: TruncatedFockState, m0: int) -> TruncationResult:
    """Photon-number truncation with the vacuum as replacement state.

    Returns the truncated state, the exact trace distance to the input and
    the bound ``sqrt(2 * tail)``.
    """
    if m0 < 1:
        raise ContractViolation("m0 must be at least 1")
    if s.amplitude is not None:
        alpha = s.amplitude
        tail = poisson_tail(abs(alpha) ** 2, m0)
        err = truncation_error_exact(alpha, m0)
        kept = _coherent_vector(alpha, m0)
    else:
        rho = s.density(renormalize=False)
        dim = rho.shape[0]
        tail = float(np.trace(rho[m0:, m0:]).real) + s.tail_mass if dim > m0 else s.tail_mass
        sub = rho[:m0, :m0]
        out = np.zeros((m0, m0), dtype=complex)
        out[: sub.shape[0], : sub.shape[1]] = sub
        out[0, 0] += tail
        full_in = np.zeros((max(dim, m0),) * 2, dtype=complex)
        full_in[:dim, :dim] = rho / np.trace(rho).real
        full_out = np.zeros_like(full_in)
        full_out[:m0, :m0] = out
        err = trace_distance(full_in, full_out)
        state = TruncatedFockState(m0, None, 0.0, None, out)
        return TruncationResult(state, err, math.sqrt(2 * tail), tail)
    rho = np.outer(kept, kept.conj())
    rho[0, 0] += tail
    state = TruncatedFockState(m0, None, 0.0, None, rho)
    bound = math.sqrt(2 * tail)
    if err > bound + 1e-12:
        raise AssertionError(f"truncation error {err} above bound {bound}")
    return TruncationResult(state, err, bound, tail)


@dataclass(frozen=True)
class AmplifyResult:
    state: TruncatedFockState
    err_model: float
    loss_fraction: float


def amplify(s: TruncatedFockState, gain: float, cutoff: int | None = None) -> AmplifyResult:
    """Amplitude-parametric amplifier: relabel ``z`` to ``gain * z``.

    ``err_model`` is the trace distance between the coherent states of
    amplitude ``z`` and ``gain * z``; ``loss_fraction = 1 - 1/gain^2`` is the
    intensity-loss parameter that the generic amplification bound uses.

    Raises:
        ContractViolation: for inputs not tagged with a coherent amplitude or
            a gain below one.
    """
    if gain < 1:
        raise ContractViolation("gain must be at least 1")
    if s.amplitude is None:
        raise ContractViolation("amplifier model needs a coherent input with known amplitude")
    z = s.amplitude
    out_amp = gain * z
    a = abs(out_amp)
    cut = cutoff if cutoff is not None else max(s.cutoff, math.ceil(a * a + 10 * a + 25))
    out = coherent(out_amp, cut)
    err = math.sqrt(-math.expm1(-((gain - 1) ** 2) * abs(z) ** 2))
    return AmplifyResult(out, err, 1.0 - 1.0 / gain**2)


def coherent_overlap(a: TruncatedFockState, b: TruncatedFockState) -> complex:
    n = min(len(a.vector), len(b.vector))
    return complex(np.vdot(a.vector[:n], b.vector[:n]))


def hellinger_bures(a, b) -> tuple[float, float]:
    """Hellinger ``sqrt(2 - 2 Tr(a^1/2 b^1/2))`` and Bures ``sqrt(2 - 2 Tr|a^1/2 b^1/2|)``.

    Checks that the Hellinger distance dominates the Bures distance, that
    they coincide for commuting inputs, and that the Hellinger distance is
    at most ``sqrt(2 d_Tr)``.
    """
    rho = as_density(a, tol=1e-10)
    sigma = as_density(b, tol=1e-10)
    if rho.shape != sigma.shape:
        raise ContractViolation("dimension mismatch")
    prod = sqrtm_psd(rho) @ sqrtm_psd(sigma)
    affinity = float(np.trace(prod).real)
    root_fid = float(np.sum(np.linalg.svd(prod, compute_uv=False)))
    d_h = math.sqrt(max(0.0, 2.0 - 2.0 * affinity))
    d_b = math.sqrt(max(0.0, 2.0 - 2.0 * min(1.0, root_fid)))
    if d_h < d_b - 1e-10:
        raise AssertionError(f"Hellinger {d_h} below Bures {d_b}")
    comm = float(np.linalg.norm(rho @ sigma - sigma @ rho, 2))
    if comm < 1e-12 and abs(d_h - d_b) > 1e-8:
        raise AssertionError("commuting inputs with unequal Hellinger and Bures distances")
    d_tr = trace_distance(rho, sigma)
    if d_h > math.sqrt(2 * d_tr) + 1e-9:
        raise AssertionError("Hellinger distance exceeds sqrt(2 d_Tr)")
    return d_h, d_b
