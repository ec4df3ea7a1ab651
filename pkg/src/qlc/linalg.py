"""Dense linear algebra and the distance/fidelity layer.

States are plain numpy arrays: pure states are 1-D complex vectors and
density operators are 2-D Hermitian matrices. Multi-qubit registers use the
big-endian convention, so qubit 0 is the leftmost tensor factor.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ContractViolation

NORM_TOL = 1e-12
CHECK_TOL = 1e-10
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# validation


def as_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``psi`` as a complex vector, checking it has unit norm."""
    vec = np.asarray(psi, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise ContractViolation("state has non-finite amplitudes")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > tol:
        raise ContractViolation(f"state norm {norm!r} differs from 1")
    return vec


def as_density(rho, tol: float = NORM_TOL, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Return ``rho`` as a density matrix after checking its invariants.

    Raises:
        ContractViolation: if ``rho`` is not square, not Hermitian, does not
            have unit trace or has an eigenvalue below ``-psd_tol``.
    """
    mat = np.asarray(rho, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ContractViolation(f"density operator must be square, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ContractViolation("density operator has non-finite entries")
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > tol:
        raise ContractViolation("density operator is not Hermitian")
    tr = np.trace(mat).real
    if abs(tr - 1.0) > tol:
        raise ContractViolation(f"density operator trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(mat).min()
    if lam_min < -psd_tol:
        raise ContractViolation(f"density operator has eigenvalue {lam_min!r} < 0")
    return mat


def is_unitary(u, tol: float = CHECK_TOL) -> bool:
    mat = np.asarray(u, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    eye = np.eye(mat.shape[0])
    return bool(np.max(np.abs(mat.conj().T @ mat - eye), initial=0.0) <= tol)


def check_unitary(u, tol: float = CHECK_TOL, name: str = "matrix") -> np.ndarray:
    mat = np.asarray(u, dtype=complex)
    if not is_unitary(mat, tol):
        raise ContractViolation(f"{name} is not unitary within {tol}")
    return mat


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# basic constructions


def projector(psi) -> np.ndarray:
    """Density matrix of a pure state."""
    vec = as_state(psi)
    return np.outer(vec, vec.conj())


def basis_state(index: int, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return vec


def sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Square root of a positive semidefinite Hermitian matrix.

    Eigenvalues below the eigensolver's round-off floor (about
    ``10 * dim * machine_eps * lambda_max``) are treated as exact zeros;
    their square roots would otherwise inject noise of order 1e-8.
    """
    herm = 0.5 * (mat + mat.conj().T)
    lam, vecs = np.linalg.eigh(herm)
    floor = 10 * herm.shape[0] * np.finfo(float).eps * max(lam.max(initial=0.0), 0.0)
    lam = np.sqrt(np.where(lam > floor, lam, 0.0))
    return (vecs * lam) @ vecs.conj().T


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i t h)`` for Hermitian ``h`` via its eigendecomposition."""
    herm = 0.5 * (h + np.conj(h).T)
    lam, vecs = np.linalg.eigh(herm)
    return (vecs * np.exp(-1j * t * lam)) @ vecs.conj().T


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Args:
        rho: density matrix on the tensor product of ``dims``.
        dims: local dimensions of the subsystems.
        keep: indices of subsystems to retain, in increasing order.
    """
    dims = list(dims)
    keep = sorted(keep)
    k = len(dims)
    tensor = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # contract traced axes pairwise, highest index first so positions stay valid
    for count, axis in enumerate(sorted(traced, reverse=True)):
        remaining = k - count
        tensor = np.trace(tensor, axis1=axis, axis2=axis + remaining)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return tensor.reshape(d_keep, d_keep)


def reduced_density(psi: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Marginal of a pure state, computed without forming the full projector."""
    dims = list(dims)
    keep = sorted(keep)
    rest = [i for i in range(len(dims)) if i not in keep]
    tensor = np.asarray(psi).reshape(dims).transpose(keep + rest)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    mat = tensor.reshape(d_keep, -1)
    return mat @ mat.conj().T


# ---------------------------------------------------------------------------
# random instances


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix rescaled to operator norm ``norm``."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = g + g.conj().T
    return h * (norm / np.linalg.norm(h, 2))


# ---------------------------------------------------------------------------
# metrics


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    rho = as_density(a)
    sigma = as_density(b)
    _same_dim(rho, sigma)
    lam = np.linalg.eigvalsh(rho - sigma)
    return float(min(1.0, 0.5 * np.sum(np.abs(lam))))


def pure_trace_distance(psi, phi) -> float:
    """Trace distance between two pure states, ``sqrt(1 - |<psi|phi>|^2)``.

    Evaluated as the norm of the part of ``phi`` orthogonal to ``psi``,
    which avoids the cancellation in ``1 - |<psi|phi>|^2`` near zero.
    """
    x = as_state(psi, tol=1e-9)
    y = as_state(phi, tol=1e-9)
    _same_dim(x, y)
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    resid = y - np.vdot(x, y) * x
    return float(min(1.0, np.linalg.norm(resid)))


def fidelity(a, b) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))^2``."""
    rho = as_density(a)
    sigma = as_density(b)
    _same_dim(rho, sigma)
    root = sqrtm_psd(rho)
    inner = root @ sigma @ root
    lam = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    floor = 10 * lam.size * np.finfo(float).eps * max(lam.max(initial=0.0), 0.0)
    lam = np.where(lam > floor, lam, 0.0)
    return float(min(1.0, np.sum(np.sqrt(lam)) ** 2))


def _spectral_centre(phases: np.ndarray) -> float:
    """Midpoint of the shortest arc on the circle containing all ``phases``."""
    ang = np.sort(np.mod(phases, 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    widest = int(np.argmax(gaps))
    start = ang[(widest + 1) % len(ang)]
    end = ang[widest]
    span = np.mod(end - start, 2 * np.pi)
    return float(start + span / 2)


def min_phase_distance(u, v) -> tuple[float, float]:
    """Minimise ``||e^{i phi} u - v||_inf`` over the global phase ``phi``.

    Returns the minimum and the minimising phase. The search starts at the
    phase that centres the spectrum of ``u^dagger v`` and is refined by a
    bounded golden-section search around it.
    """
    a = np.asarray(u, dtype=complex)
    b = np.asarray(v, dtype=complex)
    phases = np.angle(np.linalg.eigvals(a.conj().T @ b))

    # for unitaries the norm equals max_k |e^{i phi} - e^{i theta_k}|
    def cost(phi: float) -> float:
        return float(np.max(np.abs(np.exp(1j * phi) - np.exp(1j * phases))))

    centre = _spectral_centre(phases)
    res = minimize_scalar(
        cost,
        bracket=None,
        bounds=(centre - np.pi / 2, centre + np.pi / 2),
        method="bounded",
        options={"xatol": 1e-13},
    )
    best_phi, best = centre, cost(centre)
    if res.fun < best:
        best_phi, best = float(res.x), float(res.fun)
    return best, best_phi


def diamond_distance_unitary_bounds(u, v) -> tuple[float, float]:
    """Bracket the diamond distance between the channels of two unitaries.

    Returns ``(m / 2, m)`` where ``m = min_phi ||e^{i phi} u - v||_inf``.
    """
    a = check_unitary(u, name="u")
    b = check_unitary(v, name="v")
    _same_dim(a, b)
    m, _ = min_phase_distance(a, b)
    return 0.5 * m, m


def uhlmann_unitary(
    rho,
    rho_target,
    purification,
    purification_target,
    dims: tuple[int, int],
    tol: float = 1e-8,
) -> np.ndarray:
    """Unitary on the purifying register that maximises the purification overlap.

    Both purifications live on ``purifying (x) system`` with local dimensions
    ``dims = (d_purifying, d_system)``; ``rho`` and ``rho_target`` are their
    marginals on the system register. The returned ``w`` maximises
    ``|<target|(w (x) I)|purification>|``, and the maximum equals the root
    fidelity of the two marginals.

    Raises:
        ContractViolation: if a purification does not reproduce its marginal.
    """
    d_pur, d_sys = dims
    psi = as_state(purification, tol=1e-9).reshape(d_pur, d_sys)
    phi = as_state(purification_target, tol=1e-9).reshape(d_pur, d_sys)
    for mat, marg, label in ((psi, rho, "purification"), (phi, rho_target, "target purification")):
        marg = np.asarray(marg, dtype=complex)
        got = mat.T @ mat.conj()
        if marg.shape != got.shape or np.max(np.abs(got - marg)) > tol:
            raise ContractViolation(f"{label} does not purify the supplied marginal")
    # <phi|(w x I)|psi> = Tr(w psi phi^dagger); maximised by the polar factor
    cross = psi @ phi.conj().T
    x, _, yh = np.linalg.svd(cross)
    return (x @ yh).conj().T


# ---------------------------------------------------------------------------
# qubit registers


def embed_operator(op: np.ndarray, support: Sequence[int], register: Sequence[int]) -> np.ndarray:
    """Embed an operator on ``support`` into the ordered qubit ``register``.

    ``support`` must be a subset of ``register``; the operator's own tensor
    factors follow the order of ``support``.
    """
    support = list(support)
    register = list(register)
    pos = [register.index(q) for q in support]
    k = len(support)
    m = len(register)
    rest = [i for i in range(m) if i not in pos]
    full = np.kron(np.asarray(op, dtype=complex), np.eye(2 ** (m - k)))
    # axes of `full` are ordered (support..., rest...); permute into register order
    order = pos + rest
    perm = np.argsort(order)
    tensor = full.reshape([2] * (2 * m))
    tensor = tensor.transpose(list(perm) + [m + p for p in perm])
    return tensor.reshape(2**m, 2**m)


def restrict_operator(
    op: np.ndarray, support: Sequence[int], register: Sequence[int], tol: float = 1e-9
) -> np.ndarray:
    """Inverse of :func:`embed_operator`, checking the operator factorises.

    Raises:
        ContractViolation: if ``op`` acts non-trivially outside ``support``.
    """
    support = list(support)
    register = list(register)
    m = len(register)
    pos = [register.index(q) for q in support]
    rest = [i for i in range(m) if i not in pos]
    tensor = np.asarray(op).reshape([2] * (2 * m))
    tensor = tensor.transpose(pos + rest + [m + p for p in pos] + [m + r for r in rest])
    d_s = 2 ** len(support)
    d_r = 2 ** len(rest)
    blocks = tensor.reshape(d_s, d_r, d_s, d_r)
    local = np.einsum("iaja->ij", blocks) / d_r
    rebuilt = embed_operator(local, support, register)
    if np.max(np.abs(rebuilt - op)) > tol:
        raise ContractViolation("operator acts outside the declared support")
    return local


def apply_local(state: np.ndarray, op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a k-qubit operator to the listed qubits of an n-qubit state."""
    qubits = list(qubits)
    k = len(qubits)
    tensor = np.asarray(state).reshape([2] * n)
    gate = np.asarray(op).reshape([2] * (2 * k))
    out = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), qubits))
    # tensordot puts the gate's output axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), qubits)
    return out.reshape(-1)
