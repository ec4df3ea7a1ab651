"""Small-rotation extraction, localization, decoupling and the full local
parameterization of a shallow-circuit state around an estimate.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .circuit import BrickworkCircuit, prepare_state, two_layer_reduce
from .errors import ContractViolation, NotSmallRotationError
from .linalg import (
    apply_local,
    as_state,
    basis_state,
    check_unitary,
    embed_operator,
    expm_hermitian,
    pure_trace_distance,
    random_hermitian,
    random_state,
    random_unitary,
    reduced_density,
    restrict_operator,
    uhlmann_unitary,
)

MAX_PARAM_QUBITS = 10
# real parameters per rotation on k qubits is 4^k - 1, so the documented
# constant for the (n/d) 4^{8d} total is 1 per rotation plus the n/d + 4 count
PARAM_CONSTANT = 5.0


@dataclass(frozen=True)
class EpsRotation:
    """``unitary = exp(i phase) exp(-2i eps H)`` acting on ``support``.

    ``eps_certificate`` upper-bounds the diamond distance between the
    rotation's channel and the identity channel.
    """

    support: tuple[int, ...]
    unitary: np.ndarray
    generator: np.ndarray
    eps_certificate: float
    phase: float = 0.0

    def reconstruct(self) -> np.ndarray:
        return np.exp(1j * self.phase) * expm_hermitian(self.generator, 2 * self.eps_certificate)


def extract_rotation(w, support: Sequence[int] = ()) -> EpsRotation:
    """Write a unitary close to the identity as a short-time evolution.

    The eigenphases are centred on the midpoint of their shortest covering
    arc; the certificate is the largest centred phase, i.e. half of the
    spread, and the generator is rescaled to match.

    Raises:
        NotSmallRotationError: if the eigenphases spread over pi or more, so
            the principal logarithm is ambiguous.
    """
    mat = check_unitary(w, tol=1e-9, name="rotation")
    # complex Schur form of a normal matrix is diagonal with a unitary basis
    tri, basis = schur(mat, output="complex")
    lam = np.diag(tri)
    ang = np.sort(np.mod(np.angle(lam), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    widest = int(np.argmax(gaps))
    spread = 2 * np.pi - gaps[widest]
    if spread >= np.pi:
        raise NotSmallRotationError(f"eigenphase spread {spread:.6f} is not below pi")
    centre = ang[(widest + 1) % len(ang)] + spread / 2
    centred = np.angle(lam * np.exp(-1j * centre))
    theta = float(np.max(np.abs(centred)))
    if theta == 0.0:
        gen = np.zeros_like(mat)
    else:
        gen = (basis * (-centred / (2 * theta))) @ basis.conj().T
        gen = 0.5 * (gen + gen.conj().T)
    return EpsRotation(
        support=tuple(support),
        unitary=mat,
        generator=gen,
        eps_certificate=theta,
        phase=float(np.angle(np.exp(1j * centre))),
    )


def localize_unitary(v, phi, eps: float, support: Sequence[int] = ()) -> EpsRotation:
    """Minimal-angle rotation that sends ``phi`` to ``v phi``.

    The rotation acts in the plane spanned by ``phi`` and the normalised
    component of ``v phi`` orthogonal to it, and as the phase of
    ``<phi|v|phi>`` everywhere else. Its certificate is
    ``arccos |<phi|v|phi>|``, which is at most ``(pi/2) d < 4 d`` for
    ``d`` the trace distance between ``phi`` and ``v phi``.

    Raises:
        ContractViolation: if ``v phi`` is further than ``eps`` from ``phi``.
    """
    mat = check_unitary(v, tol=1e-9, name="v")
    vec = as_state(phi, tol=1e-9)
    image = mat @ vec
    dist = pure_trace_distance(vec, image)
    if dist > eps * (1 + 1e-9) + 1e-12:
        raise ContractViolation(f"measured distance {dist:.6g} exceeds eps = {eps:.6g}")
    c = np.vdot(vec, image)
    if abs(c) < 1e-12:
        raise ContractViolation("v maps phi to an orthogonal state")
    a = np.angle(c)
    resid = image - c * vec
    s = np.linalg.norm(resid)
    dim = len(vec)
    rot = np.exp(1j * a) * np.eye(dim, dtype=complex)
    if s > 1e-15:
        perp = np.exp(-1j * a) * resid / s
        cos_eta = abs(c)
        sin_eta = s
        basis = np.stack([vec, perp], axis=1)
        block = np.array([[cos_eta, -sin_eta], [sin_eta, cos_eta]]) - np.eye(2)
        rot = rot + np.exp(1j * a) * (basis @ block @ basis.conj().T)
    out = extract_rotation(rot, support)
    if np.linalg.norm(out.unitary @ vec - image) > 1e-10:
        raise AssertionError("localized rotation does not reproduce v phi")
    return out


@dataclass(frozen=True)
class DecouplingResult:
    w_a: np.ndarray
    u_b: np.ndarray
    achieved: float
    hypothesis: float


def _uhlmann_for(state: np.ndarray, target: np.ndarray, d_act: int, d_keep: int) -> np.ndarray:
    """Uhlmann unitary on the first factor of a ``d_act x d_keep`` pure state."""
    rho = reduced_density(state, [d_act, d_keep], [1])
    rho_t = reduced_density(target, [d_act, d_keep], [1])
    return uhlmann_unitary(rho, rho_t, state, target, dims=(d_act, d_keep))


def decouple(
    psi_aa,
    phi_bb,
    v_abc,
    eps: float,
    *,
    psi_target,
    phi_target,
    dims: tuple[int, int, int, int, int],
) -> DecouplingResult:
    """Replace an entangling ``V`` on ``A B C`` by local unitaries on A and B.

    Registers are ordered ``A, A', B, B', C`` with local dimensions
    ``dims``; ``psi_aa`` lives on ``A A'``, ``phi_bb`` on ``B B'`` and
    ``v_abc`` on ``A B C``. ``C`` starts in its first basis state. The
    hypothesis is that ``V`` carries ``psi (x) phi (x) 0`` to within ``eps``
    of ``psi_target (x) phi_target (x) 0``.

    Returns:
        The Uhlmann unitaries on ``A`` and ``B`` and the achieved distance
        between the V-evolved state and the locally rotated state, which is
        at most ``3 eps``.
    """
    d_a, d_a2, d_b, d_b2, d_c = dims
    psi = as_state(psi_aa, tol=1e-9)
    phi = as_state(phi_bb, tol=1e-9)
    psi_t = as_state(psi_target, tol=1e-9)
    phi_t = as_state(phi_target, tol=1e-9)
    v = check_unitary(v_abc, tol=1e-9, name="v_abc")
    if v.shape[0] != d_a * d_b * d_c:
        raise ContractViolation("v_abc dimension does not match A B C")

    zero_c = basis_state(0, d_c)
    start = np.kron(np.kron(psi, phi), zero_c)
    goal = np.kron(np.kron(psi_t, phi_t), zero_c)
    shape = [d_a, d_a2, d_b, d_b2, d_c]

    def act(op_abc: np.ndarray, vec: np.ndarray) -> np.ndarray:
        # move to (A, B, C, A', B') ordering, apply, and move back
        t = vec.reshape(shape).transpose(0, 2, 4, 1, 3).reshape(d_a * d_b * d_c, -1)
        t = op_abc @ t
        return t.reshape(d_a, d_b, d_c, d_a2, d_b2).transpose(0, 3, 1, 4, 2).reshape(-1)

    evolved = act(v, start)
    hyp = pure_trace_distance(evolved, goal)
    if hyp > eps * (1 + 1e-9) + 1e-12:
        raise ContractViolation(f"decoupling hypothesis distance {hyp:.6g} exceeds eps = {eps:.6g}")

    w_a = _uhlmann_for(psi, psi_t, d_a, d_a2)
    u_b = _uhlmann_for(phi, phi_t, d_b, d_b2)
    local = act(np.kron(np.kron(w_a, u_b), np.eye(d_c)), start)
    achieved = pure_trace_distance(evolved, local)
    if achieved > 3 * hyp + 1e-9:
        raise AssertionError(f"decoupling achieved {achieved} above 3 x {hyp}")
    return DecouplingResult(w_a, u_b, achieved, hyp)


def random_decoupling_instance(rng: np.random.Generator, scale: float, dims=(2, 2, 2, 2, 2)) -> dict:
    """Keyword arguments for :func:`decouple` with a tight ``eps``.

    ``V`` is a product of local unitaries on A and B followed by a small
    entangling evolution on A B C; the targets are the locally rotated
    inputs with extra noise of size ``scale``. ``eps`` is set to the exact
    hypothesis distance.
    """
    d_a, d_a2, d_b, d_b2, d_c = dims
    psi = random_state(d_a * d_a2, rng)
    phi = random_state(d_b * d_b2, rng)
    wa = random_unitary(d_a, rng)
    ub = random_unitary(d_b, rng)
    h = random_hermitian(d_a * d_b * d_c, rng)
    v = expm_hermitian(h, float(rng.uniform(0, scale))) @ np.kron(np.kron(wa, ub), np.eye(d_c))

    def nudge(vec: np.ndarray) -> np.ndarray:
        out = vec + scale * rng.uniform(0, 1) * random_state(len(vec), rng)
        return out / np.linalg.norm(out)

    psi_t = nudge(np.kron(wa, np.eye(d_a2)) @ psi)
    phi_t = nudge(np.kron(ub, np.eye(d_b2)) @ phi)
    zero_c = basis_state(0, d_c)
    shape = [d_a, d_a2, d_b, d_b2, d_c]
    start = np.kron(np.kron(psi, phi), zero_c)
    t = start.reshape(shape).transpose(0, 2, 4, 1, 3).reshape(d_a * d_b * d_c, -1)
    evolved = (v @ t).reshape(d_a, d_b, d_c, d_a2, d_b2).transpose(0, 3, 1, 4, 2).reshape(-1)
    eps = pure_trace_distance(evolved, np.kron(np.kron(psi_t, phi_t), zero_c))
    return {
        "psi_aa": psi,
        "phi_bb": phi,
        "v_abc": v,
        "eps": eps,
        "psi_target": psi_t,
        "phi_target": phi_t,
        "dims": tuple(dims),
    }


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class LocalParameterization:
    """Target state written as ``estimate * (ordered rotations) |0...0>``.

    ``rotations`` are listed in the order they are applied to the all-zero
    state; ``kinds`` tags each as coming from a first- or second-layer block.
    """

    base_circuit: BrickworkCircuit
    rotations: tuple[EpsRotation, ...]
    kinds: tuple[str, ...]
    n_gate: int
    max_support: int
    max_overlap: int
    state_distance: float
    reconstruction_error: float
    local_distances: tuple[float, ...]

    @property
    def parameter_count(self) -> int:
        return sum(4 ** len(r.support) - 1 for r in self.rotations)

    def parameter_budget(self) -> float:
        n, d = self.base_circuit.n, max(self.base_circuit.d, 1)
        return PARAM_CONSTANT * (n / d) * 4.0 ** (8 * d)

    def state(self) -> np.ndarray:
        n = self.base_circuit.n
        vec = basis_state(0, 2**n)
        for rot in self.rotations:
            vec = apply_local(vec, rot.unitary, rot.support, n)
        return self.base_circuit.unitary() @ vec


def _same_structure(a: BrickworkCircuit, b: BrickworkCircuit) -> None:
    if a.n != b.n or a.d != b.d:
        raise ContractViolation("target and estimate must share n and d")


def parameterize(target: BrickworkCircuit, estimate: BrickworkCircuit, eps: float) -> LocalParameterization:
    """Express the target state as the estimate circuit followed by small rotations.

    Both circuits are reduced to two block layers. Each second-layer block
    of the target is inverted by the matching estimated block; Uhlmann
    unitaries on the overlaps with first-layer blocks absorb the local
    freedom, and a localized rotation on the block's neighbourhood carries
    the remaining discrepancy. These rotations are conjugated past the
    blocks applied after them. The first-layer discrepancies then become
    localized rotations acting on the all-zero state.

    Raises:
        ContractViolation: if the two states are further than ``eps`` apart.
        NotSmallRotationError: if a rotation has an ambiguous logarithm; the
            message names the block.
    """
    _same_structure(target, estimate)
    n = target.n
    if n > MAX_PARAM_QUBITS:
        raise ContractViolation(f"parameterize supports n <= {MAX_PARAM_QUBITS}")
    psi = prepare_state(target)
    psi_hat = prepare_state(estimate)
    dist = pure_trace_distance(psi, psi_hat)
    if dist > eps * (1 + 1e-9) + 1e-12:
        raise ContractViolation(f"estimate-target distance {dist:.6g} exceeds eps = {eps:.6g}")

    red = two_layer_reduce(target)
    red_hat = two_layer_reduce(estimate)
    register = list(range(n))
    dim = 2**n

    def full(op: np.ndarray, support: Sequence[int]) -> np.ndarray:
        return embed_operator(op, support, register)

    firsts = red.first_layer
    seconds = red.second_layer
    fh_ops = [full(b.unitary, b.support) for b in red_hat.first_layer]
    d_ops = [
        full(bh.unitary.conj().T @ b.unitary, b.support)
        for b, bh in zip(seconds, red_hat.second_layer)
    ]
    u1_hat = np.eye(dim, dtype=complex)
    for op in fh_ops:
        u1_hat = op @ u1_hat
    zero = basis_state(0, dim)

    # neighbours: first-layer blocks sharing qubits with each second-layer block
    nbrs = [[i for i, f in enumerate(firsts) if set(f.support) & set(s.support)] for s in seconds]

    # Uhlmann unitaries on each (second block, first block) overlap
    w_parts: dict[tuple[int, int], tuple[list[int], np.ndarray]] = {}
    w_ops: list[np.ndarray] = []
    w_sup: list[set[int]] = []
    for j, s in enumerate(seconds):
        w_full = np.eye(dim, dtype=complex)
        sup: set[int] = set()
        for i in nbrs[j]:
            f, fh = firsts[i], red_hat.first_layer[i]
            act = [q for q in f.support if q in s.support]
            keep = [q for q in f.support if q not in s.support]
            perm = [f.support.index(q) for q in act + keep]
            shape = [2] * len(f.support)
            start = f.unitary[:, 0].reshape(shape).transpose(perm).reshape(-1)
            goal = fh.unitary[:, 0].reshape(shape).transpose(perm).reshape(-1)
            w = _uhlmann_for(start, goal, 2 ** len(act), 2 ** len(keep))
            w_parts[(j, i)] = (act, w)
            w_full = full(w, act) @ w_full
            sup |= set(act)
        w_ops.append(w_full)
        w_sup.append(sup)

    # second-layer rotations
    v_ops: list[np.ndarray] = []
    v_sup: list[set[int]] = []
    local_dists: list[float] = []
    for j, s in enumerate(seconds):
        q_j = sorted(set(s.support).union(*[set(firsts[i].support) for i in nbrs[j]]))
        q_zero = basis_state(0, 2 ** len(q_j))
        fq = np.eye(2 ** len(q_j), dtype=complex)
        for i in nbrs[j]:
            fq = embed_operator(firsts[i].unitary, firsts[i].support, q_j) @ fq
        d_loc = restrict_operator(d_ops[j], s.support, register)
        d_q = embed_operator(d_loc, s.support, q_j)
        w_q = np.eye(2 ** len(q_j), dtype=complex)
        for i in nbrs[j]:
            act, w = w_parts[(j, i)]
            w_q = embed_operator(w, act, q_j) @ w_q
        phi_j = w_q @ fq @ q_zero
        v_local = d_q @ w_q.conj().T
        local_dists.append(pure_trace_distance(phi_j, v_local @ phi_j))
        try:
            rot = localize_unitary(v_local, phi_j, 1.0, q_j)
        except NotSmallRotationError as exc:
            raise NotSmallRotationError(f"second-layer block {j}: {exc}") from exc
        op = full(rot.unitary, q_j)
        sup = set(q_j)
        for k in range(j + 1, len(seconds)):
            sk = set(seconds[k].support)
            if sk & sup:
                op = d_ops[k] @ op @ d_ops[k].conj().T
                sup = sup | sk
        for k in range(j):
            if w_sup[k] & sup:
                op = w_ops[k] @ op @ w_ops[k].conj().T
                sup = sup | w_sup[k]
        for f in firsts:
            if set(f.support) & sup:
                sup = sup | set(f.support)
        op = u1_hat.conj().T @ op @ u1_hat
        v_ops.append(op)
        v_sup.append(sup)

    # first-layer rotations acting on |0...0>
    p_rots: list[EpsRotation] = []
    for i, f in enumerate(firsts):
        fh = red_hat.first_layer[i]
        g_loc = f.unitary
        for (j, i2), (act, w) in w_parts.items():
            if i2 == i:
                g_loc = embed_operator(w, act, f.support) @ g_loc
        v_loc = fh.unitary.conj().T @ g_loc
        q_zero = basis_state(0, 2 ** len(f.support))
        local_dists.append(pure_trace_distance(q_zero, v_loc @ q_zero))
        try:
            p_rots.append(localize_unitary(v_loc, q_zero, 1.0, f.support))
        except NotSmallRotationError as exc:
            raise NotSmallRotationError(f"first-layer block {i}: {exc}") from exc

    rotations: list[EpsRotation] = list(p_rots)
    kinds = ["first"] * len(p_rots)
    for j in range(len(seconds) - 1, -1, -1):
        sup = sorted(v_sup[j])
        local = restrict_operator(v_ops[j], sup, register, tol=1e-8)
        try:
            rotations.append(extract_rotation(local, sup))
        except NotSmallRotationError as exc:
            raise NotSmallRotationError(f"second-layer block {j}: {exc}") from exc
        kinds.append("second")

    result_state = zero.copy()
    for rot in rotations:
        result_state = apply_local(result_state, rot.unitary, rot.support, n)
    result_state = estimate.unitary() @ result_state
    recon = float(np.linalg.norm(result_state - psi))

    overlap = np.zeros(n, dtype=int)
    for rot in rotations:
        overlap[list(rot.support)] += 1
    return LocalParameterization(
        base_circuit=estimate,
        rotations=tuple(rotations),
        kinds=tuple(kinds),
        n_gate=len(rotations),
        max_support=max((len(r.support) for r in rotations), default=0),
        max_overlap=int(overlap.max(initial=0)),
        state_distance=dist,
        reconstruction_error=recon,
        local_distances=tuple(local_dists),
    )

