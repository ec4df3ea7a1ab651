"""Compression configuration, error ledger, memory costs and the desk-scale
pipeline that runs every stage on a small circuit.
"""

from __future__ import annotations

import contextlib
import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bosonic, learner, localparam, qlan
from .circuit import BrickworkCircuit, Gate, perturb_circuit, prepare_state
from .errors import AdmissibilityError, CapacityError, ContractViolation, QlcError
from .linalg import apply_local, basis_state, pure_trace_distance

TRUNCATION_SCALE = 896.0
LOG_N_CONSTANT = 1.0
AMP_CONSTANT = 1.0
# largest photon cap whose truncated density matrix the desk pipeline builds
FOCK_CAP = 4096


@dataclass(frozen=True)
class CompressionConfig:
    n: int
    d: int
    N: float
    delta_exp: float
    gamma: float
    window: tuple[float, float]
    admissible: bool
    eps0: float
    N0: float
    alpha0: float

    def as_dict(self) -> dict:
        return asdict(self)


def admissible_window(n: int, N: float) -> tuple[float, float, float]:
    """``(gamma, lo, hi)`` where ``N = n^(32/3 + gamma)`` and ``lo < Delta < hi`` is required."""
    gamma = math.log(N) / math.log(n) - 32.0 / 3.0
    base = 32.0 + 3.0 * gamma
    return gamma, 6.0 / base, 0.75 - 18.0 / base


def derive_config(n: int, d: int, N: float, delta_exp: float, enforce_window: bool = True) -> CompressionConfig:
    """Protocol parameters for ``N`` copies of an n-qubit depth-d state.

    With ``enforce_window=False`` the same quantities are computed for an
    exponent outside the admissible window and ``admissible`` is False.

    Raises:
        AdmissibilityError: if ``delta_exp`` is outside the open window (or
            no window exists because ``gamma <= 0``) and the window is enforced.
        ContractViolation: for ``n < 2``, ``d < 1`` or ``N <= n``.
    """
    if n < 2 or d < 1:
        raise ContractViolation("need n >= 2 and d >= 1")
    if not N > n:
        raise ContractViolation(f"N = {N} must exceed n = {n}")
    gamma, lo, hi = admissible_window(n, N)
    ok = gamma > 0 and lo < delta_exp < hi
    if enforce_window and not ok:
        raise AdmissibilityError(
            f"Delta = {delta_exp} outside the admissible window ({lo:.6g}, {hi:.6g}) for gamma = {gamma:.6g}"
        )
    eps0 = n * d * N ** (-(1.0 - 2.0 * delta_exp / 3.0) / 2.0)
    return CompressionConfig(
        n=n,
        d=d,
        N=float(N),
        delta_exp=delta_exp,
        gamma=gamma,
        window=(lo, hi),
        admissible=ok,
        eps0=eps0,
        N0=float(N) ** (1.0 - delta_exp / 2.0),
        alpha0=TRUNCATION_SCALE * math.sqrt(N) * eps0,
    )


@dataclass(frozen=True)
class ErrorLedger:
    """Four error terms; ``eps_qlan`` is zero when no numeric value is supplied.

    ``log_eps_trun`` keeps the truncation term when ``eps_trun`` underflows.
    """

    eps_tomo: float
    eps_qlan: float
    eps_amp: float
    eps_trun: float
    total: float
    log_eps_trun: float
    qlan_is_numeric: bool

    def as_dict(self) -> dict:
        return asdict(self)


def error_ledger(cfg: CompressionConfig, qlan_numeric: float | None = None) -> ErrorLedger:
    n, d, N, delta = cfg.n, cfg.d, cfg.N, cfg.delta_exp
    modes = n * 2.0 ** (8 * d)
    exponent = TRUNCATION_SCALE**2 * n**2 * d**2 * N ** (2 * delta / 3) / 2
    log_trun = math.log(modes * math.sqrt(2.0)) - exponent
    eps_trun = math.exp(log_trun)
    eps_amp = AMP_CONSTANT * modes * cfg.N0 / N
    if qlan_numeric is not None and qlan_numeric < 0:
        raise ContractViolation("qlan error must be non-negative")
    eps_qlan = float(qlan_numeric) if qlan_numeric is not None else 0.0
    total = cfg.eps0 + eps_qlan + eps_amp + eps_trun
    return ErrorLedger(cfg.eps0, eps_qlan, eps_amp, eps_trun, total, log_trun, qlan_numeric is not None)


@dataclass(frozen=True)
class MemoryCost:
    """Leading-order memory; the ``O(log2 n)`` corrections are kept apart."""

    M_c_bits: float
    M_q_qubits: float
    r_qc: float
    M_c_correction_bits: float
    M_q_correction_qubits: float

    def as_dict(self) -> dict:
        return asdict(self)


def memory_cost(cfg: CompressionConfig) -> MemoryCost:
    n, d, delta = cfg.n, cfg.d, cfg.delta_exp
    log_n_copies = math.log2(cfg.N)
    c_pref = 8.0 * (1.0 - 2.0 * delta / 3.0) * n * d
    q_pref = (n / d + 4.0) * 2.0 ** (8 * d + 1) / 3.0
    return MemoryCost(
        M_c_bits=c_pref * log_n_copies,
        M_q_qubits=q_pref * delta * log_n_copies,
        r_qc=2.0 ** (8 * d - 2) * delta / (d**2 * (3.0 - 2.0 * delta)),
        M_c_correction_bits=c_pref * LOG_N_CONSTANT * math.log2(n),
        M_q_correction_qubits=q_pref * LOG_N_CONSTANT * math.log2(n),
    )


# ---------------------------------------------------------------------------
# desk-scale pipeline


@dataclass(frozen=True)
class DeskScaleParams:
    """Knobs for :func:`run_pipeline_desk`.

    ``reference_N`` fixes the local scale ``eta`` of the instance:
    ``eta = sqrt(reference_N) * (largest rotation angle)``. Q-LAN numerics
    then run at ``N_surrogate`` for that fixed ``eta``, so raising the
    surrogate moves the same instance deeper into the asymptotic regime.
    The truncation amplitude bound is ``max(eta * n_overlap, alpha0_floor)``;
    the floor keeps the photon cap ``(e alpha0)^2`` in the range where the
    Chernoff bound is informative.
    """

    N_surrogate: int = 10_000
    reference_N: int = 10_000
    perturbation: float = 0.01
    net_eps: float = 0.05
    hypotheses: int = 4
    M_select: int = 10**8
    delta: float = 1e-3
    delta_exp: float = 0.5
    alpha0_floor: float = 3.0
    seed: int = 0
    estimate: BrickworkCircuit | None = None


@dataclass(frozen=True)
class StageResult:
    name: str
    error: float
    detail: dict = field(default_factory=dict)

    @property
    def fidelity_bound(self) -> float:
        return (1.0 - min(self.error, 1.0)) ** 2


@dataclass(frozen=True)
class PipelineReport:
    config: CompressionConfig
    closed_form_ledger: ErrorLedger
    desk_ledger: ErrorLedger
    memory: MemoryCost
    stages: tuple[StageResult, ...]
    fidelity_bound: float
    infidelity_proxy: float
    eta: float
    selected: int

    def as_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "closed_form_ledger": self.closed_form_ledger.as_dict(),
            "desk_ledger": self.desk_ledger.as_dict(),
            "memory": self.memory.as_dict(),
            "stages": [{"name": s.name, "error": s.error, "detail": s.detail} for s in self.stages],
            "fidelity_bound": self.fidelity_bound,
            "infidelity_proxy": self.infidelity_proxy,
            "eta": self.eta,
            "selected": self.selected,
        }


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except QlcError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


@functools.lru_cache(maxsize=8)
def _cached_net(eps: float) -> learner.CoveringNet:
    return learner.build_net_single_gate(eps)


def snap_to_net(c: BrickworkCircuit, net: learner.CoveringNet) -> BrickworkCircuit:
    layers = tuple(tuple(Gate(g.pair, net.nearest(g.matrix)) for g in layer) for layer in c.layers)
    return BrickworkCircuit(c.n, c.d, layers)


def _n_copy_distance(delta: float, N: int) -> float:
    """Trace distance of N-fold tensor powers of two pure states at distance ``delta``."""
    overlap_sq = max(0.0, 1.0 - delta**2)
    return math.sqrt(-math.expm1(N * math.log(overlap_sq))) if overlap_sq > 0 else 1.0


def _qlan_stage(lp: localparam.LocalParameterization, sim: DeskScaleParams):
    n = lp.base_circuit.n
    rots = [r for r in lp.rotations if r.eps_certificate > 0]
    theta_max = max((r.eps_certificate for r in rots), default=0.0)
    eta = math.sqrt(sim.reference_N) * theta_max
    N = int(sim.N_surrogate)
    if not rots:
        amps = qlan.CoherentAmplitudes({}, 0.0)
        return amps, eta, StageResult("qlan", 0.0, {"K": 0, "per_copy": 0.0, "n_copy": 0.0, "map": 0.0}), 0
    supports = tuple(tuple(r.support) for r in rots)
    template = qlan.CircuitTemplate(n, supports, max(len(s) for s in supports))
    # exp(-2i theta H) = exp(-i (eta / sqrt N_ref) h) with ||h|| <= 1
    hs = [2.0 * (r.eps_certificate / theta_max) * r.generator for r in rots]
    amps = qlan.amplitudes(template, hs, eta)
    step = eta / math.sqrt(N)
    zero = basis_state(0, 2**n)
    rotated = zero
    for sup, h in zip(supports, hs):
        rotated = apply_local(rotated, localparam.expm_hermitian(h, step), sup, n)
    coeff0, coeffs = qlan.truncated_state(amps, N)
    linear = np.zeros(2**n, dtype=complex)
    linear[0] = coeff0
    for k, v in coeffs.items():
        linear[qlan.string_to_index(k)] = -1j * v
    per_copy = pure_trace_distance(rotated, linear)
    n_copy = _n_copy_distance(per_copy, N)
    if amps.K <= 3:
        overlap = abs(qlan.qlan_overlap(amps, N))
    else:
        overlap = qlan.aggregated_overlap(float(np.sum(np.abs(amps.values()) ** 2)), N)
    map_err = math.sqrt(max(0.0, 1.0 - overlap**2))
    detail = {"K": amps.K, "per_copy": per_copy, "n_copy": n_copy, "map": map_err}
    return amps, eta, StageResult("qlan", n_copy + map_err, detail), template.n_overlap


def run_pipeline_desk(c: BrickworkCircuit, sim: DeskScaleParams | None = None) -> PipelineReport:
    """Run selection, parameterization, Q-LAN, truncation and amplification on ``c``.

    Each stage reports a trace-distance error. The decoder's fidelity lower
    bound is the product of ``(1 - error)^2`` over stages; the infidelity
    proxy ``1 - prod(1 - error)`` never exceeds the summed desk ledger.
    """
    sim = sim or DeskScaleParams()
    if c.n > 8 or c.d > 2:
        raise ContractViolation("desk pipeline supports n <= 8 and d <= 2")
    N = int(sim.N_surrogate)
    psi = prepare_state(c)
    stages: list[StageResult] = []

    with _stage("selection"):
        if sim.estimate is not None:
            candidates = [sim.estimate]
        else:
            net = _cached_net(sim.net_eps)
            candidates = [snap_to_net(c, net)]
            candidates += [
                perturb_circuit(c, sim.perturbation, sim.seed * 1000 + k).circuit for k in range(sim.hypotheses)
            ]
        states = [prepare_state(h) for h in candidates]
        idx, eps_stat = learner.hypothesis_select(psi, states, sim.M_select, sim.delta, seed=sim.seed)
        estimate = candidates[idx]
        dists = [pure_trace_distance(psi, s) for s in states]
        guarantee = 3 * min(dists) + eps_stat
        stages.append(
            StageResult(
                "selection",
                sim.delta if sim.estimate is None else 0.0,
                {"distance": dists[idx], "guarantee": guarantee, "eps_stat": eps_stat, "index": idx},
            )
        )

    with _stage("parameterize"):
        lp = localparam.parameterize(c, estimate, guarantee)
        stages.append(
            StageResult(
                "parameterize",
                lp.reconstruction_error,
                {"n_gate": lp.n_gate, "max_support": lp.max_support, "max_overlap": lp.max_overlap},
            )
        )

    with _stage("qlan"):
        amps, eta, qstage, n_overlap = _qlan_stage(lp, sim)
        stages.append(qstage)

    u = amps.values()
    with _stage("truncation"):
        alpha0 = max(eta * n_overlap, sim.alpha0_floor)
        if np.max(np.abs(u), initial=0.0) > alpha0 + 1e-12:
            raise AssertionError("amplitude above the truncation bound")
        m0 = max(1, math.ceil((math.e * alpha0) ** 2))
        if m0 > FOCK_CAP:
            raise CapacityError(f"photon cap m0 = {m0} exceeds {FOCK_CAP}; the estimate is too far from the target")
        trun = [bosonic.truncate_channel(bosonic.coherent(x, qlan.default_cutoff(x)), m0) for x in u]
        stages.append(StageResult("truncation", float(sum(t.err_exact for t in trun)), {"m0": m0, "alpha0": alpha0}))

    with _stage("amplification"):
        N0 = N ** (1.0 - sim.delta_exp / 2.0)
        gain = math.sqrt(N / (N - N0))
        shrink = 1.0 / gain
        amp = [bosonic.amplify(bosonic.coherent(shrink * x, qlan.default_cutoff(x)), gain) for x in u]
        stages.append(StageResult("amplification", float(sum(a.err_model for a in amp)), {"gain": gain, "N0": N0}))

    fid = float(np.prod([s.fidelity_bound for s in stages]))
    if fid > min(s.fidelity_bound for s in stages) + 1e-15:
        raise AssertionError("fidelity product above the smallest stage bound")
    proxy = 1.0 - float(np.prod([1.0 - min(s.error, 1.0) for s in stages]))

    by_name = {s.name: s.error for s in stages}
    desk_total = sum(by_name.values())
    desk = ErrorLedger(
        eps_tomo=by_name["selection"],
        eps_qlan=by_name["qlan"] + by_name["parameterize"],
        eps_amp=by_name["amplification"],
        eps_trun=by_name["truncation"],
        total=desk_total,
        log_eps_trun=math.log(by_name["truncation"]) if by_name["truncation"] > 0 else -math.inf,
        qlan_is_numeric=True,
    )
    cfg = derive_config(c.n, max(c.d, 1), float(N), sim.delta_exp, enforce_window=False)
    return PipelineReport(
        config=cfg,
        closed_form_ledger=error_ledger(cfg, by_name["qlan"]),
        desk_ledger=desk,
        memory=memory_cost(cfg),
        stages=tuple(stages),
        fidelity_bound=fid,
        infidelity_proxy=proxy,
        eta=eta,
        selected=idx,
    )
