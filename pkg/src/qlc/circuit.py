"""Brickwork circuits, state preparation and the two-layer block reduction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ContractViolation
from .linalg import (
    apply_local,
    check_unitary,
    embed_operator,
    expm_hermitian,
    random_hermitian,
    random_unitary,
)

MAX_QUBITS = 12


@dataclass(frozen=True)
class Gate:
    pair: tuple[int, int]
    matrix: np.ndarray


@dataclass(frozen=True)
class BrickworkCircuit:
    """An n-qubit, depth-d brickwork circuit.

    Layer ``l`` (counting from 1) acts on pairs ``(i, i+1)`` with ``i`` even
    for odd ``l`` and ``i`` odd for even ``l``. Layers are listed in time
    order.
    """

    n: int
    d: int
    layers: tuple[tuple[Gate, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 0:
            raise ContractViolation("need n >= 1 and d >= 0")
        if len(self.layers) != self.d:
            raise ContractViolation(f"expected {self.d} layers, got {len(self.layers)}")
        for depth, layer in enumerate(self.layers, start=1):
            expected = brickwork_pairs(self.n, depth)
            pairs = [g.pair for g in layer]
            if pairs != expected:
                raise ContractViolation(f"layer {depth} pairs {pairs} are not brickwork {expected}")
            for g in layer:
                check_unitary(g.matrix, name=f"gate on {g.pair}")

    @property
    def gates(self) -> list[tuple[int, Gate]]:
        """All gates with their (1-based) layer index, in time order."""
        return [(depth, g) for depth, layer in enumerate(self.layers, start=1) for g in layer]

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def unitary(self) -> np.ndarray:
        """Full 2^n x 2^n circuit unitary (dense)."""
        _check_cap(self.n)
        full = np.eye(2**self.n, dtype=complex)
        register = list(range(self.n))
        for _, g in self.gates:
            full = embed_operator(g.matrix, g.pair, register) @ full
        return full

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "d": self.d,
            "layers": [
                [
                    {
                        "pair": list(g.pair),
                        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in g.matrix],
                    }
                    for g in layer
                ]
                for layer in self.layers
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> BrickworkCircuit:
        doc = json.loads(text)
        layers = tuple(
            tuple(
                Gate(
                    pair=tuple(entry["pair"]),
                    matrix=np.array([[complex(re, im) for re, im in row] for row in entry["matrix"]]),
                )
                for entry in layer
            )
            for layer in doc["layers"]
        )
        return cls(n=int(doc["n"]), d=int(doc["d"]), layers=layers)


def brickwork_pairs(n: int, depth: int) -> list[tuple[int, int]]:
    """Qubit pairs acted on at a given (1-based) layer."""
    start = 0 if depth % 2 == 1 else 1
    return [(i, i + 1) for i in range(start, n - 1, 2)]


def _check_cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise CapacityError(f"n = {n} exceeds the dense simulation cap of {MAX_QUBITS} qubits")


def random_circuit(n: int, d: int, rng: np.random.Generator) -> BrickworkCircuit:
    """Brickwork circuit with independent Haar-random two-qubit gates."""
    layers = tuple(
        tuple(Gate(pair, random_unitary(4, rng)) for pair in brickwork_pairs(n, depth))
        for depth in range(1, d + 1)
    )
    return BrickworkCircuit(n=n, d=d, layers=layers)


def prepare_state(c: BrickworkCircuit) -> np.ndarray:
    """Apply every layer of ``c`` to the all-zero state."""
    _check_cap(c.n)
    state = np.zeros(2**c.n, dtype=complex)
    state[0] = 1.0
    for _, g in c.gates:
        state = apply_local(state, g.matrix, g.pair, c.n)
    return state


@dataclass(frozen=True)
class PerturbedCircuit:
    circuit: BrickworkCircuit
    per_gate_eps: tuple[float, ...]
    state_distance_bound: float


def perturb_circuit(c: BrickworkCircuit, eps: float, seed: int) -> PerturbedCircuit:
    """Multiply every gate by an independent small random rotation.

    Each rotation is ``exp(-i t H)`` with ``||H||_inf = 1`` and ``t`` drawn
    uniformly from ``[0, eps]``. That rotation's unitary-norm distance from
    the identity (minimised over global phase) is ``2 sin(t/2) <= t``, which
    certifies it as an ``eps``-rotation; the output state is then within
    ``gate_count * eps`` of the input state by telescoping.
    """
    if eps < 0:
        raise ContractViolation("eps must be non-negative")
    rng = np.random.default_rng(seed)
    layers = []
    used = []
    for layer in c.layers:
        new_layer = []
        for g in layer:
            t = float(rng.uniform(0.0, eps)) if eps > 0 else 0.0
            h = random_hermitian(4, rng)
            rot = expm_hermitian(h, t) if t > 0 else np.eye(4, dtype=complex)
            new_layer.append(Gate(g.pair, rot @ g.matrix))
            used.append(t)
        layers.append(tuple(new_layer))
    out = BrickworkCircuit(n=c.n, d=c.d, layers=tuple(layers))
    return PerturbedCircuit(out, tuple(used), c.gate_count * eps)


# ---------------------------------------------------------------------------
# two-layer reduction


@dataclass(frozen=True)
class BlockGate:
    """A block of circuit gates acting on a contiguous set of qubits.

    ``regions`` labels the parts of the support shared with the neighbouring
    block on the left (``"T"``), on the right (``"B"``), and the rest
    (``"M"``).
    """

    support: tuple[int, ...]
    unitary: np.ndarray
    gate_ids: tuple[int, ...]
    regions: dict[str, tuple[int, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class TwoLayerReduction:
    """``U = U2 U1`` with block-diagonal first and second layers."""

    n: int
    d: int
    first_layer: tuple[BlockGate, ...]
    second_layer: tuple[BlockGate, ...]
    max_support: int
    exceeds_2d: bool

    @property
    def n_gate(self) -> int:
        return len(self.first_layer) + len(self.second_layer)

    def unitary(self) -> np.ndarray:
        register = list(range(self.n))
        full = np.eye(2**self.n, dtype=complex)
        for block in self.first_layer + self.second_layer:
            full = embed_operator(block.unitary, block.support, register) @ full
        return full


def _forward_outputs(c: BrickworkCircuit) -> list[tuple[int, int]]:
    """For each gate, the interval of final-time qubits it can influence."""
    gates = c.gates
    reach: list[tuple[int, int]] = [(0, 0)] * len(gates)
    # walk backwards in time; the latest gate touching a qubit sets its reach
    latest: dict[int, tuple[int, int]] = {}
    for idx in range(len(gates) - 1, -1, -1):
        _, g = gates[idx]
        lo, hi = g.pair
        for q in g.pair:
            if q in latest:
                lo = min(lo, latest[q][0])
                hi = max(hi, latest[q][1])
        reach[idx] = (lo, hi)
        for q in g.pair:
            latest[q] = (lo, hi)
    return reach


def _output_intervals(c: BrickworkCircuit, reach: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Partition the output qubits into the second-layer windows.

    The first window is the forward light cone of the first two qubits; the
    following ones have width 2d. A final remainder narrower than d is
    merged into the last window so no block grows past 3d qubits.
    """
    n, d = c.n, c.d
    first_gate = reach[0] if c.layers and c.layers[0] else (0, min(1, n - 1))
    intervals = [(0, first_gate[1])]
    start = first_gate[1] + 1
    while start < n:
        end = min(n - 1, start + 2 * d - 1)
        intervals.append((start, end))
        start = end + 1
    if len(intervals) > 1:
        lo, hi = intervals[-1]
        if hi - lo + 1 < d:
            prev_lo, _ = intervals[-2]
            intervals[-2:] = [(prev_lo, hi)]
    return intervals


def _block_unitary(c: BrickworkCircuit, gate_ids: list[int], support: tuple[int, ...]) -> np.ndarray:
    gates = c.gates
    mat = np.eye(2 ** len(support), dtype=complex)
    for idx in sorted(gate_ids):
        _, g = gates[idx]
        mat = embed_operator(g.matrix, g.pair, support) @ mat
    return mat


def two_layer_reduce(c: BrickworkCircuit) -> TwoLayerReduction:
    """Group the gates of ``c`` into two layers of disjoint light-cone blocks.

    A gate goes to the second-layer block of an output window when every
    output qubit it can influence lies in that window. This set is closed
    under taking later gates, so the remaining gates can be applied first;
    they split into connected components that form the first layer.
    """
    if c.d == 0 or c.gate_count == 0:
        return TwoLayerReduction(c.n, c.d, (), (), 0, False)
    gates = c.gates
    reach = _forward_outputs(c)
    intervals = _output_intervals(c, reach)

    second_ids: list[list[int]] = [[] for _ in intervals]
    leftover: list[int] = []
    for idx, (lo, hi) in enumerate(reach):
        for w, (a, b) in enumerate(intervals):
            if a <= lo and hi <= b:
                second_ids[w].append(idx)
                break
        else:
            leftover.append(idx)

    # connected components of leftover gates under shared qubits
    parent = {idx: idx for idx in leftover}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[int, int] = {}
    for idx in leftover:
        for q in gates[idx][1].pair:
            if q in owner:
                parent[find(idx)] = find(owner[q])
            owner[q] = idx
    groups: dict[int, list[int]] = {}
    for idx in leftover:
        groups.setdefault(find(idx), []).append(idx)

    def make(ids: list[int]) -> tuple[tuple[int, ...], list[int]]:
        qubits = sorted({q for i in ids for q in gates[i][1].pair})
        return tuple(qubits), ids

    second_raw = [make(ids) for ids in second_ids if ids]
    first_raw = sorted((make(ids) for ids in groups.values()), key=lambda item: item[0][0])

    first = [_labelled(c, sup, ids, second_raw) for sup, ids in first_raw]
    second = [_labelled(c, sup, ids, first_raw) for sup, ids in second_raw]

    for layer in (first, second):
        seen: set[int] = set()
        for block in layer:
            if seen & set(block.support):
                raise AssertionError("blocks within a layer overlap")
            seen |= set(block.support)

    max_support = max(len(b.support) for b in first + second)
    if max_support > 3 * c.d:
        raise AssertionError(f"block support {max_support} exceeds 3d = {3 * c.d}")
    return TwoLayerReduction(
        n=c.n,
        d=c.d,
        first_layer=tuple(first),
        second_layer=tuple(second),
        max_support=max_support,
        exceeds_2d=max_support > 2 * c.d,
    )


def _labelled(c, support, ids, others) -> BlockGate:
    own = set(support)
    lo_q, hi_q = min(support), max(support)
    top: set[int] = set()
    bottom: set[int] = set()
    for other_support, _ in others:
        shared = own & set(other_support)
        if not shared:
            continue
        if min(other_support) < lo_q or (min(other_support) == lo_q and max(other_support) < hi_q):
            top |= shared
        else:
            bottom |= shared
    middle = own - top - bottom
    regions = {"T": tuple(sorted(top)), "M": tuple(sorted(middle)), "B": tuple(sorted(bottom))}
    return BlockGate(
        support=tuple(support),
        unitary=_block_unitary(c, ids, tuple(support)),
        gate_ids=tuple(sorted(ids)),
        regions=regions,
    )
