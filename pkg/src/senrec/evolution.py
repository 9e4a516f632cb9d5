"""Execution engines: dense full-space simulation and the sector fast path.

The dense engine builds the joint pure state, applies the completed W,
and traces out everything but the receiver.  The sector engine never
leaves the constrained rows: with at most n excitations in the joint state
and n-excitation receiver patterns, only the vacuum configuration of the
traced qubits survives the partial trace, so

    rho_R[N_R, 0_R] = (W psi)(0', N_R) * conj(psi(0)).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import SystemSizeError
from .excitation_space import MultiIndex, tensor_product
from .protocols import Extraction, ProtocolPlan
from .unitary_forge import BlockUnitary, PartialUnitarySpec, apply_constrained_rows, complete

DENSE_QUBIT_CAP = 20


@dataclass
class ReceiverDensity:
    """Density matrix over the receiver qubits.

    Basis state k corresponds to the receiver multi-index whose binary value
    is k, bit 0 (leftmost) being ``receiver_qubits[0]``.  ``order`` is the
    coherence order read by extraction (the number of senders).
    """

    matrix: np.ndarray
    receiver_qubits: tuple[int, ...]
    order: int

    @property
    def num_qubits(self) -> int:
        return len(self.receiver_qubits)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2).min())

    def element(self, row: MultiIndex, col: MultiIndex) -> complex:
        return complex(self.matrix[row.value, col.value])

    def to_json(self) -> str:
        dim = self.matrix.shape[0]
        doc = {
            "rows": dim,
            "cols": dim,
            "receiver_qubits": list(self.receiver_qubits),
            "basis": (
                "index k = receiver bitstring read as binary, leftmost bit is "
                "receiver_qubits[0]; data is row-major [re, im]"
            ),
            "data": [[float(z.real), float(z.imag)] for z in self.matrix.reshape(-1)],
        }
        return json.dumps(doc, indent=1)


@dataclass(frozen=True)
class CoherenceElement:
    label: Hashable
    row: MultiIndex
    value: complex


@dataclass
class EngineRun:
    engine: str
    elements: list[CoherenceElement]
    receiver: ReceiverDensity | None = None
    transformed: ReceiverDensity | None = None
    w: BlockUnitary | None = None
    v: BlockUnitary | None = None
    extras: dict = field(default_factory=dict)

    def values(self) -> dict[Hashable, complex]:
        return {e.label: e.value for e in self.elements}


def partial_trace(state: np.ndarray, receiver_qubits: Sequence[int]) -> np.ndarray:
    """Reduce a pure state vector or a density matrix to the receiver qubits.

    rho_R[a, b] = sum_x <x, a| rho |x, b>, with the receiver bits of a and b
    placed back at their global positions and x running over all other qubits.
    """
    state = np.asarray(state, dtype=complex)
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    receiver = list(receiver_qubits)
    rest = [q for q in range(n) if q not in set(receiver)]
    r = len(receiver)
    if state.ndim == 1:
        m = state.reshape([2] * n).transpose(rest + receiver).reshape(2 ** (n - r), 2**r)
        return m.T @ m.conj()
    if state.shape != (dim, dim):
        raise ValueError("density matrix must be square")
    t = state.reshape([2] * (2 * n))
    axes = rest + receiver + [n + q for q in rest] + [n + q for q in receiver]
    t = t.transpose(axes).reshape(2 ** (n - r), 2**r, 2 ** (n - r), 2**r)
    return np.einsum("xaxb->ab", t)


def _dense(plan: ProtocolPlan, qubit_cap: int, w_blocks, completion_seed):
    n = plan.layout.total_qubits
    if n > qubit_cap:
        raise SystemSizeError(
            f"{n} qubits exceed the dense cap of {qubit_cap}; use the sector engine"
        )
    psi = tensor_product(plan.senders, plan.layout).to_dense()
    w = complete(plan.w_spec, overrides=w_blocks, completion_seed=completion_seed)
    phi = w.apply(psi)
    rho = partial_trace(phi, plan.layout.receiver_qubits)
    return ReceiverDensity(rho, plan.layout.receiver_qubits, plan.num_senders), w


def evolve_dense(
    plan: ProtocolPlan,
    *,
    qubit_cap: int = DENSE_QUBIT_CAP,
    w_blocks: Mapping[int, np.ndarray] | None = None,
    completion_seed: int | None = None,
) -> ReceiverDensity:
    """Receiver density after W, from a full state-vector simulation."""
    return _dense(plan, qubit_cap, w_blocks, completion_seed)[0]


def extract(receiver: ReceiverDensity, patterns: Sequence[Extraction | MultiIndex]) -> list[CoherenceElement]:
    """Read rho_R[pattern, 0_R] for each pattern (order-n coherences only)."""
    zero = MultiIndex.zeros(receiver.num_qubits)
    out = []
    for p in patterns:
        label, pattern = (p.label, p.pattern) if isinstance(p, Extraction) else (str(p), p)
        if pattern.num_qubits != receiver.num_qubits:
            raise ValueError(f"pattern {pattern} does not span the {receiver.num_qubits} receiver qubits")
        if pattern.excitations != receiver.order:
            raise ValueError(
                f"pattern {pattern} has {pattern.excitations} excitations; only "
                f"order-{receiver.order} coherences carry results"
            )
        out.append(CoherenceElement(label, pattern, receiver.element(pattern, zero)))
    return out


def apply_receiver_unitary(
    receiver: ReceiverDensity,
    v_spec: PartialUnitarySpec,
    *,
    v_blocks: Mapping[int, np.ndarray] | None = None,
    completion_seed: int | None = None,
) -> ReceiverDensity:
    """xi = V rho V^dagger with V completed from its constrained rows."""
    return _apply_v(receiver, v_spec, v_blocks, completion_seed)[0]


def _apply_v(receiver, v_spec, v_blocks, completion_seed):
    if v_spec.total_qubits != receiver.num_qubits:
        raise ValueError(
            f"V acts on {v_spec.total_qubits} qubits, receiver has {receiver.num_qubits}"
        )
    v = complete(v_spec, overrides=v_blocks, completion_seed=completion_seed)
    vm = v.to_dense()
    xi = vm @ receiver.matrix @ vm.conj().T
    return ReceiverDensity(xi, receiver.receiver_qubits, receiver.order), v


def evolve_sector(plan: ProtocolPlan) -> list[CoherenceElement]:
    """Extraction values from the constrained rows only."""
    layout = plan.layout
    joint = tensor_product(plan.senders, layout)
    vacuum = joint.get(MultiIndex.zeros(layout.total_qubits)).conjugate()
    rows = apply_constrained_rows(plan.w_spec, joint)
    rho = {
        layout.receiver_part(row): value * vacuum
        for row, value in rows.items()
        if layout.rest_is_vacuum(row)
    }
    xi = {}
    if plan.v_spec is not None:
        for c in plan.v_spec.constraints:
            total = 0j
            for col, v in c.entries:
                if col not in rho:
                    raise ValueError(
                        f"V column {col} is not a constrained W row; the sector "
                        "engine cannot evaluate it"
                    )
                total += v * rho[col]
            xi[c.row] = total

    out = []
    for ex in plan.extraction:
        source = rho if ex.stage == "rho" else xi
        if ex.pattern not in source:
            raise ValueError(
                f"pattern {ex.pattern} ({ex.stage}) is not fixed by a constraint; "
                "use the dense engine"
            )
        out.append(CoherenceElement(ex.label, ex.pattern, source[ex.pattern]))
    return out


def run(
    plan: ProtocolPlan,
    engine: str = "sector",
    *,
    qubit_cap: int = DENSE_QUBIT_CAP,
    w_blocks: Mapping[int, np.ndarray] | None = None,
    v_blocks: Mapping[int, np.ndarray] | None = None,
    completion_seed: int | None = None,
) -> EngineRun:
    """Execute a plan on the chosen engine and collect every extraction value."""
    if engine == "sector":
        return EngineRun("sector", evolve_sector(plan))
    if engine != "dense":
        raise ValueError(f"engine must be 'dense' or 'sector', got {engine!r}")
    rho, w = _dense(plan, qubit_cap, w_blocks, completion_seed)
    xi, v = None, None
    if plan.v_spec is not None:
        xi, v = _apply_v(rho, plan.v_spec, v_blocks, completion_seed)
    rho_items = [ex for ex in plan.extraction if ex.stage == "rho"]
    xi_items = [ex for ex in plan.extraction if ex.stage == "xi"]
    elements = {e.label: e for e in extract(rho, rho_items)}
    if xi_items:
        elements.update({e.label: e for e in extract(xi, xi_items)})
    ordered = [elements[ex.label] for ex in plan.extraction]
    return EngineRun("dense", ordered, receiver=rho, transformed=xi, w=w, v=v)
