"""Protocol plans for the six matrix operations.

Each ``plan_*`` function encodes its inputs into sender states, fixes the
rows of W that carry the result, names the receiver coherence elements to
read and records the constant that turns those elements back into the
classical answer.  All labels and indices are 0-based.

Inputs whose norm is too large for amplitude encoding are shrunk by
:class:`ScalePolicy`; the scale factors are stored on the plan and undone
by :func:`decode`.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from .errors import DegenerateDecodeError, NormalizationError, SingularMatrixError
from .excitation_space import MultiIndex, SenderState, SystemLayout, encode_sender
from .unitary_forge import PartialUnitarySpec, add_row_constraint

DEFAULT_LAMBDA = 0.5
DEFAULT_SIGMA = 1 / (2 * math.sqrt(2))
DECODE_TOL = 1e-12
UNIT_B_TOL = 1e-10


@dataclass(frozen=True)
class ScalePolicy:
    """How to shrink payloads that do not fit under the unit norm.

    In ``auto`` mode each scale factor s in (0, 1] is the largest value that
    keeps the sender's payload norm^2 (fixed extras included) at or below
    ``1 - target_vacuum_floor``.  In ``off`` mode inputs are encoded as
    given and an oversize payload raises :class:`NormalizationError`.
    """

    mode: str = "auto"
    target_vacuum_floor: float = 0.25

    def __post_init__(self):
        if self.mode not in ("auto", "off"):
            raise ValueError(f"scale mode must be 'auto' or 'off', got {self.mode!r}")
        if not 0 < self.target_vacuum_floor < 1:
            raise ValueError("target_vacuum_floor must lie in (0, 1)")

    def scale(self, payload_sq: float, extras_sq: float = 0.0, what: str = "payload") -> float:
        if self.mode == "off":
            return 1.0
        budget = 1.0 - self.target_vacuum_floor - extras_sq
        if budget <= 0:
            raise NormalizationError(
                f"fixed amplitudes of {what} (norm^2 {extras_sq:.6g}) exceed the "
                f"budget left by vacuum floor {self.target_vacuum_floor}"
            )
        if payload_sq <= budget:
            return 1.0
        return math.sqrt(budget / payload_sq)


@dataclass(frozen=True)
class Extraction:
    """One coherence element to read: rho[pattern, 0] (stage 'rho') or xi[pattern, 0] (stage 'xi')."""

    label: Hashable
    pattern: MultiIndex
    stage: str = "rho"


@dataclass(frozen=True, eq=False)
class ProtocolPlan:
    operation: str
    layout: SystemLayout
    senders: tuple[SenderState, ...]
    w_spec: PartialUnitarySpec
    extraction: tuple[Extraction, ...]
    decode_constant: complex
    output_shape: tuple[int, ...]
    scale_record: Mapping[str, Any] = field(default_factory=dict)
    constants: Mapping[str, complex] = field(default_factory=dict)
    v_spec: PartialUnitarySpec | None = None

    def __post_init__(self):
        n = self.layout.num_senders
        for ex in self.extraction:
            if ex.pattern.excitations != n:
                raise ValueError(
                    f"extraction pattern {ex.pattern} has {ex.pattern.excitations} "
                    f"excitations, expected {n} (one per sender)"
                )
        if self.decode_constant == 0:
            raise DegenerateDecodeError("decode constant is zero")

    @property
    def num_senders(self) -> int:
        return self.layout.num_senders

    def vacuum_product(self) -> complex:
        out = 1 + 0j
        for s in self.senders:
            out *= s.vacuum_amplitude
        return out


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2 or 0 in arr.shape:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    return arr


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    return arr


def _norm_sq(x: np.ndarray) -> float:
    return float(np.sum(np.abs(x) ** 2))


def _permutation_sign(perm: Sequence[int]) -> int:
    """Sign from the cycle decomposition of ``perm`` (a permutation of 0..len-1)."""
    sign, seen = 1, [False] * len(perm)
    for start in range(len(perm)):
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length and length % 2 == 0:
            sign = -sign
    return sign


def _pattern(size: int, ones: Sequence[int]) -> MultiIndex:
    return MultiIndex.from_positions(size, ones)


# --- matrix-vector product -------------------------------------------------

def plan_matvec(A, v, policy: ScalePolicy = ScalePolicy()) -> ProtocolPlan:
    """A (m x k) times v (k): S1 holds A row by row, S2 holds v as one row."""
    A = _as_matrix(A, "A")
    v = _as_vector(v, "v")
    m, k = A.shape
    if v.size != k:
        raise ValueError(f"A is {m}x{k} but v has length {v.size}")
    s_a = policy.scale(_norm_sq(A), what="A")
    s_v = policy.scale(_norm_sq(v), what="v")

    rows = (tuple([k] * m), (k,))
    layout = SystemLayout(rows, tuple(_last_qubits(rows)))
    s1 = encode_sender(s_a * A)
    s2 = encode_sender([s_v * v])
    theta1 = 1 / math.sqrt(k)
    total = layout.total_qubits

    spec = PartialUnitarySpec(total)
    extraction = []
    for i in range(m):
        pattern = _pattern(m + 1, [i, m])
        entries = {
            _pattern(total, [layout.qubit(0, i, l), layout.qubit(1, 0, l)]): theta1
            for l in range(k)
        }
        spec = add_row_constraint(spec, layout.embed(pattern), entries)
        extraction.append(Extraction(i, pattern))

    alpha = theta1 * s1.vacuum_amplitude.conjugate() * s2.vacuum_amplitude.conjugate()
    return ProtocolPlan(
        "matvec", layout, (s1, s2), spec, tuple(extraction), alpha, (m,),
        scale_record={"A": s_a, "v": s_v},
        constants={"theta1": theta1, "alpha": alpha},
    )


def _last_qubits(rows: tuple[tuple[int, ...], ...]) -> list[int]:
    out, offset = [], 0
    for sender in rows:
        for length in sender:
            offset += length
            out.append(offset - 1)
    return out


# --- matrix-matrix product -------------------------------------------------

def plan_matmul(A, B, policy: ScalePolicy = ScalePolicy()) -> ProtocolPlan:
    """A (m x k) times B (k x n); S2 stores B transposed, one row per column of B."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    m, k = A.shape
    if B.shape[0] != k:
        raise ValueError(f"inner dimensions disagree: A is {A.shape}, B is {B.shape}")
    n = B.shape[1]
    s_a = policy.scale(_norm_sq(A), what="A")
    s_b = policy.scale(_norm_sq(B), what="B")

    rows = (tuple([k] * m), tuple([k] * n))
    layout = SystemLayout(rows, tuple(_last_qubits(rows)))
    s1 = encode_sender(s_a * A)
    s2 = encode_sender(s_b * B.T)
    theta1 = 1 / math.sqrt(k)
    total = layout.total_qubits

    spec = PartialUnitarySpec(total)
    extraction = []
    for i in range(m):
        for j in range(n):
            pattern = _pattern(m + n, [i, m + j])
            entries = {
                _pattern(total, [layout.qubit(0, i, l), layout.qubit(1, j, l)]): theta1
                for l in range(k)
            }
            spec = add_row_constraint(spec, layout.embed(pattern), entries)
            extraction.append(Extraction((i, j), pattern))

    beta = theta1 * s1.vacuum_amplitude.conjugate() * s2.vacuum_amplitude.conjugate()
    return ProtocolPlan(
        "matmul", layout, (s1, s2), spec, tuple(extraction), beta, (m, n),
        scale_record={"A": s_a, "B": s_b},
        constants={"theta1": theta1, "beta": beta},
    )


# --- sum of two matrices ---------------------------------------------------

def plan_matsum(C, D, lam: float = DEFAULT_LAMBDA, policy: ScalePolicy = ScalePolicy()) -> ProtocolPlan:
    """C + D for equal-shape m x n matrices.

    Row 0 of each sender carries an extra column 0 holding ``lam``; matrix
    column j sits in sender column j + 1.  S2 lays its columns out
    right-to-left.  The receiver is S1's last column (one qubit per row)
    followed by S2's last row in column order.
    """
    C = _as_matrix(C, "C")
    D = _as_matrix(D, "D")
    if C.shape != D.shape:
        raise ValueError(f"shapes differ: C is {C.shape}, D is {D.shape}")
    if not (isinstance(lam, (int, float)) and lam > 0):
        raise ValueError(f"lambda must be a positive real, got {lam!r}")
    m, n = C.shape
    lam = float(lam)
    s = min(
        policy.scale(_norm_sq(C), lam**2, what="C with lambda"),
        policy.scale(_norm_sq(D), lam**2, what="D with lambda"),
    )

    row_lengths = tuple([n + 1] + [n] * (m - 1))
    proto = SystemLayout((row_lengths, row_lengths), (), frozenset({1}))

    def col(row: int, c: int) -> int:
        # sender column c (0 = lambda slot) -> index within the row
        return c if row == 0 else c - 1

    receiver = [proto.qubit(0, i, col(i, n)) for i in range(m)]
    receiver += [proto.qubit(1, m - 1, col(m - 1, j + 1)) for j in range(n)]
    layout = SystemLayout((row_lengths, row_lengths), tuple(receiver), frozenset({1}))

    def local(sender: int):
        offset = layout.sender_offset(sender)
        return lambda r, c: layout.qubit(sender, r, col(r, c + 1)) - offset

    size = layout.sender_size(0)
    s1 = encode_sender(s * C, {layout.qubit(0, 0, 0): lam}, num_qubits=size, position=local(0))
    s2 = encode_sender(
        s * D, {layout.qubit(1, 0, 0) - layout.sender_offset(1): lam},
        num_qubits=size, position=local(1),
    )
    theta2 = 1 / math.sqrt(2)
    total = layout.total_qubits
    lam1 = layout.qubit(0, 0, 0)
    lam2 = layout.qubit(1, 0, 0)

    spec = PartialUnitarySpec(total)
    extraction = []
    for i in range(m):
        for j in range(n):
            pattern = _pattern(m + n, [i, m + j])
            entries = {
                _pattern(total, [layout.qubit(0, i, col(i, j + 1)), lam2]): theta2,
                _pattern(total, [lam1, layout.qubit(1, i, col(i, j + 1))]): theta2,
            }
            spec = add_row_constraint(spec, layout.embed(pattern), entries)
            extraction.append(Extraction((i, j), pattern))

    omega = theta2 * s1.vacuum_amplitude.conjugate() * s2.vacuum_amplitude.conjugate()
    return ProtocolPlan(
        "matsum", layout, (s1, s2), spec, tuple(extraction), omega * lam, (m, n),
        scale_record={"C,D": s},
        constants={"theta2": theta2, "omega": omega, "lambda": lam},
    )


# --- determinant -----------------------------------------------------------

def _row_scales(E: np.ndarray, extras_sq: float, policy: ScalePolicy, what: str) -> list[float]:
    return [policy.scale(_norm_sq(row), extras_sq, what=f"{what} row {i}") for i, row in enumerate(E)]


def _square(E, name: str = "E") -> np.ndarray:
    E = _as_matrix(E, name)
    if E.shape[0] != E.shape[1]:
        raise ValueError(f"{name} must be square, got {E.shape}")
    return E


def plan_determinant(E, policy: ScalePolicy = ScalePolicy()) -> ProtocolPlan:
    """det(E): row i of E is sender i; one constrained row at receiver 1...1."""
    E = _square(E)
    n = E.shape[0]
    scales = _row_scales(E, 0.0, policy, "E")
    layout = SystemLayout(tuple((n,) for _ in range(n)), tuple((s + 1) * n - 1 for s in range(n)))
    senders = tuple(encode_sender([scales[i] * E[i]]) for i in range(n))
    theta3 = 1 / math.sqrt(math.factorial(n))
    total = layout.total_qubits

    entries = {
        _pattern(total, [layout.qubit(s, 0, p[s]) for s in range(n)]): _permutation_sign(p) * theta3
        for p in itertools.permutations(range(n))
    }
    pattern = MultiIndex((1,) * n)
    spec = add_row_constraint(PartialUnitarySpec(total), layout.embed(pattern), entries)

    gamma = theta3 * _conj_vacuum_product(senders)
    return ProtocolPlan(
        "det", layout, senders, spec, (Extraction("det", pattern),), gamma, (),
        scale_record={"rows": tuple(scales)},
        constants={"theta3": theta3, "gamma": gamma},
    )


def _conj_vacuum_product(senders: Sequence[SenderState]) -> complex:
    out = 1 + 0j
    for s in senders:
        out *= s.vacuum_amplitude.conjugate()
    return out


# --- inverse ---------------------------------------------------------------

def complement_pattern(n: int, i: int, j: int) -> MultiIndex:
    """Receiver pattern storing the complement of e_ij.

    Receiver bits come in (last column, Aux) pairs per sender: the column bits
    are all 1 except at sender i, the Aux bits all 0 except at sender j.
    """
    bits = []
    for s in range(n):
        bits += [int(s != i), int(s == j)]
    return MultiIndex(tuple(bits))


def determinant_pattern(n: int) -> MultiIndex:
    return MultiIndex((1, 0) * n)


def _inverse_core(E: np.ndarray, sigma: float, scales: Sequence[float]):
    n = E.shape[0]
    layout = SystemLayout(
        tuple((n + 1,) for _ in range(n)),
        tuple(q for s in range(n) for q in ((s + 1) * (n + 1) - 2, (s + 1) * (n + 1) - 1)),
    )
    senders = tuple(encode_sender([scales[i] * E[i]], {n: sigma}) for i in range(n))
    theta3 = 1 / math.sqrt(math.factorial(n))
    theta4 = 1 / math.sqrt(math.factorial(n - 1))
    total = layout.total_qubits

    spec = PartialUnitarySpec(total)
    extraction = []
    for i in range(n):
        others = [s for s in range(n) if s != i]
        for j in range(n):
            cols = [c for c in range(n) if c != j]
            entries = {}
            for p in itertools.permutations(range(n - 1)):
                qubits = [layout.qubit(i, 0, n)]
                qubits += [layout.qubit(s, 0, cols[p[t]]) for t, s in enumerate(others)]
                sign = (-1) ** (i + j) * _permutation_sign(p)
                entries[_pattern(total, qubits)] = sign * theta4
            pattern = complement_pattern(n, i, j)
            spec = add_row_constraint(spec, layout.embed(pattern), entries)
            extraction.append(Extraction((i, j), pattern))

    det_entries = {
        _pattern(total, [layout.qubit(s, 0, p[s]) for s in range(n)]): _permutation_sign(p) * theta3
        for p in itertools.permutations(range(n))
    }
    spec = add_row_constraint(spec, layout.embed(determinant_pattern(n)), det_entries)

    vac = _conj_vacuum_product(senders)
    constants = {
        "theta3": theta3,
        "theta4": theta4,
        "sigma": sigma,
        "mu": theta4 * sigma * vac,
        "gamma_hat": theta3 * vac,
    }
    return layout, senders, spec, extraction, constants


def _check_sigma(sigma) -> float:
    if not (isinstance(sigma, (int, float)) and sigma > 0):
        raise ValueError(f"sigma must be a positive real, got {sigma!r}")
    return float(sigma)


def plan_inverse(E, sigma: float = DEFAULT_SIGMA, policy: ScalePolicy = ScalePolicy()) -> ProtocolPlan:
    """E^-1 through the n^2 complements plus a determinant element.

    Each sender gains an Aux qubit holding ``sigma``; the receiver is the
    last two qubits of every sender.
    """
    E = _square(E)
    sigma = _check_sigma(sigma)
    n = E.shape[0]
    scales = _row_scales(E, sigma**2, policy, "E")
    layout, senders, spec, extraction, constants = _inverse_core(E, sigma, scales)
    extraction.append(Extraction("det", determinant_pattern(n)))
    return ProtocolPlan(
        "inverse", layout, senders, spec, tuple(extraction), constants["mu"], (n, n),
        scale_record={"rows": tuple(scales)},
        constants=constants,
    )


# --- linear system ---------------------------------------------------------

def plan_linsolve(
    E,
    b,
    sigma: float = DEFAULT_SIGMA,
    policy: ScalePolicy = ScalePolicy(),
    *,
    normalize_b: bool = False,
) -> ProtocolPlan:
    """Solve E x = b by applying V (which encodes b) to the inverse protocol's receiver.

    ``b`` must be a unit vector unless ``normalize_b`` is set.  When rows of E
    are rescaled by S, V encodes S b / |S b| and the decoded solution is
    multiplied back by |S b|.
    """
    E = _square(E)
    b = _as_vector(b, "b")
    sigma = _check_sigma(sigma)
    n = E.shape[0]
    if b.size != n:
        raise ValueError(f"E is {n}x{n} but b has length {b.size}")
    b_norm = float(np.linalg.norm(b))
    if abs(b_norm - 1.0) > UNIT_B_TOL:
        if not normalize_b:
            raise ValueError(f"b must be a unit vector, |b| = {b_norm!r}")
        warnings.warn(f"b has norm {b_norm:.6g}; encoding b/|b| and rescaling x", stacklevel=2)
    if b_norm == 0:
        raise ValueError("b is the zero vector")

    scales = _row_scales(E, sigma**2, policy, "E")
    layout, senders, spec, _, constants = _inverse_core(E, sigma, scales)

    sb = np.asarray(scales) * b
    b_factor = float(np.linalg.norm(sb))
    b_enc = sb / b_factor
    r = layout.num_receiver
    v_spec = PartialUnitarySpec(r)
    extraction = [Extraction("det", determinant_pattern(n))]
    for j in range(n):
        row = complement_pattern(n, j, j)
        entries = {complement_pattern(n, i, j): complex(b_enc[i]) for i in range(n)}
        v_spec = add_row_constraint(v_spec, row, entries)
        extraction.append(Extraction(j, row, "xi"))

    denominator = sigma * math.sqrt(n)
    constants = dict(constants, solve_prefactor=denominator)
    return ProtocolPlan(
        "linsolve", layout, senders, spec, tuple(extraction), denominator, (n,),
        scale_record={"rows": tuple(scales), "b": b_factor},
        constants=constants,
        v_spec=v_spec,
    )


# --- decoding --------------------------------------------------------------

def decode(plan: ProtocolPlan, extracted: Mapping[Hashable, complex]):
    """Turn extracted coherence elements into the classical result.

    Returns a complex ndarray of ``plan.output_shape`` (a Python complex for
    the determinant).
    """
    missing = [ex.label for ex in plan.extraction if ex.label not in extracted]
    if missing:
        raise KeyError(f"missing extracted values for labels {missing}")
    if abs(plan.decode_constant) < DECODE_TOL:
        raise DegenerateDecodeError(f"decode constant {plan.decode_constant!r} is numerically zero")
    rec = plan.scale_record
    op = plan.operation
    c = plan.decode_constant

    if op == "matvec":
        m, = plan.output_shape
        raw = np.array([extracted[i] for i in range(m)], dtype=complex)
        return raw / c / (rec["A"] * rec["v"])
    if op in ("matmul", "matsum"):
        m, n = plan.output_shape
        raw = np.array([[extracted[(i, j)] for j in range(n)] for i in range(m)], dtype=complex)
        unscale = rec["A"] * rec["B"] if op == "matmul" else rec["C,D"]
        return raw / c / unscale
    if op == "det":
        return complex(extracted["det"] / c / math.prod(rec["rows"]))

    rho_det = complex(extracted["det"])
    if abs(rho_det) < DECODE_TOL:
        raise SingularMatrixError(
            f"determinant element {rho_det!r} is numerically zero; E is singular"
        )
    n = plan.output_shape[0]
    scales = rec["rows"]
    sigma = plan.constants["sigma"]
    if op == "inverse":
        inv = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                inv[j, i] = extracted[(i, j)] / (sigma * math.sqrt(n) * rho_det) * scales[i]
        return inv
    if op == "linsolve":
        xi = np.array([extracted[j] for j in range(n)], dtype=complex)
        return xi / (c * rho_det) * rec["b"]
    raise ValueError(f"unknown operation {op!r}")


def complements(plan: ProtocolPlan, extracted: Mapping[Hashable, complex]) -> np.ndarray:
    """Complements E_ij = rho_ij / mu of the encoded (scaled) matrix."""
    if plan.operation != "inverse":
        raise ValueError("complements are only stored by the inverse protocol")
    n = plan.output_shape[0]
    mu = plan.constants["mu"]
    return np.array([[extracted[(i, j)] / mu for j in range(n)] for i in range(n)], dtype=complex)


PLANNERS = {
    "matvec": plan_matvec,
    "matmul": plan_matmul,
    "matsum": plan_matsum,
    "det": plan_determinant,
    "inverse": plan_inverse,
    "linsolve": plan_linsolve,
}
