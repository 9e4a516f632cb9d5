"""Qubit ordering, multi-indices, excitation sectors and sender states.

Conventions used throughout the package:

* qubit 0 is the leftmost, most significant bit of a multi-index;
* an excitation sector lists every bitstring with a fixed number of ones,
  sorted ascending by binary value;
* senders occupy contiguous blocks of global qubits, sender-major, then
  row-major, then column ascending (a sender may be flagged as laid out
  right-to-left inside each row).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import NormalizationError

NORM_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class MultiIndex:
    """Classical bitstring labelling a computational basis state."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"multi-index bits must be 0/1, got {self.bits}")

    @classmethod
    def from_string(cls, text: str) -> MultiIndex:
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_positions(cls, num_qubits: int, positions: Iterable[int]) -> MultiIndex:
        bits = [0] * num_qubits
        for p in positions:
            if not 0 <= p < num_qubits:
                raise ValueError(f"qubit position {p} outside [0, {num_qubits})")
            if bits[p]:
                raise ValueError(f"qubit position {p} listed twice")
            bits[p] = 1
        return cls(tuple(bits))

    @classmethod
    def from_value(cls, value: int, num_qubits: int) -> MultiIndex:
        return cls(tuple((value >> (num_qubits - 1 - q)) & 1 for q in range(num_qubits)))

    @classmethod
    def zeros(cls, num_qubits: int) -> MultiIndex:
        return cls((0,) * num_qubits)

    @property
    def num_qubits(self) -> int:
        return len(self.bits)

    @property
    def excitations(self) -> int:
        return sum(self.bits)

    @property
    def value(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def positions(self) -> tuple[int, ...]:
        return tuple(q for q, b in enumerate(self.bits) if b)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def excitation_count(index: MultiIndex) -> int:
    return index.excitations


@lru_cache(maxsize=None)
def _sector_values(num_qubits: int, excitations: int) -> tuple[int, ...]:
    values = []
    for ones in itertools.combinations(range(num_qubits), excitations):
        values.append(sum(1 << (num_qubits - 1 - q) for q in ones))
    return tuple(sorted(values))


def enumerate_sector(num_qubits: int, excitations: int) -> list[MultiIndex]:
    """All bitstrings of ``num_qubits`` bits with ``excitations`` ones, ascending."""
    if num_qubits < 0 or not 0 <= excitations <= num_qubits:
        raise ValueError(
            f"excitations must lie in [0, {num_qubits}], got {excitations}"
        )
    return [MultiIndex.from_value(v, num_qubits) for v in _sector_values(num_qubits, excitations)]


def sector_values(num_qubits: int, excitations: int) -> np.ndarray:
    """Integer basis labels of a sector, in the order of :func:`enumerate_sector`."""
    if not 0 <= excitations <= num_qubits:
        raise ValueError(
            f"excitations must lie in [0, {num_qubits}], got {excitations}"
        )
    return np.fromiter(_sector_values(num_qubits, excitations), dtype=np.int64)


def sector_rank(index: MultiIndex) -> int:
    """Position of ``index`` inside its own excitation sector.

    Uses the combinatorial number system: with the ones sitting at
    bit weights c_1 < c_2 < ... < c_k (weight 0 = rightmost qubit), the
    rank among ascending k-subsets is sum_t C(c_t, t).
    """
    n = index.num_qubits
    weights = sorted(n - 1 - q for q in index.positions())
    return sum(math.comb(c, t) for t, c in enumerate(weights, start=1))


@dataclass(frozen=True)
class SystemLayout:
    """Placement of every sender row on the global qubit line.

    ``rows[s]`` holds the row lengths of sender ``s``.  ``receiver_qubits``
    lists global positions in receiver order: bit ``k`` of a receiver
    multi-index refers to ``receiver_qubits[k]``.  Senders in
    ``reversed_senders`` have each row's columns laid out right-to-left.
    """

    rows: tuple[tuple[int, ...], ...]
    receiver_qubits: tuple[int, ...]
    reversed_senders: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        total = self.total_qubits
        if len(set(self.receiver_qubits)) != len(self.receiver_qubits):
            raise ValueError("receiver qubits must be distinct")
        for q in self.receiver_qubits:
            if not 0 <= q < total:
                raise ValueError(f"receiver qubit {q} outside [0, {total})")

    @property
    def num_senders(self) -> int:
        return len(self.rows)

    @property
    def total_qubits(self) -> int:
        return sum(sum(r) for r in self.rows)

    @property
    def num_receiver(self) -> int:
        return len(self.receiver_qubits)

    def sender_size(self, sender: int) -> int:
        return sum(self.rows[sender])

    def sender_offset(self, sender: int) -> int:
        return sum(sum(r) for r in self.rows[:sender])

    def qubit(self, sender: int, row: int, col: int) -> int:
        """Global position of the qubit at (row, col) of a sender, 0-based."""
        lengths = self.rows[sender]
        if not 0 <= col < lengths[row]:
            raise IndexError(f"column {col} outside row of length {lengths[row]}")
        if sender in self.reversed_senders:
            col = lengths[row] - 1 - col
        return self.sender_offset(sender) + sum(lengths[:row]) + col

    def embed(self, receiver_pattern: MultiIndex) -> MultiIndex:
        """Global multi-index with the receiver set to a pattern, all else 0."""
        if receiver_pattern.num_qubits != self.num_receiver:
            raise ValueError("receiver pattern length does not match the layout")
        bits = [0] * self.total_qubits
        for k, b in enumerate(receiver_pattern.bits):
            bits[self.receiver_qubits[k]] = b
        return MultiIndex(tuple(bits))

    def receiver_part(self, index: MultiIndex) -> MultiIndex:
        return MultiIndex(tuple(index.bits[q] for q in self.receiver_qubits))

    def rest_is_vacuum(self, index: MultiIndex) -> bool:
        receiver = set(self.receiver_qubits)
        return all(b == 0 for q, b in enumerate(index.bits) if q not in receiver)


@dataclass(frozen=True)
class SenderState:
    """Single-excitation pure state of one sender (local qubit indexing)."""

    num_qubits: int
    amplitudes: Mapping[MultiIndex, complex]
    vacuum_amplitude: complex

    def __post_init__(self):
        for key in self.amplitudes:
            if key.num_qubits != self.num_qubits or key.excitations != 1:
                raise ValueError(f"sender keys must be single excitations, got {key}")
        if abs(self.vacuum_amplitude) == 0:
            raise NormalizationError("vacuum amplitude must be nonzero")
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise NormalizationError(f"sender state has norm {self.norm()!r}")

    def norm(self) -> float:
        total = abs(self.vacuum_amplitude) ** 2
        total += sum(abs(a) ** 2 for a in self.amplitudes.values())
        return math.sqrt(total)

    def support(self) -> list[tuple[MultiIndex, complex]]:
        """Vacuum first, then excited keys in qubit order."""
        items = [(MultiIndex.zeros(self.num_qubits), complex(self.vacuum_amplitude))]
        items.extend(sorted(self.amplitudes.items(), key=lambda kv: kv[0].positions()))
        return items

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(2**self.num_qubits, dtype=complex)
        for key, amp in self.support():
            vec[key.value] = amp
        return vec


def encode_sender(
    rows: Sequence[Sequence[complex]],
    extras: Mapping[int, complex] | None = None,
    *,
    num_qubits: int | None = None,
    position: Callable[[int, int], int] | None = None,
) -> SenderState:
    """Encode matrix rows (plus extra amplitudes) as a single-excitation state.

    Entry ``rows[r][c]`` goes to local qubit ``position(r, c)``; by default the
    rows are concatenated left to right.  ``extras`` maps further local qubit
    positions to amplitudes (the sum protocol's lambda, the inverse protocol's
    sigma).  The vacuum amplitude is the positive square root of the residual
    norm and must exceed ``NORM_TOL``.
    """
    extras = dict(extras or {})
    lengths = [len(r) for r in rows]
    if position is None:
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(int)

        def position(r, c):
            return int(offsets[r]) + c

    if num_qubits is None:
        num_qubits = sum(lengths) + len(extras)

    placed: dict[int, complex] = {}
    for r, row in enumerate(rows):
        for c, value in enumerate(row):
            placed[_claim(placed, position(r, c), num_qubits)] = complex(value)
    for q, value in extras.items():
        placed[_claim(placed, q, num_qubits)] = complex(value)

    payload = math.fsum(abs(v) ** 2 for v in placed.values())
    residual = 1.0 - payload
    if residual <= NORM_TOL:
        raise NormalizationError(
            f"payload norm^2 {payload:.6g} leaves no room for the vacuum amplitude; "
            "rescale the input (payload norm^2 must stay below 1)"
        )
    amplitudes = {
        MultiIndex.from_positions(num_qubits, [q]): v for q, v in placed.items() if v != 0
    }
    return SenderState(num_qubits, amplitudes, complex(math.sqrt(residual)))


def _claim(placed: dict[int, complex], q: int, num_qubits: int) -> int:
    if not 0 <= q < num_qubits:
        raise ValueError(f"local qubit {q} outside [0, {num_qubits})")
    if q in placed:
        raise ValueError(f"local qubit {q} assigned twice")
    return q


@dataclass(frozen=True)
class JointState:
    """Sparse pure state over all qubits of a layout."""

    num_qubits: int
    amplitudes: Mapping[MultiIndex, complex]

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(a) ** 2 for a in self.amplitudes.values()))

    def get(self, key: MultiIndex) -> complex:
        return self.amplitudes.get(key, 0j)

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(2**self.num_qubits, dtype=complex)
        for key, amp in self.amplitudes.items():
            vec[key.value] = amp
        return vec


def tensor_product(states: Sequence[SenderState], layout: SystemLayout) -> JointState:
    """Sparse Kronecker product of sender states placed on the layout."""
    if len(states) != layout.num_senders:
        raise ValueError(
            f"layout has {layout.num_senders} senders, got {len(states)} states"
        )
    for s, state in enumerate(states):
        if state.num_qubits != layout.sender_size(s):
            raise ValueError(
                f"sender {s} has {state.num_qubits} qubits, layout expects "
                f"{layout.sender_size(s)}"
            )
    amplitudes: dict[MultiIndex, complex] = {}
    for combo in itertools.product(*(st.support() for st in states)):
        bits: tuple[int, ...] = ()
        amp = 1 + 0j
        for key, a in combo:
            bits += key.bits
            amp *= a
        amplitudes[MultiIndex(bits)] = amp
    return JointState(layout.total_qubits, amplitudes)
