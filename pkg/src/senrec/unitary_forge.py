"""Partially specified excitation-preserving unitaries and their completion.

A protocol only fixes a handful of rows of W (or V).  Each fixed row is a
complete unit row inside one excitation sector: columns not listed are
exactly zero.  Every other row is filled in by a deterministic modified
Gram-Schmidt pass over the sector's standard basis, so the operator is
block diagonal in the excitation number by construction.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstraintConflictError, ValidationError
from .excitation_space import JointState, MultiIndex, enumerate_sector, sector_rank, sector_values

VALIDATION_TOL = 1e-10
UNITARITY_TOL = 1e-12
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RowConstraint:
    row: MultiIndex
    entries: tuple[tuple[MultiIndex, complex], ...]

    @property
    def sector(self) -> int:
        return self.row.excitations

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(v) ** 2 for _, v in self.entries))


@dataclass(frozen=True)
class PartialUnitarySpec:
    """Fixed rows of an excitation-preserving unitary on ``total_qubits`` qubits.

    The zero-excitation block is always the scalar 1.  Instances are
    immutable and hashable, so completions can be cached per spec.
    """

    total_qubits: int
    constraints: tuple[RowConstraint, ...] = ()
    zero_sector_fixed: bool = True

    def rows(self) -> set[MultiIndex]:
        return {c.row for c in self.constraints}

    def sectors(self) -> list[int]:
        return sorted({c.sector for c in self.constraints})

    def in_sector(self, sector: int) -> list[RowConstraint]:
        return [c for c in self.constraints if c.sector == sector]


def add_row_constraint(
    spec: PartialUnitarySpec,
    row: MultiIndex,
    entries: Mapping[MultiIndex, complex] | Iterable[tuple[MultiIndex, complex]],
) -> PartialUnitarySpec:
    """Return a new spec with ``row`` fixed to ``entries`` (zero elsewhere)."""
    items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
    if row.num_qubits != spec.total_qubits:
        raise ValueError(f"row {row} does not span {spec.total_qubits} qubits")
    if row in spec.rows():
        raise ConstraintConflictError(f"row {row} is already constrained")
    if row.excitations == 0 and spec.zero_sector_fixed:
        raise ConstraintConflictError("the zero-excitation block is fixed to 1")
    seen = set()
    for col, _ in items:
        if col.num_qubits != spec.total_qubits:
            raise ValueError(f"column {col} does not span {spec.total_qubits} qubits")
        if col.excitations != row.excitations:
            raise ValueError(
                f"column {col} has {col.excitations} excitations, row {row} has "
                f"{row.excitations}; W must conserve the excitation number"
            )
        if col in seen:
            raise ValueError(f"column {col} listed twice in row {row}")
        seen.add(col)
    frozen = tuple(sorted(((c, complex(v)) for c, v in items), key=lambda cv: cv[0].value))
    constraint = RowConstraint(row, frozen)
    return PartialUnitarySpec(spec.total_qubits, spec.constraints + (constraint,), spec.zero_sector_fixed)


@dataclass
class SectorReport:
    sector: int
    row_norms: list[float]
    max_overlap: float

    def passed(self, tol: float = VALIDATION_TOL) -> bool:
        return all(abs(n - 1.0) <= tol for n in self.row_norms) and self.max_overlap <= tol


@dataclass
class ValidationReport:
    sectors: dict[int, SectorReport] = field(default_factory=dict)
    duplicate_rows: list[MultiIndex] = field(default_factory=list)
    tol: float = VALIDATION_TOL

    @property
    def passed(self) -> bool:
        return not self.duplicate_rows and all(r.passed(self.tol) for r in self.sectors.values())

    def summary(self) -> str:
        lines = []
        for d, rep in sorted(self.sectors.items()):
            worst = max((abs(n - 1.0) for n in rep.row_norms), default=0.0)
            lines.append(
                f"sector {d}: {len(rep.row_norms)} rows, max |norm-1| {worst:.3e}, "
                f"max overlap {rep.max_overlap:.3e}"
            )
        if self.duplicate_rows:
            lines.append("duplicate rows: " + ", ".join(map(str, self.duplicate_rows)))
        return "\n".join(lines)


def _sparse_inner(a: Sequence[tuple[MultiIndex, complex]], b: Sequence[tuple[MultiIndex, complex]]) -> complex:
    lookup = dict(b)
    return sum((v.conjugate() * lookup[c] for c, v in a if c in lookup), 0j)


def validate(spec: PartialUnitarySpec, tol: float = VALIDATION_TOL) -> ValidationReport:
    """Check that the fixed rows are unit vectors and mutually orthogonal."""
    report = ValidationReport(tol=tol)
    counts: dict[MultiIndex, int] = defaultdict(int)
    for c in spec.constraints:
        counts[c.row] += 1
    report.duplicate_rows = sorted((r for r, k in counts.items() if k > 1), key=lambda r: r.value)
    for d in spec.sectors():
        rows = spec.in_sector(d)
        overlap = 0.0
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                overlap = max(overlap, abs(_sparse_inner(rows[i].entries, rows[j].entries)))
        report.sectors[d] = SectorReport(d, [r.norm() for r in rows], overlap)
    return report


@lru_cache(maxsize=1024)
def _require_valid(spec: PartialUnitarySpec) -> None:
    report = validate(spec)
    if not report.passed:
        raise ValidationError("constrained rows are not orthonormal:\n" + report.summary())


def complete_sector(
    spec: PartialUnitarySpec,
    sector: int,
    candidate_order: Sequence[int] | None = None,
) -> np.ndarray:
    """Dense unitary block for one sector, rows/columns in enumeration order.

    Constrained rows are copied verbatim.  The free rows come from modified
    Gram-Schmidt (with one re-orthogonalization sweep) over standard basis
    candidates, taken in enumeration order unless ``candidate_order`` gives a
    permutation of the sector positions; candidates whose residual norm
    drops below ``RESIDUAL_TOL`` are skipped.  Accepted vectors fill the
    unconstrained rows in enumeration order.  The returned array is shared
    between callers and is read-only.
    """
    order = None if candidate_order is None else tuple(int(i) for i in candidate_order)
    return _complete_sector_cached(spec, sector, order)


@lru_cache(maxsize=256)
def _complete_sector_cached(spec: PartialUnitarySpec, sector: int, order: tuple[int, ...] | None) -> np.ndarray:
    _require_valid(spec)
    n = spec.total_qubits
    if not 0 <= sector <= n:
        raise ValueError(f"sector {sector} outside [0, {n}]")
    dim = math.comb(n, sector)
    if order is None:
        order = tuple(range(dim))
    elif sorted(order) != list(range(dim)):
        raise ValueError("candidate_order must be a permutation of the sector positions")

    block = np.zeros((dim, dim), dtype=complex)
    fixed = np.zeros(dim, dtype=bool)
    for c in spec.in_sector(sector):
        r = sector_rank(c.row)
        for col, value in c.entries:
            block[r, sector_rank(col)] = value
        fixed[r] = True

    basis = [block[r] for r in np.flatnonzero(fixed)]
    free_rows = list(np.flatnonzero(~fixed))
    accepted = []
    for k in order:
        if len(accepted) == len(free_rows):
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for _ in range(2):
            for q in basis:
                v -= np.vdot(q, v) * q
        norm = np.linalg.norm(v)
        if norm < RESIDUAL_TOL:
            continue
        v /= norm
        basis.append(v)
        accepted.append(v)
    if len(accepted) != len(free_rows):
        raise ValidationError(f"sector {sector}: completion found only {len(accepted)} of {len(free_rows)} rows")
    for r, v in zip(free_rows, accepted):
        block[r] = v
    block.setflags(write=False)
    return block


def unitarity_error(block: np.ndarray) -> float:
    """max |W^dagger W - I| over all entries."""
    return float(np.abs(block.conj().T @ block - np.eye(block.shape[0])).max(initial=0.0))


@dataclass
class BlockUnitary:
    """Sector blocks of an excitation-preserving operator.

    Sectors without an explicit block act as the identity.
    """

    total_qubits: int
    blocks: dict[int, np.ndarray] = field(default_factory=dict)

    def block(self, sector: int) -> np.ndarray:
        if sector in self.blocks:
            return self.blocks[sector]
        return np.eye(math.comb(self.total_qubits, sector), dtype=complex)

    def apply(self, vector: np.ndarray) -> np.ndarray:
        out = np.array(vector, dtype=complex, copy=True)
        for d, blk in self.blocks.items():
            idx = sector_values(self.total_qubits, d)
            out[idx] = blk @ vector[idx]
        return out

    def to_dense(self) -> np.ndarray:
        full = np.eye(2**self.total_qubits, dtype=complex)
        for d, blk in self.blocks.items():
            idx = sector_values(self.total_qubits, d)
            full[np.ix_(idx, idx)] = blk
        return full

    def max_unitarity_error(self) -> float:
        return max((unitarity_error(b) for b in self.blocks.values()), default=0.0)


def complete(
    spec: PartialUnitarySpec,
    *,
    overrides: Mapping[int, np.ndarray] | None = None,
    completion_seed: int | None = None,
) -> BlockUnitary:
    """Complete every constrained sector of ``spec``.

    ``overrides`` replaces whole sector blocks (for instance a hand-written
    block taken from a worked example); ``completion_seed`` shuffles the
    Gram-Schmidt candidate order, which must not change any quantity read
    from constrained rows.
    """
    overrides = dict(overrides or {})
    blocks: dict[int, np.ndarray] = {}
    rng = None if completion_seed is None else np.random.default_rng(completion_seed)
    for d in spec.sectors():
        if d in overrides:
            continue
        order = None
        if rng is not None:
            order = rng.permutation(math.comb(spec.total_qubits, d))
        blocks[d] = complete_sector(spec, d, order)
    for d, blk in overrides.items():
        blk = np.asarray(blk, dtype=complex)
        expected = math.comb(spec.total_qubits, d)
        if blk.shape != (expected, expected):
            raise ValueError(f"override for sector {d} must be {expected}x{expected}")
        blocks[d] = blk
    return BlockUnitary(spec.total_qubits, blocks)


def apply_constrained_rows(spec: PartialUnitarySpec, state: JointState) -> dict[MultiIndex, complex]:
    """Amplitudes of W|psi> at the constrained rows, without completing W."""
    _require_valid(spec)
    return {
        c.row: sum((v * state.get(col) for col, v in c.entries), 0j)
        for c in spec.constraints
    }


def block_to_json(block: np.ndarray, total_qubits: int, sector: int) -> str:
    """Debug dump of a sector block as a row-major [re, im] matrix."""
    block = np.asarray(block)
    doc = {
        "rows": int(block.shape[0]),
        "cols": int(block.shape[1]),
        "basis": [str(m) for m in enumerate_sector(total_qubits, sector)],
        "ordering": "rows and columns follow the sector basis, ascending binary value, qubit 0 leftmost",
        "data": [[float(z.real), float(z.imag)] for z in block.reshape(-1)],
    }
    return json.dumps(doc, indent=1)
