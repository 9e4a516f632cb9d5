"""Classical reference implementations used as ground truth.

Deliberately plain: explicit loops, no shared code with the protocol
builders (permutation parity here is counted by inversions).
"""
from __future__ import annotations

import itertools

import numpy as np

from .errors import SingularMatrixError

LEIBNIZ_MAX_N = 8
ADJUGATE_MAX_N = 4
SINGULAR_TOL = 1e-12


def _matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def _vector(x) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim == 2 and 1 in a.shape:
        a = a.reshape(-1)
    if a.ndim != 1:
        raise ValueError(f"expected a vector, got shape {a.shape}")
    return a


def matmul_ref(A, B) -> np.ndarray:
    A, B = _matrix(A), _matrix(B)
    m, k = A.shape
    if B.shape[0] != k:
        raise ValueError(f"shape mismatch: {A.shape} x {B.shape}")
    n = B.shape[1]
    out = np.zeros((m, n), dtype=complex)
    for i in range(m):
        for j in range(n):
            s = 0j
            for l in range(k):
                s += A[i, l] * B[l, j]
            out[i, j] = s
    return out


def matvec_ref(A, v) -> np.ndarray:
    v = _vector(v)
    return matmul_ref(A, v.reshape(-1, 1)).reshape(-1)


def sum_ref(C, D) -> np.ndarray:
    C, D = _matrix(C), _matrix(D)
    if C.shape != D.shape:
        raise ValueError(f"shape mismatch: {C.shape} + {D.shape}")
    out = np.zeros(C.shape, dtype=complex)
    for i in range(C.shape[0]):
        for j in range(C.shape[1]):
            out[i, j] = C[i, j] + D[i, j]
    return out


def inversion_parity(perm) -> int:
    """+1 for an even number of inversions, -1 for odd."""
    inversions = sum(
        1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b]
    )
    return -1 if inversions % 2 else 1


def _square(E) -> np.ndarray:
    E = _matrix(E)
    if E.shape[0] != E.shape[1]:
        raise ValueError(f"matrix must be square, got {E.shape}")
    return E


def det_leibniz(E) -> complex:
    E = _square(E)
    n = E.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = complex(inversion_parity(perm))
        for row, col in enumerate(perm):
            term *= E[row, col]
        total += term
    return total


def det_lu(E) -> complex:
    """Determinant by Gaussian elimination with partial pivoting."""
    a = _square(E).copy()
    n = a.shape[0]
    det = 1 + 0j
    for c in range(n):
        p = c + int(np.argmax(np.abs(a[c:, c])))
        if a[p, c] == 0:
            return 0j
        if p != c:
            a[[c, p]] = a[[p, c]]
            det = -det
        det *= a[c, c]
        for r in range(c + 1, n):
            a[r, c:] -= (a[r, c] / a[c, c]) * a[c, c:]
    return complex(det)


def det_ref(E) -> complex:
    E = _square(E)
    return det_leibniz(E) if E.shape[0] <= LEIBNIZ_MAX_N else det_lu(E)


def _minor(E: np.ndarray, i: int, j: int) -> np.ndarray:
    keep_r = [r for r in range(E.shape[0]) if r != i]
    keep_c = [c for c in range(E.shape[1]) if c != j]
    return E[np.ix_(keep_r, keep_c)]


def cofactor_ref(E) -> np.ndarray:
    """Matrix of signed complements C[i, j] = (-1)^(i+j) det(minor(i, j))."""
    E = _square(E)
    n = E.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    return np.array(
        [[(-1) ** (i + j) * det_ref(_minor(E, i, j)) for j in range(n)] for i in range(n)],
        dtype=complex,
    )


def _gauss_jordan(E: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    a = np.concatenate([E.astype(complex), rhs.astype(complex)], axis=1)
    n = E.shape[0]
    for c in range(n):
        p = c + int(np.argmax(np.abs(a[c:, c])))
        if abs(a[p, c]) < SINGULAR_TOL:
            raise SingularMatrixError("matrix is singular to working precision")
        a[[c, p]] = a[[p, c]]
        a[c] /= a[c, c]
        for r in range(n):
            if r != c:
                a[r] -= a[r, c] * a[c]
    return a[:, n:]


def inv_ref(E) -> np.ndarray:
    E = _square(E)
    n = E.shape[0]
    if n <= ADJUGATE_MAX_N:
        d = det_ref(E)
        if abs(d) < SINGULAR_TOL:
            raise SingularMatrixError(f"determinant {d!r} is numerically zero")
        return cofactor_ref(E).T / d
    return _gauss_jordan(E, np.eye(n))


def solve_ref(E, b) -> np.ndarray:
    E = _square(E)
    b = _vector(b)
    if b.size != E.shape[0]:
        raise ValueError(f"E is {E.shape}, b has length {b.size}")
    if E.shape[0] <= ADJUGATE_MAX_N:
        return matvec_ref(inv_ref(E), b)
    return _gauss_jordan(E, b.reshape(-1, 1)).reshape(-1)


REFERENCES = {
    "matvec": matvec_ref,
    "matmul": matmul_ref,
    "matsum": sum_ref,
    "det": det_ref,
    "inverse": inv_ref,
    "linsolve": solve_ref,
}
