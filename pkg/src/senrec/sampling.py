"""Seeded random instances for self-tests and sweeps."""
from __future__ import annotations

import numpy as np

from .protocols import DEFAULT_SIGMA, ScalePolicy

DET_GUARD = 1e-3


def complex_matrix(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)


def unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    b = complex_matrix(rng, n)
    return b / np.linalg.norm(b)


def scaled_rows(E: np.ndarray, extras_sq: float, policy: ScalePolicy) -> np.ndarray:
    scales = [policy.scale(float(np.sum(np.abs(r) ** 2)), extras_sq) for r in E]
    return np.asarray(scales)[:, None] * E


def well_conditioned_square(
    rng: np.random.Generator,
    n: int,
    extras_sq: float = 0.0,
    policy: ScalePolicy = ScalePolicy(),
    guard: float = DET_GUARD,
) -> np.ndarray:
    """Random complex n x n matrix whose row-scaled determinant is at least ``guard``."""
    while True:
        E = complex_matrix(rng, n, n)
        if abs(np.linalg.det(scaled_rows(E, extras_sq, policy))) >= guard:
            return E


def random_instance(op: str, rng: np.random.Generator, size: dict[str, int], lam: float = 0.3,
                    sigma: float = DEFAULT_SIGMA) -> tuple:
    """Positional planner arguments for ``op`` with the given dimensions."""
    if op == "matvec":
        return complex_matrix(rng, size["m"], size["k"]), complex_matrix(rng, size["k"])
    if op == "matmul":
        return complex_matrix(rng, size["m"], size["k"]), complex_matrix(rng, size["k"], size["n"])
    if op == "matsum":
        return complex_matrix(rng, size["m"], size["n"]), complex_matrix(rng, size["m"], size["n"]), lam
    if op == "det":
        return (well_conditioned_square(rng, size["n"]),)
    if op == "inverse":
        return well_conditioned_square(rng, size["n"], sigma**2), sigma
    if op == "linsolve":
        return well_conditioned_square(rng, size["n"], sigma**2), unit_vector(rng, size["n"]), sigma
    raise ValueError(f"unknown operation {op!r}")


def random_size(op: str, rng: np.random.Generator, limit: int) -> dict[str, int]:
    def pick():
        return int(rng.integers(1, limit + 1))

    if op == "matvec":
        return {"m": pick(), "k": pick()}
    if op == "matmul":
        return {"m": pick(), "k": pick(), "n": pick()}
    if op == "matsum":
        return {"m": pick(), "n": pick()}
    return {"n": pick()}


def oracle_arguments(op: str, args: tuple) -> tuple:
    """Drop the protocol-only parameters (lambda, sigma) from planner arguments."""
    return {"matsum": args[:2], "inverse": args[:1], "linsolve": args[:2]}.get(op, args)
