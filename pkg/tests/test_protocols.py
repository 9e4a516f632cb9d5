import math
import warnings

import numpy as np
import pytest

from senrec import oracle
from senrec.errors import DegenerateDecodeError, NormalizationError, SingularMatrixError
from senrec.evolution import run
from senrec.excitation_space import MultiIndex
from senrec.protocols import (
    PLANNERS,
    ScalePolicy,
    complement_pattern,
    complements,
    decode,
    determinant_pattern,
    plan_determinant,
    plan_inverse,
    plan_linsolve,
    plan_matmul,
    plan_matsum,
    plan_matvec,
)
from senrec.sampling import complex_matrix, oracle_arguments, random_instance, unit_vector
from senrec.unitary_forge import validate

import worked_examples as worked

OFF = ScalePolicy("off")


def values(plan, engine="sector"):
    return run(plan, engine).values()


def solve(plan, engine="sector"):
    return decode(plan, values(plan, engine))


class TestMatvec:
    def test_layout_and_patterns(self):
        plan = plan_matvec(np.full((2, 3), 0.1), np.full(3, 0.1))
        assert plan.layout.receiver_qubits == (2, 5, 8)
        assert [str(e.pattern) for e in plan.extraction] == ["101", "011"]

    def test_decode_is_product(self, rng):
        A, v = 0.2 * complex_matrix(rng, 2, 3), 0.2 * complex_matrix(rng, 3)
        plan = plan_matvec(A, v)
        raw = np.array([values(plan)[i] for i in range(2)])
        np.testing.assert_allclose(raw / plan.decode_constant, oracle.matvec_ref(A, v), atol=1e-14)

    def test_zero_vector(self, rng):
        plan = plan_matvec(0.2 * complex_matrix(rng, 2, 3), np.zeros(3))
        assert plan.senders[1].vacuum_amplitude == 1
        assert all(v == 0 for v in values(plan).values())
        np.testing.assert_array_equal(solve(plan), np.zeros(2))

    def test_random_scaled(self, rng):
        for _ in range(10):
            A, v = complex_matrix(rng, 2, 3), complex_matrix(rng, 3)
            assert np.abs(solve(plan_matvec(A, v)) - oracle.matvec_ref(A, v)).max() <= 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            plan_matvec(np.ones((2, 3)), np.ones(2))

    def test_off_policy_requires_rescale(self):
        with pytest.raises(NormalizationError):
            plan_matvec(np.ones((2, 2)), np.full(2, 0.1), OFF)


class TestMatmul:
    def test_column_vector_matches_matvec(self, rng):
        A, v = complex_matrix(rng, 3, 2), complex_matrix(rng, 2)
        mm, mv = plan_matmul(A, v.reshape(2, 1)), plan_matvec(A, v)
        assert mm.layout == mv.layout
        assert mm.w_spec == mv.w_spec
        np.testing.assert_allclose(solve(mm)[:, 0], solve(mv), atol=1e-14)

    def test_diagonal(self):
        A, B = np.diag([0.3, -0.2j]), np.diag([0.5, 0.4])
        out = solve(plan_matmul(A, B))
        np.testing.assert_allclose(out, np.diag([0.15, -0.08j]), atol=1e-15)

    def test_random(self, rng):
        for _ in range(10):
            A, B = complex_matrix(rng, 2, 2), complex_matrix(rng, 2, 2)
            assert np.abs(solve(plan_matmul(A, B)) - oracle.matmul_ref(A, B)).max() <= 1e-10

    def test_transpose_encoding(self):
        B = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]) * 0.5
        plan = plan_matmul(np.full((1, 2), 0.1), B)
        s2 = plan.senders[1]
        # sender row j holds column j of B
        assert s2.amplitudes[MultiIndex.from_positions(6, [1])] == B[1, 0]
        assert s2.amplitudes[MultiIndex.from_positions(6, [2])] == B[0, 1]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            plan_matmul(np.ones((2, 3)), np.ones((2, 3)))


class TestMatsum:
    def test_layout(self):
        plan = plan_matsum(np.full((2, 2), 0.1), np.full((2, 2), 0.1))
        assert plan.layout.rows == ((3, 2), (3, 2))
        assert plan.layout.receiver_qubits == (2, 4, 9, 8)
        s1, s2 = plan.senders
        assert s1.amplitudes[MultiIndex.from_positions(5, [0])] == 0.5
        assert s2.amplitudes[MultiIndex.from_positions(5, [2])] == 0.5

    def test_zero_d(self, rng):
        C = 0.3 * complex_matrix(rng, 2, 3)
        np.testing.assert_allclose(solve(plan_matsum(C, np.zeros((2, 3)))), C, atol=1e-15)

    def test_cancellation(self, rng):
        C = 0.3 * complex_matrix(rng, 3, 2)
        assert np.abs(solve(plan_matsum(C, -C))).max() <= 1e-15

    def test_random(self, rng):
        for _ in range(10):
            C, D = complex_matrix(rng, 2, 2), complex_matrix(rng, 2, 2)
            assert np.abs(solve(plan_matsum(C, D, 0.3)) - oracle.sum_ref(C, D)).max() <= 1e-10

    def test_decode_constant(self):
        plan = plan_matsum(np.full((1, 1), 0.2), np.full((1, 1), 0.3), 0.4)
        c00 = math.sqrt(1 - 0.04 - 0.16)
        d00 = math.sqrt(1 - 0.09 - 0.16)
        assert plan.decode_constant == pytest.approx(c00 * d00 * 0.4 / math.sqrt(2), abs=1e-15)

    def test_lambda_too_large(self):
        with pytest.raises(NormalizationError):
            plan_matsum(np.full((1, 1), 0.1), np.full((1, 1), 0.1), 0.9)
        with pytest.raises(ValueError):
            plan_matsum(np.full((1, 1), 0.1), np.full((1, 1), 0.1), -0.1)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            plan_matsum(np.ones((2, 2)), np.ones((2, 3)))


class TestDeterminant:
    def test_worked_example(self):
        plan = plan_determinant(worked.E)
        assert [s.vacuum_amplitude for s in plan.senders] == [pytest.approx(math.sqrt(6) / 4)] * 2
        assert plan.decode_constant == pytest.approx(3 * math.sqrt(2) / 16, abs=1e-15)
        extracted = values(plan)["det"]
        assert extracted == pytest.approx(3 * math.sqrt(2) / 32, abs=1e-15)
        assert decode(plan, {"det": extracted}) == pytest.approx(0.5, abs=1e-15)

    def test_equal_rows(self):
        assert abs(solve(plan_determinant([[0.3, 0.4j], [0.3, 0.4j]]))) <= 1e-16

    def test_random_3x3(self, rng):
        for _ in range(10):
            E = complex_matrix(rng, 3, 3)
            assert abs(solve(plan_determinant(E)) - oracle.det_leibniz(E)) <= 1e-9

    def test_row_swap_negates(self, rng):
        for _ in range(10):
            E = complex_matrix(rng, 3, 3)
            assert abs(solve(plan_determinant(E[[1, 0, 2]])) + solve(plan_determinant(E))) <= 1e-10

    def test_off_policy(self):
        with pytest.raises(NormalizationError):
            plan_determinant([[1.0, 0.0], [0.0, 0.5]], OFF)

    def test_one_by_one(self):
        assert solve(plan_determinant([[0.3 - 0.1j]])) == pytest.approx(0.3 - 0.1j, abs=1e-15)


class TestInverse:
    def test_worked_constants(self):
        plan = plan_inverse(worked.E, worked.SIGMA)
        assert [s.vacuum_amplitude for s in plan.senders] == [pytest.approx(0.5)] * 2
        mu = 1 / (8 * math.sqrt(2))
        assert plan.constants["mu"] == pytest.approx(mu, abs=1e-15)
        assert plan.constants["gamma_hat"] == pytest.approx(1 / (4 * math.sqrt(2)), abs=1e-15)
        dense = values(plan, "dense")
        assert dense[(0, 0)] == pytest.approx(3 / (32 * math.sqrt(2)), abs=1e-15)
        np.testing.assert_allclose(complements(plan, dense), [[0.75, -0.25], [-0.25, 0.75]], atol=1e-14)

    def test_patterns(self):
        assert str(complement_pattern(2, 0, 0)) == "0110"
        assert str(complement_pattern(2, 0, 1)) == "0011"
        assert str(complement_pattern(2, 1, 0)) == "1100"
        assert str(complement_pattern(3, 1, 2)) == "100011"
        assert str(determinant_pattern(3)) == "101010"

    def test_constraint_count(self):
        plan = plan_inverse(np.eye(3) * 0.5)
        assert len(plan.w_spec.constraints) == 10
        assert len(plan.extraction) == 10

    def test_worked_inverse(self):
        np.testing.assert_allclose(solve(plan_inverse(worked.E, worked.SIGMA)), worked.E_INV, atol=1e-14)

    def test_diagonal(self):
        d = np.array([0.3, 0.5, -0.4j])
        np.testing.assert_allclose(solve(plan_inverse(np.diag(d))), np.diag(1 / d), atol=1e-13)

    def test_diagonal_rescaled(self):
        d = np.array([3.0, -5.0, 2j])
        plan = plan_inverse(np.diag(d))
        assert max(plan.scale_record["rows"]) < 1
        np.testing.assert_allclose(decode(plan, values(plan)), np.diag(1 / d), atol=1e-13)

    def test_singular(self):
        plan = plan_inverse([[0.3, 0.2], [0.3, 0.2]])
        with pytest.raises(SingularMatrixError):
            solve(plan)

    def test_times_e_is_identity(self, rng):
        for _ in range(10):
            E = complex_matrix(rng, 3, 3) + np.eye(3)
            inv = solve(plan_inverse(E))
            assert np.abs(oracle.matmul_ref(inv, E) - np.eye(3)).max() <= 1e-8

    def test_one_by_one(self):
        assert solve(plan_inverse([[0.25j]]))[0, 0] == pytest.approx(-4j, abs=1e-13)


class TestLinsolve:
    def test_worked_instance(self):
        plan = plan_linsolve(worked.E, worked.B, worked.SIGMA)
        got = values(plan)
        assert got[0] == pytest.approx(1 / 32, abs=1e-15)
        assert got[1] == pytest.approx(1 / 32, abs=1e-15)
        np.testing.assert_allclose(decode(plan, got), worked.X, atol=1e-15)

    def test_scaled_identity(self, rng):
        b = unit_vector(rng, 3)
        x = solve(plan_linsolve(0.4 * np.eye(3), b))
        np.testing.assert_allclose(x, b / 0.4, atol=1e-13)

    def test_non_unit_b(self):
        with pytest.raises(ValueError):
            plan_linsolve(worked.E, [1.0, 1.0])
        with pytest.warns(UserWarning):
            plan = plan_linsolve(worked.E, [1.0, 1.0], normalize_b=True)
        np.testing.assert_allclose(solve(plan), oracle.solve_ref(worked.E, [1, 1]), atol=1e-13)

    def test_per_row_scaling(self, rng):
        E = 3 * complex_matrix(rng, 3, 3) + 3 * np.eye(3)
        b = unit_vector(rng, 3)
        plan = plan_linsolve(E, b)
        assert len(set(plan.scale_record["rows"])) == 3
        assert np.abs(solve(plan) - oracle.solve_ref(E, b)).max() <= 1e-10

    def test_v_rows(self):
        plan = plan_linsolve(worked.E, worked.B, worked.SIGMA)
        assert [str(c.row) for c in plan.v_spec.constraints] == ["0110", "1001"]
        assert validate(plan.v_spec).passed


class TestDecode:
    def test_all_zero(self):
        plan = plan_matmul(np.full((2, 2), 0.1), np.full((2, 2), 0.1))
        out = decode(plan, {ex.label: 0 for ex in plan.extraction})
        np.testing.assert_array_equal(out, np.zeros((2, 2)))

    def test_missing_label(self):
        plan = plan_determinant(worked.E)
        with pytest.raises(KeyError):
            decode(plan, {})

    def test_degenerate_constant(self):
        plan = plan_determinant(worked.E)
        object.__setattr__(plan, "decode_constant", 1e-14)
        with pytest.raises(DegenerateDecodeError):
            decode(plan, {"det": 0.1})

    @pytest.mark.parametrize("op", ["matvec", "matmul", "matsum", "det"])
    def test_round_trip_exact_values(self, op, rng):
        sizes = {"matvec": {"m": 2, "k": 3}, "matmul": {"m": 2, "k": 2, "n": 3},
                 "matsum": {"m": 2, "n": 3}, "det": {"n": 3}}
        for _ in range(5):
            args = random_instance(op, rng, sizes[op])
            plan = PLANNERS[op](*args)
            rec = plan.scale_record
            ref = oracle.REFERENCES[op](*oracle_arguments(op, args))
            if op == "matvec":
                exact = {i: plan.decode_constant * rec["A"] * rec["v"] * ref[i] for i in range(len(ref))}
            elif op == "det":
                exact = {"det": plan.decode_constant * math.prod(rec["rows"]) * ref}
            else:
                s = rec["A"] * rec["B"] if op == "matmul" else rec["C,D"]
                exact = {ij: plan.decode_constant * s * ref[ij] for ij in np.ndindex(ref.shape)}
            assert np.abs(np.asarray(decode(plan, exact)) - ref).max() <= 1e-10


class TestScaling:
    def test_auto_policy_floor(self, rng):
        policy = ScalePolicy("auto", 0.4)
        plan = plan_matvec(5 * complex_matrix(rng, 3, 3), 5 * complex_matrix(rng, 3), policy)
        for s in plan.senders:
            assert abs(s.vacuum_amplitude) ** 2 >= 0.4 - 1e-12

    def test_no_scaling_when_it_fits(self):
        assert plan_determinant(worked.E).scale_record["rows"] == (1.0, 1.0)

    def test_bad_policy(self):
        with pytest.raises(ValueError):
            ScalePolicy("sometimes")
        with pytest.raises(ValueError):
            ScalePolicy("auto", 1.5)

    @pytest.mark.parametrize("op", list(PLANNERS))
    def test_scale_covariance(self, op, rng):
        size = {"matvec": {"m": 2, "k": 2}, "matmul": {"m": 2, "k": 2, "n": 2},
                "matsum": {"m": 2, "n": 2}}.get(op, {"n": 3})
        args = random_instance(op, rng, size)
        ref = oracle.REFERENCES[op](*oracle_arguments(op, args))
        for s in (0.05, 0.5, 4.0, 30.0):
            first = s * args[0]
            scaled = (first,) + args[1:]
            out = solve(PLANNERS[op](*scaled))
            law = {"matvec": s, "matmul": s, "det": s**3, "inverse": 1 / s, "linsolve": 1 / s}
            if op == "matsum":
                scaled = (s * args[0], s * args[1], args[2])
                out = solve(PLANNERS[op](*scaled))
                law["matsum"] = s
            assert np.abs(np.asarray(out) / law[op] - ref).max() <= 1e-9 * max(1, np.abs(ref).max())


def test_table_constants():
    A, v = np.full((2, 4), 0.1), np.full(4, 0.2)
    plan = plan_matvec(A, v)
    a00, v0 = (s.vacuum_amplitude for s in plan.senders)
    assert plan.constants["theta1"] == 0.5
    assert plan.decode_constant == pytest.approx(0.5 * a00.conjugate() * v0.conjugate())

    plan = plan_determinant(np.eye(3) * 0.3)
    assert plan.constants["theta3"] == pytest.approx(1 / math.sqrt(6))
    plan = plan_inverse(np.eye(3) * 0.3)
    assert plan.constants["theta4"] == pytest.approx(1 / math.sqrt(2))
    e0 = np.prod([s.vacuum_amplitude.conjugate() for s in plan.senders])
    assert plan.constants["mu"] == pytest.approx(plan.constants["sigma"] * e0 / math.sqrt(2))
    assert plan.constants["gamma_hat"] == pytest.approx(e0 / math.sqrt(6))
