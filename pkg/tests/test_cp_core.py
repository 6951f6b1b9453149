"""Choi machinery, Choi-Effros algebras, matrix units, extractor."""

from __future__ import annotations

import numpy as np
import pytest

from qweights.cp_core import (BlockStructure, CPMapFD, NoCorner,
                              assemble_block_map, block_component,
                              build_ce_algebra, choi_effros_product, cp_norm,
                              extract_matrix_units, extractor_check,
                              hermitian_eigen, is_completely_positive,
                              is_cp_idempotent_contraction, is_psd,
                              minimal_central_projections, operator_norm,
                              verify_matrix_units)
from qweights.errors import (NotCPError, NotHermitianError, NotInRangeError,
                             PreconditionViolatedError)


def diag_part_map(k: int = 2) -> CPMapFD:
    return CPMapFD.from_function(lambda A: np.diag(np.diag(A)), k)


class TestEigen:
    def test_identity(self):
        vals, _ = hermitian_eigen(np.eye(2))
        assert np.allclose(vals, [1, 1])

    def test_diagonal(self):
        vals, _ = hermitian_eigen(np.diag([1.0, 0.5]))
        assert np.allclose(vals, [0.5, 1.0])

    def test_off_diagonal(self):
        # characteristic polynomial x^2 - 1 by hand
        vals, vecs = hermitian_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(vals, [-1.0, 1.0])
        M = np.array([[0.0, 1.0], [1.0, 0.0]])
        for j in range(2):
            assert np.allclose(M @ vecs[:, j], vals[j] * vecs[:, j], atol=1e-12)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitianError):
            hermitian_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestCP:
    def test_transpose_not_cp(self):
        transpose = CPMapFD.from_function(lambda A: A.T, 2)
        assert not is_completely_positive(transpose)
        # Choi of transpose has eigenvalue -1
        vals = np.linalg.eigvalsh(transpose.choi)
        assert vals.min() == pytest.approx(-1.0, abs=1e-12)

    def test_identity_cp(self):
        assert is_completely_positive(CPMapFD.identity(2))

    def test_trace_map_cp(self):
        phi = CPMapFD.from_function(lambda A: np.trace(A) * np.eye(2) / 2, 2)
        assert is_completely_positive(phi)
        assert np.allclose(phi.choi, np.eye(4) / 2)

    def test_additivity_exact(self, rng):
        def rand_cp():
            K = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            return CPMapFD.from_function(lambda A: K @ A @ K.conj().T, 2)
        a, b = rand_cp(), rand_cp()
        s = a.plus(b)
        assert np.array_equal(s.choi, a.choi + b.choi)
        assert is_completely_positive(s)

    def test_choi_round_trip(self, rng):
        phi = CPMapFD.from_function(lambda A: A[::-1, ::-1], 2)
        rebuilt = CPMapFD.from_function(phi.apply, 2)
        assert np.allclose(rebuilt.choi, phi.choi)


class TestCpNorm:
    def test_identity(self):
        assert cp_norm(CPMapFD.identity(2)) == pytest.approx(1.0)

    def test_trace_map(self):
        phi = CPMapFD.from_function(lambda A: 0.5 * np.trace(A) * np.eye(2), 2)
        assert cp_norm(phi) == pytest.approx(1.0)

    def test_zero_map(self):
        zero = CPMapFD.from_function(lambda A: 0 * A, 2)
        assert cp_norm(zero) == 0.0

    def test_requires_cp(self):
        with pytest.raises(NotCPError):
            cp_norm(CPMapFD.from_function(lambda A: A.T, 2))


class TestIdempotent:
    def test_identity(self):
        assert is_cp_idempotent_contraction(CPMapFD.identity(2))

    def test_diag_part(self):
        assert is_cp_idempotent_contraction(diag_part_map())

    def test_dilation_not_contractive(self):
        assert not is_cp_idempotent_contraction(
            CPMapFD.from_function(lambda A: 2 * A, 2))


class TestChoiEffros:
    def test_identity_is_matrix_product(self, rng):
        L = CPMapFD.identity(2)
        x = rng.normal(size=(2, 2))
        y = rng.normal(size=(2, 2))
        assert np.allclose(choi_effros_product(L, x, y), x @ y)

    def test_diag_part_product(self):
        L = diag_part_map()
        e11 = np.diag([1.0, 0.0])
        assert np.allclose(choi_effros_product(L, e11, e11), e11)

    def test_unit_neutral(self):
        L = diag_part_map()
        unit = L.apply(np.eye(2))
        y = np.diag([0.3, 0.8])
        assert np.allclose(choi_effros_product(L, unit, y), y)

    def test_not_in_range(self):
        L = diag_part_map()
        with pytest.raises(NotInRangeError):
            choi_effros_product(L, np.array([[0, 1], [0, 0]]), np.eye(2))


class TestCEAlgebra:
    def test_identity_gives_full_matrix_algebra(self):
        alg = build_ce_algebra(CPMapFD.identity(2))
        assert alg.dim == 4
        assert len(minimal_central_projections(alg)) == 1

    def test_diag_part_gives_c_plus_c(self):
        alg = build_ce_algebra(diag_part_map())
        assert alg.dim == 2
        ps = minimal_central_projections(alg)
        assert len(ps) == 2
        assert np.allclose(sum(ps), np.eye(2), atol=1e-8)
        for p in ps:
            assert np.trace(p).real == pytest.approx(1.0, abs=1e-8)

    def test_rank_one_projection_map(self):
        T = np.diag([1.0, 0.0])
        L = CPMapFD.from_function(lambda A: A[0, 0] * T, 2)
        alg = build_ce_algebra(L)
        assert alg.dim == 1
        ps = minimal_central_projections(alg)
        assert len(ps) == 1 and np.allclose(ps[0], T, atol=1e-9)

    @pytest.mark.parametrize("maker", [
        lambda: CPMapFD.identity(2),
        diag_part_map,
        lambda: CPMapFD.from_function(lambda A: A[0, 0] * np.diag([1.0, 0]), 2),
    ])
    def test_associativity_and_cstar_identity(self, maker):
        L = maker()
        alg = build_ce_algebra(L)
        if alg.dim > 4:
            pytest.skip("desk-scale associativity check is for dim <= 4")
        for x in alg.basis:
            for y in alg.basis:
                for z in alg.basis:
                    left = alg.product(alg.product(x, y), z)
                    right = alg.product(x, alg.product(y, z))
                    assert np.allclose(left, right, atol=1e-10)
        for x in alg.basis:
            prod = alg.product(x.conj().T, x)
            assert operator_norm(prod) == pytest.approx(
                operator_norm(x) ** 2, abs=1e-9)


def compression_template(u1: np.ndarray, u2: np.ndarray) -> CPMapFD:
    p1 = np.zeros((4, 4), dtype=complex)
    p1[:2, :2] = np.outer(u1, u1.conj())
    p2 = np.zeros((4, 4), dtype=complex)
    p2[2:, 2:] = np.outer(u2, u2.conj())
    P = p1 + p2
    return CPMapFD.from_function(lambda A: P @ A @ P, 4)


def pinching_template(u1: np.ndarray, u2: np.ndarray) -> CPMapFD:
    p1 = np.zeros((4, 4), dtype=complex)
    p1[:2, :2] = np.outer(u1, u1.conj())
    p2 = np.zeros((4, 4), dtype=complex)
    p2[2:, 2:] = np.outer(u2, u2.conj())
    return CPMapFD.from_function(lambda A: p1 @ A @ p1 + p2 @ A @ p2, 4)


class TestMatrixUnits:
    def test_corner_template(self):
        L = compression_template(np.array([1.0, 0]), np.array([0.6, 0.8]))
        units = extract_matrix_units(L, BlockStructure((2, 2)))
        assert not isinstance(units, NoCorner)
        assert verify_matrix_units(L, units) < 1e-9

    def test_pinching_returns_no_corner(self):
        L = pinching_template(np.array([1.0, 0]), np.array([0.0, 1.0]))
        assert isinstance(extract_matrix_units(L, BlockStructure((2, 2))),
                          NoCorner)

    def test_standard_unit_system(self):
        # identity on a 2x2 system of units embedded in M_4
        L = compression_template(np.array([1.0, 0]), np.array([1.0, 0]))
        units = extract_matrix_units(L, BlockStructure((2, 2)))
        assert verify_matrix_units(L, units) < 1e-12

    def test_precondition_rank(self):
        L = CPMapFD.identity(4)
        with pytest.raises(PreconditionViolatedError):
            extract_matrix_units(L, BlockStructure((2, 2)))


class TestBlockComponent:
    def test_identity_blocks(self):
        phi = CPMapFD.identity(3)
        blocks = BlockStructure((2, 1))
        comp = block_component(phi, blocks, 0, 1)
        X = np.array([[1.0], [2.0]])
        assert np.allclose(comp(X), X)

    def test_rank_one_vanishing_block(self):
        T = np.diag([1.0, 0.0])
        phi = CPMapFD.from_function(lambda A: A[0, 0] * T, 2)
        blocks = BlockStructure((1, 1))
        comp22 = block_component(phi, blocks, 1, 1)
        assert abs(comp22(np.array([[5.0]]))[0, 0]) < 1e-14

    def test_schur_map(self):
        Q = np.array([[1.0, 0.5], [0.5, 0.25]])
        phi = CPMapFD.from_function(lambda A: Q * A, 2)
        blocks = BlockStructure((1, 1))
        for i in range(2):
            for j in range(2):
                comp = block_component(phi, blocks, i, j)
                assert comp(np.array([[1.0]]))[0, 0] == pytest.approx(Q[i, j])


class TestExtractor:
    def test_matched_projections(self):
        P1 = np.diag([1.0, 0.0])
        P2 = np.diag([0.0, 1.0])
        Q = np.array([[0.0, 1.0], [0.0, 0.0]])
        K = np.array([[1.0, 0.2], [0.0, 0.5]])
        sigma = CPMapFD.from_function(lambda A: K @ A @ K.conj().T, 2)
        assert extractor_check(P1, P2, Q, sigma)

    def test_misaligned_Q(self):
        P1 = np.diag([1.0, 0.0])
        P2 = np.diag([0.0, 1.0])
        Q = np.array([[1.0, 0.0], [0.0, 0.0]])  # P1 Q P2 = 0 != Q
        sigma = CPMapFD.identity(2)
        assert not extractor_check(P1, P2, Q, sigma)

    def test_transpose_sigma_fails(self):
        P1 = np.diag([1.0, 0.0])
        P2 = np.diag([0.0, 1.0])
        Q = np.array([[0.0, 1.0], [0.0, 0.0]])
        sigma = CPMapFD.from_function(lambda A: A.T, 2)
        assert not extractor_check(P1, P2, Q, sigma)

    def test_agrees_with_assembled_cp(self, rng):
        mismatches = 0
        for _ in range(50):
            k = int(rng.integers(2, 4))
            P1 = np.zeros((k, k)); P1[0, 0] = 1
            P2 = np.zeros((k, k)); P2[k - 1, k - 1] = 1
            if rng.random() < 0.5:
                Q = np.zeros((k, k), dtype=complex)
                Q[0, k - 1] = 1.0
            else:
                Q = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
                Q /= operator_norm(Q)
            if rng.random() < 0.6:
                K1 = rng.normal(size=(2, k)) + 1j * rng.normal(size=(2, k))
                sigma = CPMapFD.from_function(
                    lambda A, K1=K1: K1 @ A @ K1.conj().T, k, 2)
            else:
                sigma = CPMapFD.from_function(
                    lambda A: A[:2, :2].T, k, 2)
            lhs = extractor_check(P1, P2, Q, sigma)
            rhs = is_completely_positive(assemble_block_map(P1, P2, Q, sigma))
            mismatches += int(lhs != rhs)
        assert mismatches == 0


class TestPSD:
    def test_psd_tolerance_scales(self):
        M = np.eye(3) * 1e6
        M[0, 0] -= 1e-4  # tiny relative perturbation
        assert is_psd(M)

    def test_negative_definite(self):
        assert not is_psd(-np.eye(2))
