"""Boundary expectations, standard form, range-rank trichotomy."""

from __future__ import annotations

import numpy as np
import pytest

from qweights.cp_core import CPMapFD, frobenius
from qweights.errors import NotTrivialSpineError, RankMismatchError
from qweights.expectation import (boundary_expectation, range_rank_trichotomy,
                                  standard_form_rank_two, verify_axioms)
from qweights.generate import generate_qweight, random_unitary
from qweights.profiles import powers_canonical, power_exp
from qweights.qweight import RankOneQWeight, RankTwoQWeight
from qweights.weights import BoundaryWeight

CAN = powers_canonical()


class TestBoundaryExpectation:
    def test_canonical_scalar(self, canonical_qw):
        res = boundary_expectation(canonical_qw)
        assert res.converged
        assert res.L.apply(np.eye(1))[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert all(res.axioms[k] for k in
                   ("cp", "fixes_range", "range_equality",
                    "idempotent_norm_one"))

    def test_canonical_c2_trace_map(self, canonical_qw_c2):
        res = boundary_expectation(canonical_qw_c2)
        assert res.converged
        M = np.array([[1.0, 2.0], [0.5, 3.0]], dtype=complex)
        assert np.allclose(res.L.apply(M), np.trace(M) / 2 * np.eye(2),
                           atol=1e-8)
        assert res.axioms["range_rank"] == 1

    def test_projection_target(self):
        mu = BoundaryWeight.from_terms(2, [(1.0, (1, 0), CAN)])
        qw = RankOneQWeight(np.diag([1.0, 0.0]), mu)
        res = boundary_expectation(qw)
        assert res.converged
        assert res.axioms["range_rank"] == 1
        # L(A) = rho(A) T with a state rho fixing T
        T = np.diag([1.0, 0.0])
        out = res.L.apply(T)
        assert np.allclose(out, T, atol=1e-8)

    def test_idempotent_within_tolerance(self, canonical_qw_c2):
        res = boundary_expectation(canonical_qw_c2)
        m = res.L.map_matrix()
        assert frobenius(m @ m - m) < 1e-6

    def test_residuals_eventually_monotone(self, canonical_qw):
        res = boundary_expectation(canonical_qw)
        vals = [v for _, v in res.residual_curve]
        tail = vals[2:]
        assert all(tail[i] >= tail[i + 1] - 1e-12 for i in range(len(tail) - 1))

    def test_bounded_weight_guard(self):
        mu = BoundaryWeight.from_terms(1, [(0.4, (1.0,), power_exp(1, 0, 1))])
        with pytest.raises(NotTrivialSpineError):
            boundary_expectation(RankOneQWeight(np.eye(1), mu))

    def test_rank_two_expectation(self, rank_two_generic):
        res = boundary_expectation(rank_two_generic)
        assert res.converged
        assert res.axioms["range_rank"] == 2
        # L should fix e1 and e2
        assert np.allclose(res.L.apply(rank_two_generic.e1),
                           rank_two_generic.e1, atol=1e-7)


class TestVerifyAxioms:
    def test_identity_everything(self, canonical_qw_c2):
        # the honest L from the computation passes; a wrong L fails
        res = boundary_expectation(canonical_qw_c2)
        axioms = verify_axioms(res.L, canonical_qw_c2)
        assert all(axioms[k] for k in ("cp", "fixes_range", "range_equality",
                                       "idempotent_norm_one"))

    def test_zero_map_fails_fixing(self, canonical_qw_c2):
        zero = CPMapFD.from_function(lambda A: 0 * A, 2)
        axioms = verify_axioms(zero, canonical_qw_c2)
        assert not axioms["fixes_range"]

    def test_oversized_range_detected(self, canonical_qw_c2):
        ident = CPMapFD.identity(2)
        axioms = verify_axioms(ident, canonical_qw_c2)
        assert axioms["fixes_range"]
        assert not axioms["range_equality"]


class TestStandardForm:
    def test_already_standard(self, rank_two_generic):
        sf = standard_form_rank_two(rank_two_generic)
        assert sf.unit_matches and sf.box_verified
        match1 = np.allclose(sf.e1, rank_two_generic.e1, atol=1e-6)
        match2 = np.allclose(sf.e2, rank_two_generic.e2, atol=1e-6)
        assert match1 and match2
        got = sf.mu1.coefficient_map()
        want = rank_two_generic.mu1.coefficient_map()
        assert set(got) == set(want)
        for key, val in want.items():
            assert got[key] == pytest.approx(val, rel=1e-6)

    def test_conjugation_equivariance(self, rank_two_generic, rng):
        U = random_unitary(rng, 2)
        qw = rank_two_generic
        e1c = U @ qw.e1 @ U.conj().T
        e2c = U @ qw.e2 @ U.conj().T

        def conj_weight(mu):
            return BoundaryWeight.from_terms(
                2, [(lam, tuple((U @ atom.vec()).tolist()), atom.profile)
                    for lam, atom in mu.terms])

        qwc = RankTwoQWeight(e1c, e2c, conj_weight(qw.mu1), conj_weight(qw.mu2))
        sf = standard_form_rank_two(qwc)
        assert np.allclose(sf.e1, e1c, atol=1e-6)
        assert np.allclose(sf.e2, e2c, atol=1e-6)

    def test_rank_mismatch_guard(self, canonical_qw_c2):
        with pytest.raises((RankMismatchError, NotTrivialSpineError)):
            # a rank-one map has a one-dimensional algebra
            standard_form_rank_two(
                RankTwoQWeight(np.diag([1.0, 0]), np.diag([0, 1.0]),
                               canonical_qw_c2.mu, canonical_qw_c2.mu))


class TestTrichotomy:
    def test_rank_one(self, canonical_qw_c2, rng):
        res = range_rank_trichotomy(canonical_qw_c2, rng)
        assert res.rank == 1 and res.consistent and res.q_pure_possible

    def test_rank_two(self, rank_two_generic, rng):
        res = range_rank_trichotomy(rank_two_generic, rng)
        assert res.rank == 2 and res.consistent and not res.q_pure_possible

    def test_rank_four(self, rng):
        qw = generate_qweight(rng, "rank_four")
        res = range_rank_trichotomy(qw, rng)
        assert res.rank == 4 and res.consistent and res.q_pure_possible

    def test_generated_sample(self, rng):
        for _ in range(12):
            qw = generate_qweight(rng)
            res = range_rank_trichotomy(qw, rng)
            assert res.consistent
            assert res.rank != 3


class TestRankOneStructure:
    def test_L_is_state_times_T(self, rng):
        # for rank-one inputs, L(A) = rho(A) T with a state rho, rho(T) = 1
        mu = BoundaryWeight.from_terms(2, [(1.0, (1, 0), CAN)])
        T = np.diag([1.0, 0.0])
        qw = RankOneQWeight(T, mu)
        res = boundary_expectation(qw)
        mats = []
        vals = []
        for i in range(2):
            for j in range(2):
                E = np.zeros((2, 2), dtype=complex)
                E[i, j] = 1.0
                out = res.L.apply(E)
                coef = np.vdot(T.reshape(-1), out.reshape(-1)) / \
                    np.vdot(T.reshape(-1), T.reshape(-1))
                mats.append(coef)
                vals.append(frobenius(out - coef * T))
        assert max(vals) <= 1e-6  # fit residual
        rho = np.array(mats).reshape(2, 2)
        # rho acts as a state: rho(T) = 1, rho(I) = 1, rho >= 0
        assert np.vdot(rho.reshape(-1), T.reshape(-1)).real == \
            pytest.approx(1.0, abs=1e-7)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-7)


class TestAssembledExpectation:
    def test_default_sequence_reports_honestly(self, rng):
        # composite-profile corners add non-rational O(sqrt t) corrections;
        # on the default sequence the result must not claim convergence
        theta = generate_qweight(np.random.default_rng(12), "rank_four")
        res = boundary_expectation(theta)
        assert res.extrapolation_error > 1e-7
        assert not res.converged

    def test_extended_sequence_converges_to_full_matrix_algebra(self):
        from qweights.cp_core import build_ce_algebra, minimal_central_projections

        theta = generate_qweight(np.random.default_rng(12), "rank_four")
        seq = tuple(10.0 ** (-n) for n in range(26))
        res = boundary_expectation(theta, t_sequence=seq,
                                   extrapolation_nodes=10)
        assert res.converged
        assert all(res.axioms[k] for k in ("cp", "fixes_range",
                                           "range_equality",
                                           "idempotent_norm_one"))
        assert res.axioms["range_rank"] == 4
        alg = build_ce_algebra(res.L)
        assert alg.dim == 4
        # range rank 4 forces the full matrix algebra: trivial center
        assert len(minimal_central_projections(alg)) == 1


class TestMixedRateHonesty:
    def test_different_divergence_rates_not_certified(self):
        # log-rate divergence along e1 versus t^{-1/2}-rate along e2: the
        # entries are not rational in the single divergence measure, so the
        # computation must not certify convergence on the default sequence
        mu = BoundaryWeight.from_terms(
            2, [(0.5, (1, 0), CAN), (0.1, (0, 1), power_exp(1.0, -0.75, 1.0))])
        res = boundary_expectation(RankOneQWeight(np.eye(2), mu))
        assert not res.converged
        # the approximate limit nevertheless shows the dominant direction
        E22 = np.diag([0.0, 1.0])
        assert res.L.apply(E22)[0, 0].real > 0.99
