"""Boundary-weight evaluation, membership machinery, functional forms."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qweights.errors import DimensionMismatchError, UnsupportedProfileError
from qweights.profiles import (GridSampledProfile, Kernel, Profile,
                               power_exp, powers_canonical)
from qweights.weights import (BoundaryWeight, WeightAtom,
                              combination_in_H_exists,
                              divergent_direction_rank, h_membership,
                              is_unbounded, obs_id, obs_id_minus_lambda,
                              obs_lambda, obs_op, pair_eval, pair_integral,
                              weight_eval)

from conftest import powers_id_value, powers_lambda_value


class TestWeightEval:
    def test_powers_normalization(self, mu0):
        assert weight_eval(mu0, obs_id_minus_lambda(np.eye(1))) == \
            pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0, 3.0])
    def test_truncated_closed_forms(self, mu0, t):
        vid = weight_eval(mu0, obs_id(1, (t, math.inf)))
        vlam = weight_eval(mu0, obs_lambda(np.eye(1), (t, math.inf)))
        assert vid == pytest.approx(powers_id_value(t), abs=1e-12)
        assert vlam == pytest.approx(powers_lambda_value(t), abs=1e-12)

    def test_divergent_total(self, mu0):
        assert weight_eval(mu0, obs_id(1)) == math.inf
        assert is_unbounded(mu0)

    def test_dimension_mismatch(self, mu0):
        with pytest.raises(DimensionMismatchError):
            weight_eval(mu0, obs_id(2))

    def test_id_minus_lambda_general_T(self):
        # mu(I - Lambda(T)) = mu(I - Lambda) + mu(Lambda(I - T))
        can = powers_canonical()
        mu = BoundaryWeight.from_terms(2, [(0.7, (1, 0), can)])
        T = np.diag([1.0, 0.25])
        val = weight_eval(mu, obs_id_minus_lambda(T))
        # atom along e1: the Lambda(I - T) part vanishes on it
        assert val == pytest.approx(0.7, abs=1e-12)
        # atom meeting the deficient direction diverges
        mu_bad = BoundaryWeight.from_terms(2, [(0.7, (0, 1), can)])
        assert weight_eval(mu_bad, obs_id_minus_lambda(T)) == math.inf

    def test_op_tensor_id(self):
        mu = BoundaryWeight.from_terms(
            2, [(2.0, (1, 0), power_exp(1.0, 0.0, 1.0))])
        M = np.array([[3.0, 0], [0, 5.0]])
        val = weight_eval(mu, obs_op(M, (0.0, math.inf)))
        assert val == pytest.approx(2.0 * 3.0 * 0.5, rel=1e-12)

    @given(st.floats(min_value=0.01, max_value=2.0),
           st.floats(min_value=0.1, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_window_additivity_property(self, a, width):
        mu = BoundaryWeight.from_terms(
            1, [(1.3, (1.0,), power_exp(1.0, -0.4, 0.7))])
        b = a + width
        left = weight_eval(mu, obs_id(1, (a, b)))
        right = weight_eval(mu, obs_id(1, (b, math.inf)))
        total = weight_eval(mu, obs_id(1, (a, math.inf)))
        assert left + right == pytest.approx(total, rel=1e-10)

    @given(st.integers(min_value=0, max_value=20))
    @settings(max_examples=21, deadline=None)
    def test_monotone_in_t_property(self, idx):
        mu = BoundaryWeight.from_terms(
            1, [(0.8, (1.0,), powers_canonical()),
                (0.4, (1.0,), power_exp(1.0, -0.25, 2.0))])
        ts = np.geomspace(1e-6, 10.0, 22)
        lo, hi = ts[idx], ts[idx + 1]
        v_lo = weight_eval(mu, obs_lambda(np.eye(1), (lo, math.inf)))
        v_hi = weight_eval(mu, obs_lambda(np.eye(1), (hi, math.inf)))
        assert v_lo >= v_hi - 1e-10 * max(1.0, abs(v_lo))

    def test_positivity(self, mu0):
        for t in np.geomspace(1e-6, 10, 24):
            assert weight_eval(
                mu0, obs_lambda(np.eye(1), (t, math.inf))) >= -1e-12
            assert weight_eval(
                mu0, obs_id_minus_lambda(np.eye(1), (t, math.inf))) >= -1e-12


class TestPairEval:
    def test_diagonal_matches_weight_eval(self, mu0):
        lam, atom = mu0.terms[0]
        obs = obs_id(1, (0.5, math.inf))
        val = pair_eval([(lam, atom)], [atom], obs)
        assert complex(val).real == pytest.approx(
            weight_eval(mu0, obs), rel=1e-12)

    def test_homogeneity(self):
        atom = WeightAtom((1.0,), power_exp(1.0, 0.0, 1.0))
        z = 0.3 - 0.7j
        scaled = WeightAtom((1.0,), power_exp(z, 0.0, 1.0))
        obs = obs_id(1, (0.1, math.inf))
        base = pair_eval([(1.0, atom)], [atom], obs)
        val = pair_eval([(1.0, atom)], [scaled], obs)
        assert val == pytest.approx(z * base, rel=1e-12)

    def test_orthogonal_vectors_vanish(self):
        a1 = WeightAtom((1.0, 0.0), powers_canonical())
        a2 = WeightAtom((0.0, 1.0), powers_canonical())
        val = pair_eval([(1.0, a1)], [a2], obs_lambda(np.eye(2), (0.5, math.inf)))
        assert abs(val) < 1e-14


class TestPairIntegral:
    def test_matches_closed_form(self):
        g = powers_canonical()
        for t in (0.01, 1.0):
            val = pair_integral(g, g, Kernel.ONE, (t, math.inf))
            assert val == pytest.approx(powers_id_value(t), rel=1e-12)

    def test_divergent_diagonal(self):
        g = power_exp(1.0, -0.5, 1.0)
        assert pair_integral(g, g, Kernel.ONE, (0.0, math.inf)) == math.inf


class TestMembership:
    def test_h_membership_boundaries(self):
        assert h_membership(power_exp(1.0, -0.5, 1.0)) == "in_Hq_only"
        assert h_membership(power_exp(1.0, 0.0, 1.0)) == "in_H"
        assert h_membership(power_exp(1.0, -0.75, 1.0)) == "in_Hq_only"
        assert h_membership(powers_canonical()) == "in_Hq_only"
        grid = GridSampledProfile((0.5, 1.0), (1.0 + 0j, 0.0 + 0j))
        assert h_membership(grid) == "in_H"


def brute_force_combination_oracle(atoms, samples=720) -> bool:
    """Dense direction search: bounded truncated L^2 growth as t -> 0."""
    n = len(atoms)
    xs = np.geomspace(1e-9, 1.0, 4000)
    vals = np.stack([np.einsum("x,k->xk", atom.profile.evaluate(xs), atom.vec())
                     for atom in atoms])
    rng = np.random.default_rng(7)
    directions = []
    if n == 2:
        for th in np.linspace(0, math.pi / 2, 40):
            for ph in np.linspace(0, 2 * math.pi, 18, endpoint=False):
                directions.append([math.cos(th),
                                   math.sin(th) * np.exp(1j * ph)])
    else:
        for _ in range(samples):
            c = rng.normal(size=n) + 1j * rng.normal(size=n)
            directions.append(c / np.linalg.norm(c))
    for c in directions:
        f = np.einsum("i,ixk->xk", np.asarray(c, dtype=complex), vals)
        dens = np.sum(np.abs(f) ** 2, axis=1)
        total = np.trapezoid(dens, xs)
        if total < 1e-12:
            continue  # vanishing combination does not witness membership
        cut1 = np.trapezoid(dens[xs >= 1e-4], xs[xs >= 1e-4])
        growth = total / max(cut1, 1e-300)
        if growth < 1.25:
            return True
    return False


class TestCombinationInH:
    FAMILIES = [
        # (atoms, expected)
        ([(1.0, (1.0,), power_exp(1.0, -0.5, 1.0))], False),
        ([(1.0, (1.0,), power_exp(1.0, -0.5, 1.0)),
          (1.0, (1.0,), power_exp(1.0, -0.5, 2.0))], True),
        ([(1.0, (1, 0), power_exp(1.0, -0.5, 1.0)),
          (1.0, (0, 1), power_exp(1.0, -0.5, 2.0))], False),
        ([(1.0, (1.0,), power_exp(1.0, -0.5, 1.0)),
          (1.0, (1.0,), power_exp(1.0, -0.75, 2.0))], False),
        ([(1.0, (1.0,), power_exp(1.0, -0.5, 1.0)),
          (1.0, (1.0,), power_exp(1.0, 0.0, 1.0))], True),
        ([(1.0, (1.0,), powers_canonical()),
          (1.0, (1.0,), power_exp(1.0, -0.5, 1.0))], True),
        ([(1.0, (1, 0), powers_canonical()),
          (1.0, (0, 1), powers_canonical())], False),
        ([(1.0, (1.0,), power_exp(1.0, -0.5, 1.0)),
          (1.0, (1.0,), power_exp(1.0, -0.5, 2.0)),
          (1.0, (1.0,), power_exp(1.0, -0.5, 3.0))], True),
    ]

    @pytest.mark.parametrize("idx", range(len(FAMILIES)))
    def test_against_brute_force(self, idx):
        spec, expected = self.FAMILIES[idx]
        atoms = [WeightAtom(tuple(np.asarray(v, dtype=complex) /
                                  np.linalg.norm(v)), g) for _, v, g in spec]
        exists, witness = combination_in_H_exists(atoms)
        assert exists == expected
        assert exists == brute_force_combination_oracle(atoms)
        if exists:
            # verify the witness function is genuinely square integrable
            combo = Profile()
            same_ray = len({a.key()[0] for a, c in zip(atoms, witness)
                            if abs(c) > 1e-12}) == 1
            if same_ray:
                for c, atom in zip(witness, atoms):
                    if abs(c) > 1e-12 and isinstance(atom.profile, Profile):
                        combo = combo.plus(atom.profile.scaled(c))
                assert combo.in_H()

    def test_unsupported_grid_profiles(self):
        atoms = [WeightAtom((1.0,), GridSampledProfile((0.5, 1.0),
                                                       (1.0 + 0j, 0j)))]
        with pytest.raises(UnsupportedProfileError):
            combination_in_H_exists(atoms)


class TestDivergentDirectionRank:
    def test_rank_one_direction(self):
        can = powers_canonical()
        mu = BoundaryWeight.from_terms(2, [(0.5, (1, 0), can)])
        T1 = np.diag([1.0, 0.0])
        assert divergent_direction_rank(mu, T1)
        assert not divergent_direction_rank(mu, np.eye(2))

    def test_no_divergent_atoms(self):
        mu = BoundaryWeight.from_terms(2, [(0.5, (1, 0), power_exp(1, 0, 1))])
        assert not divergent_direction_rank(mu, np.diag([1.0, 0.0]))

    def test_spanning_divergence(self):
        can = powers_canonical()
        mu = BoundaryWeight.from_terms(
            2, [(0.4, (1, 0), can), (0.4, (0, 1), power_exp(1.0, -0.6, 1.0))])
        assert divergent_direction_rank(mu, np.eye(2))


class TestAtomMerging:
    def test_equal_atoms_merge(self):
        can = powers_canonical()
        mu = BoundaryWeight.from_terms(1, [(0.5, (1.0,), can),
                                           (0.25, (1.0,), can)])
        assert len(mu.terms) == 1
        assert mu.terms[0][0] == pytest.approx(0.75)

    def test_amplitude_folding(self):
        a = BoundaryWeight.from_terms(1, [(1.0, (1.0,), power_exp(2.0, 0.0, 1.0))])
        b = BoundaryWeight.from_terms(1, [(4.0, (1.0,), power_exp(1.0, 0.0, 1.0))])
        assert a.coefficient_map() == b.coefficient_map()

    def test_phase_folding(self):
        a = BoundaryWeight.from_terms(2, [(1.0, (1j, 0), powers_canonical())])
        b = BoundaryWeight.from_terms(2, [(1.0, (1, 0), powers_canonical())])
        assert a.coefficient_map() == b.coefficient_map()


class TestQuadratureAgreement:
    def test_canonical_closed_form_vs_quadrature_on_grid(self, mu0):
        # |quadrature - closed form| <= 1e-9 at every default grid t
        from scipy import integrate

        def density(x):
            return math.exp(-x) / (-math.expm1(-x))

        for t in np.geomspace(1e-6, 10.0, 24):
            quad_val, _ = integrate.quad(density, t, 60.0, epsabs=1e-13,
                                         epsrel=1e-12, limit=200)
            closed = weight_eval(mu0, obs_id(1, (t, math.inf)))
            assert abs(closed - quad_val) <= 1e-9
