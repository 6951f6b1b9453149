"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances are pinned here and match the shipped defaults.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import integrate

from qweights.cp_core import (BlockStructure, CPMapFD, NoCorner,
                              extract_matrix_units, verify_matrix_units)
from qweights.corners import (corner_candidate,
                              determinant_inequality_check, verify_corner)
from qweights.expectation import (boundary_expectation, range_rank_trichotomy,
                                  standard_form_rank_two)
from qweights.flowsim import DiscretizedH, recover_omega
from qweights.generate import generate_qweight
from qweights.io_schemas import decode_qweight, load_input, shipped_spec_path
from qweights.profiles import powers_canonical, power_exp
from qweights.purity import classify_rank_one, rank_two_witnesses
from qweights.qweight import (RankOneQWeight, TGrid, gbr_cp_norm, gbr_sample,
                              subordination_check, validate_rank_two)
from qweights.weights import (BoundaryWeight, obs_id, obs_id_minus_lambda,
                              obs_lambda, weight_eval)

from conftest import powers_id_value, powers_lambda_value

GRID = TGrid()
CAN = powers_canonical()

RANK_ONE_SPECS = [f"rank_one_{i:02d}" for i in range(1, 11)]
RANK_ONE_FILES = [
    "rank_one_01_canonical.json", "rank_one_02_canonical_c2.json",
    "rank_one_03_projection.json", "rank_one_04_nonunital.json",
    "rank_one_05_powerexp_half.json", "rank_one_06_powerexp_deep.json",
    "rank_one_07_mixed.json", "rank_one_08_rotated.json",
    "rank_one_09_c3.json", "rank_one_10_mixed_bounded.json"]
RANK_TWO_FILES = [
    "rank_two_01_generic.json", "rank_two_02_orthogonal.json",
    "rank_two_03_rotated.json", "rank_two_04_tight.json",
    "rank_two_05_c3.json"]
# hand-constructed admissibility data for the shipped rank-two specs:
# (alpha, beta, gamma, delta) coefficients of the shared canonical atoms
RANK_TWO_PARAMS = {
    "rank_two_01_generic.json": (0.5, 0.1, 0.2, 0.4),
    "rank_two_02_orthogonal.json": (0.6, 0.0, 0.0, 0.55),
    "rank_two_03_rotated.json": (0.45, 0.2, 0.1, 0.5),
    "rank_two_04_tight.json": (0.3, 0.24, 0.18, 0.3),
    "rank_two_05_c3.json": (0.5, 0.1, 0.2, 0.4),
}


def _load(name):
    return decode_qweight(load_input(shipped_spec_path(name))["qweight"])


def _report(name: str, ok: bool) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    assert ok, name


def test_criterion_01_canonical_powers_weight(mu0):
    start = time.monotonic()
    ok = abs(weight_eval(mu0, obs_id_minus_lambda(np.eye(1))) - 1.0) <= 1e-9

    def density(x):
        return math.exp(-x) / (-math.expm1(-x))

    for t in (0.01, 0.1, 1.0, 3.0):
        quad_id, _ = integrate.quad(density, t, 60.0, epsabs=1e-13,
                                    epsrel=1e-12, limit=200)
        quad_lam, _ = integrate.quad(lambda x: math.exp(-x) * density(x),
                                     t, 60.0, epsabs=1e-13, epsrel=1e-12,
                                     limit=200)
        vid = weight_eval(mu0, obs_id(1, (t, math.inf)))
        vlam = weight_eval(mu0, obs_lambda(np.eye(1), (t, math.inf)))
        ok = ok and abs(vid - powers_id_value(t)) <= 1e-9
        ok = ok and abs(vlam - powers_lambda_value(t)) <= 1e-9
        ok = ok and abs(vid - quad_id) <= 1e-9
        ok = ok and abs(vlam - quad_lam) <= 1e-9
    elapsed = time.monotonic() - start
    ok = ok and elapsed < 1.0
    _report(f"criterion 1: canonical Powers weight closed forms "
            f"({elapsed:.2f}s)", ok)


def test_criterion_02_gbr_contraction():
    start = time.monotonic()
    ok = True
    for name in RANK_ONE_FILES:
        qw = _load(name)
        for t in GRID.values():
            ok = ok and gbr_cp_norm(qw, t) <= 1 + 1e-9
            ok = ok and gbr_sample(qw, t).is_cp(1e-9)
    elapsed = time.monotonic() - start
    ok = ok and elapsed < 10.0
    _report(f"criterion 2: GBR contraction on 10 rank-one specs "
            f"({elapsed:.2f}s)", ok)


def test_criterion_03_lambda_subordination(canonical_qw):
    ok = True
    for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
        eta = RankOneQWeight(np.eye(1), canonical_qw.mu.scaled(lam)) \
            if lam > 0 else RankOneQWeight(np.eye(1), BoundaryWeight(1, ()))
        ok = ok and subordination_check(canonical_qw, eta, GRID).holds
    over = RankOneQWeight(np.eye(1), canonical_qw.mu.scaled(1.05))
    ok = ok and not subordination_check(canonical_qw, over, GRID).holds
    _report("criterion 3: lambda-subordination family and 1.05 rejection", ok)


def test_criterion_04_rank_one_subordinate_bound():
    mu = BoundaryWeight.from_terms(2, [(0.5, (1, 0), CAN), (0.5, (0, 1), CAN)])
    omega = RankOneQWeight(np.eye(2), mu)
    T1 = np.diag([1.0, 0.0])
    # grid-certified bound (1 + mu|_tmin(Lambda(T - T1)))^{-1}
    bound = 1.0 / (1.0 + 0.5 * powers_lambda_value(GRID.t_min))
    holds = subordination_check(
        omega, RankOneQWeight(T1, mu.scaled(bound - 1e-3)), GRID).holds
    fails = not subordination_check(
        omega, RankOneQWeight(T1, mu.scaled(bound + 1e-2)), GRID).holds
    _report("criterion 4: rank-one subordinate bound (grid certification)",
            holds and fails)


def test_criterion_05_rank_two_machinery(rng):
    ok = True
    m = powers_lambda_value(GRID.t_min)
    for name in RANK_TWO_FILES:
        qw = _load(name)
        rep = validate_rank_two(qw, GRID, rng)
        for curve in (rep.h1_curve, rep.h2_curve):
            vals = [v for _, v in curve]
            ok = ok and all(vals[i] >= vals[i + 1] - 1e-10
                            for i in range(len(vals) - 1))
        ok = ok and all(d >= 1 - 1e-9 for _, d in rep.det_curve)
        # hand-constructed admissibility from the (alpha..delta) data
        al, be, ga, de = RANK_TWO_PARAMS[name]
        kappa1 = be * m / (1 + de * m)
        kappa2 = ga * m / (1 + al * m)
        x, y = al + be, ga + de
        expected = (0 <= x - kappa1 * y <= 1 - kappa1 + 1e-12) and \
            (0 <= y - kappa2 * x <= 1 - kappa2 + 1e-12)
        ok = ok and (rep.valid == expected) and rep.in_parallelogram == expected
        ok = ok and abs(rep.kappa1 - kappa1) < 1e-9
    _report("criterion 5: rank-two h/det machinery and admissibility", ok)


def test_criterion_06_rank_two_never_q_pure(rng):
    ok = True
    for name in RANK_TWO_FILES:
        qw = _load(name)
        if qw.mu1.coefficient_map() == qw.mu2.coefficient_map():
            continue
        report = rank_two_witnesses(qw, GRID, rng)
        ok = ok and report.eta_subordinate.holds
        ok = ok and report.nu_subordinate.holds
        ok = ok and report.incomparable
        ok = ok and report.eta_vs_nu.first_failure is not None
        ok = ok and report.nu_vs_eta.first_failure is not None
    _report("criterion 6: rank-two witnesses subordinate and incomparable", ok)


def test_criterion_07_q_purity_classifier(canonical_qw):
    # (a) single-atom unbounded over C^1
    va = classify_rank_one(canonical_qw, GRID)
    ok = va.verdict == "QPure"
    # (b) T = diag(1, 1/2)
    T = np.diag([1.0, 0.5])
    v = (1 / math.sqrt(2), 1 / math.sqrt(2))
    mub = BoundaryWeight.from_terms(2, [(1.0, v, power_exp(1.0, 0.0, 1.0))])
    vb = classify_rank_one(RankOneQWeight(T, mub), GRID)
    ok = ok and vb.verdict == "NotQPure" \
        and vb.failed_condition == "TNotProjection" \
        and vb.witness_subordination.holds
    # (c) divergence along a single direction
    muc = BoundaryWeight.from_terms(
        2, [(0.8, (1, 0), CAN), (0.15, (1, 0), power_exp(1.0, -0.75, 1.0))])
    vc = classify_rank_one(RankOneQWeight(np.eye(2), muc), GRID)
    ok = ok and vc.verdict == "NotQPure" \
        and vc.failed_condition == "DivergenceRankDeficient" \
        and vc.witness_subordination.holds
    # (d) cancelable singularities
    mud = BoundaryWeight.from_terms(
        1, [(0.4, (1.0,), power_exp(1.0, -0.5, 1.0)),
            (0.3, (1.0,), power_exp(1.0, -0.5, 2.0))])
    vd = classify_rank_one(RankOneQWeight(np.eye(1), mud), GRID)
    ok = ok and vd.verdict == "NotQPure" \
        and vd.failed_condition == "MuNotQPure" \
        and vd.witness_subordination.holds
    _report("criterion 7: q-purity classifier with validated witnesses", ok)


def test_criterion_08_corner_round_trip(canonical_qw, rng):
    omega = canonical_qw
    U1 = np.eye(1)
    ok = True
    for z in (0.5, 1.0, 2.0):
        h_atoms = None if z == 1.0 else [None]
        corner = corner_candidate(omega, omega, U1, z, h_atoms=h_atoms)
        rep = verify_corner(omega, omega, corner, GRID, rng)
        ok = ok and rep.is_q_corner and rep.trivially_maximal
        points = determinant_inequality_check(omega, corner, GRID)
        ok = ok and all(p.holds for p in points)
    over = corner_candidate(omega, omega, U1, 1.0).scaled(1.05)
    ok = ok and not verify_corner(omega, omega, over, GRID, rng).is_q_corner
    _report("criterion 8: corner round trip and 1.05 scaling failure", ok)


def test_criterion_09_boundary_expectation(canonical_qw_c2, rank_two_generic):
    res = boundary_expectation(canonical_qw_c2)
    m = res.L.map_matrix()
    ok = res.converged
    ok = ok and res.axioms["cp"]
    ok = ok and float(np.linalg.norm(m @ m - m)) <= 1e-6
    ok = ok and res.axioms["idempotent_norm_one"]
    ok = ok and res.axioms["fixes_range"]
    ok = ok and res.axioms["range_rank"] == 1
    sf = standard_form_rank_two(rank_two_generic, box_grid=21)
    ok = ok and sf.unit_matches and sf.box_verified
    _report("criterion 9: boundary expectation and rank-two standard form", ok)


def test_criterion_10_trichotomy(rng):
    start = time.monotonic()
    ok = True
    seen_ranks: set[int] = set()
    for _ in range(100):
        qw = generate_qweight(rng)
        tri = range_rank_trichotomy(qw, rng)
        seen_ranks.add(tri.rank)
        ok = ok and tri.consistent and tri.rank != 3
    elapsed = time.monotonic() - start
    ok = ok and elapsed < 60.0 and seen_ranks <= {1, 2, 4}
    _report(f"criterion 10: trichotomy over 100 generated maps "
            f"({elapsed:.1f}s, ranks seen {sorted(seen_ranks)})", ok)


def test_criterion_11_flowsim_recovery(canonical_qw):
    observables = [obs_id(1, (1.0, math.inf))]
    rows_c = recover_omega(canonical_qw, observables,
                           DiscretizedH(1, 2000, 20.0))
    rows_c4 = recover_omega(canonical_qw, observables,
                            DiscretizedH(1, 4000, 20.0))
    mu_b = BoundaryWeight.from_terms(1, [(0.5, (1.0,), power_exp(1, 0, 1))])
    bounded = RankOneQWeight(np.eye(1), mu_b)
    rows_b = recover_omega(bounded, observables, DiscretizedH(1, 2000, 20.0))
    rows_b4 = recover_omega(bounded, observables, DiscretizedH(1, 4000, 20.0))
    ok = all(r.rel_err <= 0.02 for r in rows_c + rows_b)
    ok = ok and rows_c[0].rel_err / rows_c4[0].rel_err >= 1.5
    ok = ok and rows_b[0].rel_err / rows_b4[0].rel_err >= 1.5
    _report("criterion 11: flowsim recovery within 2% and refinement", ok)


def test_criterion_12_matrix_units(rng):
    blocks = BlockStructure((2, 2))
    ok = True
    for trial in range(20):
        with_corner = trial % 2 == 0
        # conjugate the shipped template by block-diagonal unitaries
        def block_unitary():
            G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            q, r = np.linalg.qr(G)
            return q * (np.diag(r) / np.abs(np.diag(r)))
        U = np.zeros((4, 4), dtype=complex)
        U[:2, :2] = block_unitary()
        U[2:, 2:] = block_unitary()
        p1 = np.zeros((4, 4), dtype=complex)
        p1[0, 0] = 1.0
        p2 = np.zeros((4, 4), dtype=complex)
        p2[2, 2] = 1.0
        p1 = U @ p1 @ U.conj().T
        p2 = U @ p2 @ U.conj().T
        if with_corner:
            P = p1 + p2
            L = CPMapFD.from_function(lambda A: P @ A @ P, 4)
        else:
            L = CPMapFD.from_function(
                lambda A: p1 @ A @ p1 + p2 @ A @ p2, 4)
        units = extract_matrix_units(L, blocks)
        if with_corner:
            ok = ok and not isinstance(units, NoCorner)
            ok = ok and verify_matrix_units(L, units) <= 1e-9
        else:
            ok = ok and isinstance(units, NoCorner)
    _report("criterion 12: matrix units on 20 randomized idempotents", ok)
