"""q-purity classification for range rank one, and the rank-two refutation.

A rank-one map omega(rho) = rho(T) mu(A) is q-pure iff T is a projection,
mu is q-pure as a boundary weight, and (for rank T > 1) every rank-one
projection under T meets the Lambda-divergence of mu.  Each failure mode
yields an explicit subordinate witness that is verified on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .cp_core import hermitian_eigen
from .errors import (NotDominatedError, PreconditionViolatedError,
                     UnsupportedProfileError)
from .profiles import Kernel, Profile, pair_profiles
from .qweight import (DEFAULT_GRID, RankOneQWeight, RankTwoQWeight,
                      SubordinationResult, TGrid, obs_lambda,
                      subordination_check, validate_rank_one,
                      validate_rank_two, weight_eval)
from .weights import (BoundaryWeight, WeightAtom, combination_in_H_exists,
                      divergent_direction_rank)

PROJECTION_TOL = 1e-9
PROPORTIONALITY_TOL = 1e-8


@dataclass
class PurityVerdict:
    verdict: Literal["QPure", "NotQPure", "Undecided"]
    failed_condition: Literal["TNotProjection", "MuNotQPure",
                              "DivergenceRankDeficient", "none"]
    witness: RankOneQWeight | None = None
    witness_subordination: SubordinationResult | None = None
    notes: list[str] = field(default_factory=list)


def is_projection(T: np.ndarray, tol: float = PROJECTION_TOL) -> bool:
    vals, _ = hermitian_eigen(T)
    return all(min(abs(v), abs(v - 1.0)) <= tol for v in vals)


def mu_qpure_test(mu: BoundaryWeight) -> Literal["true", "false", "unsupported"]:
    """q-purity of a positive boundary weight with power-exponential atoms.

    True iff the weight has a single atom, or no atom lies in H and no
    nonzero combination of the atoms lies in H.
    """
    atoms = [atom for _, atom in mu.terms]
    if len(atoms) <= 1:
        return "true"
    try:
        exists, _ = combination_in_H_exists(atoms)
    except UnsupportedProfileError:
        return "unsupported"
    return "false" if exists else "true"


def proportional_weights(mu: BoundaryWeight, nu: BoundaryWeight,
                         tol: float = PROPORTIONALITY_TOL) -> bool:
    """Whether nu = c mu for some c > 0 (matched atom bases)."""
    a = mu.coefficient_map()
    b = nu.coefficient_map()
    if set(a) != set(b):
        return False
    keys = list(a)
    ratios = [b[k] / a[k] for k in keys]
    return max(ratios) - min(ratios) <= tol * max(1.0, max(ratios))


def proportional_rank_one(qw: RankOneQWeight, other: RankOneQWeight,
                          tol: float = PROPORTIONALITY_TOL) -> bool:
    """Whether other = lambda * qw as a q-weight map (includes T direction)."""
    scale = np.linalg.norm(qw.T)
    if np.linalg.norm(other.T - qw.T) > tol * max(1.0, scale):
        # T is normalized to norm one in both, so direction must agree
        return False
    if other.mu.is_zero():
        return True
    return proportional_weights(qw.mu, other.mu, tol)


# ---------------------------------------------------------------------------
# witness constructions
# ---------------------------------------------------------------------------

def spectral_witness(qw: RankOneQWeight) -> tuple[RankOneQWeight, float]:
    """Witness for a non-projection T: T1 = F([s0, 1]) T, scaled maximally.

    s0 is the midpoint of the largest spectral gap of T inside (0, 1); the
    admissible scaling is lambda = (1 + mu(Lambda(T - T1)))^{-1}.
    """
    vals, vecs = hermitian_eigen(qw.T)
    vals = np.clip(np.real(vals), 0.0, None)
    distinct = sorted(set(np.round(vals, 12)))
    inner = [v for v in distinct if v > PROJECTION_TOL]
    if len(inner) < 2:
        raise PreconditionViolatedError("T has no spectral gap inside (0, 1)")
    gaps = [(inner[i + 1] - inner[i], i) for i in range(len(inner) - 1)]
    gap, idx = max(gaps)
    s0 = 0.5 * (inner[idx] + inner[idx + 1])
    keep = vals >= s0
    T1 = (vecs[:, keep] * vals[keep]) @ vecs[:, keep].conj().T
    T1 = T1 / np.linalg.norm(T1, 2)
    lam_max = 1.0 / (1.0 + weight_eval(qw.mu, obs_lambda(qw.T - T1)))
    return RankOneQWeight(T1, qw.mu.scaled(lam_max)), lam_max


def deficient_direction_witness(qw: RankOneQWeight) -> tuple[RankOneQWeight, float]:
    """Witness for condition (iii): remove a rank-one e <= T with
    mu(Lambda(e)) < infinity and scale by (1 + mu(Lambda(e)))^{-1}."""
    T = qw.T
    div_vecs = [T @ atom.vec() for _, atom in qw.mu.terms if atom.is_divergent()]
    vals, vecs = hermitian_eigen(T)
    range_cols = vecs[:, np.real(vals) > 0.5]
    if div_vecs:
        M = np.column_stack([range_cols.conj().T @ v for v in div_vecs])
        u_basis, svals, _ = np.linalg.svd(M)
        rank = int(np.sum(svals > 1e-10 * max(1.0, svals[0])))
        if rank == range_cols.shape[1]:
            raise PreconditionViolatedError("divergence meets every direction")
        u = range_cols @ u_basis[:, rank]
    else:
        u = range_cols[:, 0]
    e = np.outer(u, u.conj())
    T1 = T - e
    lam_max = 1.0 / (1.0 + weight_eval(qw.mu, obs_lambda(e)))
    return RankOneQWeight(T1, qw.mu.scaled(lam_max)), lam_max


def build_subordinate_from_rho(qw: RankOneQWeight,
                               rho_terms: list[tuple[float, WeightAtom]],
                               lam: float,
                               grid: TGrid = DEFAULT_GRID) -> RankOneQWeight:
    """eta(rho)(A) = rho(T) nu(A) with nu = lam (1 + rho(Lambda(T)))^{-1}(mu - rho).

    rho must be a bounded positive functional dominated by mu.  Domination
    is decided coefficient-wise on the matched atom basis; within a common
    vector ray group a rank-one Gram subtraction is also supported (used by
    the singular-cancellation witnesses).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    for _, atom in rho_terms:
        if not atom.in_H():
            raise NotDominatedError("rho must be bounded (atoms in H)")
    subtracted = subtract_weight(qw.mu, rho_terms)
    factor = lam / (1.0 + rho_lambda_value(rho_terms, qw.T))
    if factor == 0.0:
        return RankOneQWeight(qw.T, BoundaryWeight(qw.dim_k, ()))
    return RankOneQWeight(qw.T, subtracted.scaled(factor))


def rho_lambda_value(rho_terms: list[tuple[float, WeightAtom]],
                     T: np.ndarray) -> float:
    """rho(Lambda(T)) for a bounded functional given by diagonal atoms."""
    total = 0.0
    for coef, atom in rho_terms:
        v = atom.vec()
        val = pair_profiles(atom.profile, atom.profile, Kernel.EXP_NEG,
                            0.0, math.inf, same_atom=True)
        total += coef * float(np.real(np.vdot(v, np.asarray(T) @ v))) * float(np.real(val))
    return total


def subtract_weight(mu: BoundaryWeight,
                    rho_terms: list[tuple[float, WeightAtom]]) -> BoundaryWeight:
    """mu - rho as a positive weight (atom-matched subtraction)."""
    coeff = {atom.key(): [lam, atom] for lam, atom in mu.terms}
    for lam, atom in rho_terms:
        key = atom.key()
        if key not in coeff:
            raise NotDominatedError("rho atom outside the basis of mu")
        coeff[key][0] -= lam
        if coeff[key][0] < -1e-12:
            raise NotDominatedError("mu - rho has a negative coefficient")
    terms = [(lam, atom.vector, atom.profile)
             for lam, atom in (tuple(v) for v in coeff.values()) if lam > 1e-14]
    return BoundaryWeight.from_terms(mu.dim_k, terms)


def cancellation_witness_weight(mu: BoundaryWeight, coeffs: np.ndarray,
                                atoms: list[WeightAtom]
                                ) -> tuple[BoundaryWeight, list[tuple[float, WeightAtom]]]:
    """Subtract a small multiple of the H-member combination w = sum c_i h_i.

    Supported when the combination involves atoms sharing one vector ray;
    the ray group's diagonal coefficient matrix then absorbs the rank-one
    subtraction and is re-diagonalized into composite-profile atoms.
    """
    support = [i for i, c in enumerate(coeffs) if abs(c) > 1e-12]
    rays = {atoms[i].key()[0] for i in support}
    if len(rays) != 1:
        raise UnsupportedProfileError(
            "cancellation witness spans several vector rays")
    lam_map = {atom.key(): lam for lam, atom in mu.terms}
    group = [i for i in range(len(atoms)) if atoms[i].key()[0] in rays]
    idx = {i: g for g, i in enumerate(group)}
    n = len(group)
    C = np.zeros((n, n), dtype=complex)
    for i in group:
        C[idx[i], idx[i]] = lam_map[atoms[i].key()]
    u = np.zeros(n, dtype=complex)
    for i in support:
        u[idx[i]] = np.conjugate(coeffs[i])
    quad = float(np.real(np.vdot(u, np.linalg.solve(C, u))))
    eps = 0.5 / quad
    C_new = C - eps * np.outer(u, u.conj())
    vals, vecs = np.linalg.eigh(C_new)
    vector = atoms[group[0]].vec()
    new_terms: list[tuple[float, tuple, Profile]] = []
    for j in range(n):
        if vals[j] <= 1e-13:
            continue
        profile = Profile()
        for i in group:
            alpha = np.conjugate(vecs[idx[i], j])
            if abs(alpha) > 1e-14:
                profile = profile.plus(atoms[i].profile.scaled(alpha))
        new_terms.append((float(vals[j]), tuple(vector.tolist()), profile))
    # untouched atoms pass through
    for lam, atom in mu.terms:
        if atom.key()[0] not in rays:
            new_terms.append((lam, atom.vector, atom.profile))
    # the removed part eps <w, . w> as an explicit bounded atom
    from .weights import canonical_atom

    w_profile = Profile()
    for i in support:
        w_profile = w_profile.plus(atoms[i].profile.scaled(coeffs[i]))
    cf, w_atom = canonical_atom(tuple(vector.tolist()), w_profile, eps)
    removed = [(cf, w_atom)]
    reduced = BoundaryWeight.from_terms(mu.dim_k, new_terms)
    return reduced, removed


# ---------------------------------------------------------------------------
# the classifier
# ---------------------------------------------------------------------------

def classify_rank_one(qw: RankOneQWeight, grid: TGrid = DEFAULT_GRID
                      ) -> PurityVerdict:
    """Decide q-purity of a valid rank-one q-weight map, with witnesses."""
    report = validate_rank_one(qw.T, qw.mu)
    if not report.valid:
        raise PreconditionViolatedError(
            "classify_rank_one requires a valid q-weight: " + "; ".join(report.reasons))
    notes: list[str] = []

    if not is_projection(qw.T):
        witness, lam = spectral_witness(qw)
        sub = subordination_check(qw, witness, grid)
        notes.append(f"spectral witness with lambda = {lam:.6g}")
        return PurityVerdict("NotQPure", "TNotProjection", witness, sub, notes)

    mu_verdict = mu_qpure_test(qw.mu)
    if mu_verdict == "unsupported":
        notes.append("mu q-purity undecidable for the supplied profile family")
        return PurityVerdict("Undecided", "none", None, None, notes)
    if mu_verdict == "false":
        atoms = [atom for _, atom in qw.mu.terms]
        exists, coeffs = combination_in_H_exists(atoms)
        assert exists and coeffs is not None
        try:
            reduced, removed = cancellation_witness_weight(qw.mu, coeffs, atoms)
        except UnsupportedProfileError as exc:
            notes.append(f"witness construction unsupported: {exc}")
            return PurityVerdict("Undecided", "MuNotQPure", None, None, notes)
        factor = 1.0 / (1.0 + rho_lambda_value(removed, qw.T))
        witness = RankOneQWeight(qw.T, reduced.scaled(factor))
        sub = subordination_check(qw, witness, grid)
        notes.append("subtracted a bounded combination of the singular atoms")
        return PurityVerdict("NotQPure", "MuNotQPure", witness, sub, notes)

    rank_T = int(round(float(np.real(np.trace(qw.T)))))
    if rank_T > 1 and not divergent_direction_rank(qw.mu, qw.T):
        witness, lam = deficient_direction_witness(qw)
        sub = subordination_check(qw, witness, grid)
        notes.append(f"direction witness with lambda = {lam:.6g}")
        return PurityVerdict("NotQPure", "DivergenceRankDeficient",
                             witness, sub, notes)

    return PurityVerdict("QPure", "none", None, None, notes)


# ---------------------------------------------------------------------------
# range rank two is never q-pure
# ---------------------------------------------------------------------------

@dataclass
class RankTwoWitnessReport:
    eta: RankOneQWeight
    nu: RankOneQWeight
    eta_subordinate: SubordinationResult
    nu_subordinate: SubordinationResult
    eta_vs_nu: SubordinationResult
    nu_vs_eta: SubordinationResult
    incomparable: bool


def rank_two_witnesses(qw: RankTwoQWeight, grid: TGrid = DEFAULT_GRID,
                       rng: np.random.Generator | None = None
                       ) -> RankTwoWitnessReport:
    """eta(rho) = rho(e1)(mu1 - kappa1 mu2), nu(rho) = rho(e2)(mu2 - kappa2 mu1).

    Both are subordinate to qw and mutually incomparable when mu1 != mu2,
    certifying that qw is not q-pure.
    """
    report = validate_rank_two(qw, grid, rng)
    if not report.valid:
        raise PreconditionViolatedError(
            "rank_two_witnesses requires a valid rank-two map: "
            + "; ".join(report.reasons))
    if proportional_weights_or_equal(qw.mu1, qw.mu2):
        raise PreconditionViolatedError("mu1 = mu2: the map has range rank one")
    if report.kappa1 >= 1.0 - 1e-9 or report.kappa2 >= 1.0 - 1e-9:
        raise PreconditionViolatedError("kappa = 1 forces mu1 = mu2")
    w1 = subtract_scaled(qw.mu1, qw.mu2, report.kappa1)
    w2 = subtract_scaled(qw.mu2, qw.mu1, report.kappa2)
    eta = RankOneQWeight(qw.e1, w1)
    nu = RankOneQWeight(qw.e2, w2)
    eta_sub = subordination_check(qw, eta, grid)
    nu_sub = subordination_check(qw, nu, grid)
    eta_vs_nu = subordination_check(nu, eta, grid)
    nu_vs_eta = subordination_check(eta, nu, grid)
    return RankTwoWitnessReport(
        eta=eta, nu=nu, eta_subordinate=eta_sub, nu_subordinate=nu_sub,
        eta_vs_nu=eta_vs_nu, nu_vs_eta=nu_vs_eta,
        incomparable=not eta_vs_nu.holds and not nu_vs_eta.holds)


def proportional_weights_or_equal(mu: BoundaryWeight, nu: BoundaryWeight) -> bool:
    a = mu.coefficient_map()
    b = nu.coefficient_map()
    if set(a) != set(b):
        return False
    return all(abs(a[k] - b[k]) <= 1e-10 * max(1.0, a[k]) for k in a)


def subtract_scaled(mu: BoundaryWeight, nu: BoundaryWeight,
                    factor: float) -> BoundaryWeight:
    """mu - factor * nu on the shared atom basis (must stay positive)."""
    if factor <= 1e-14:
        return mu
    rho_terms = [(factor * lam, atom) for lam, atom in nu.terms]
    return subtract_weight(mu, rho_terms)
