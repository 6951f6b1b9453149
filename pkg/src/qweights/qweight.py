"""q-weight maps of range rank one and two, and assembled 2x2 direct sums.

A rank-one q-weight map is omega(rho)(A) = rho(T) mu(A) with T positive of
norm one and mu(I - Lambda(T)) <= 1.  Its generalized boundary
representation is

    pi_t(A) = mu|_t(A) / (1 + mu|_t(Lambda(T))) T.

Rank-two maps omega(rho) = rho(e1) mu1 + rho(e2) mu2 are handled through
the 2x2 truncation matrix X(t) with entries x_ij(t) = mu_i(Lambda(e_j)|_t),
and assembled maps through their block generalized boundary representation.
"For all t > 0" statements are certified on a finite geometric grid; every
report names the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .cp_core import is_psd, operator_norm
from .errors import (DimensionMismatchError, SingularSystemError,
                     UnsupportedWeightComparisonError)
from .weights import (BoundaryWeight, FunctionalForm, Observable,
                      obs_id, obs_id_minus_lambda, obs_lambda, obs_op,
                      weight_eval)

if TYPE_CHECKING:  # pragma: no cover
    from .corners import CornerData

NORM_TOL = 1e-9


@dataclass(frozen=True)
class TGrid:
    """Geometric evaluation grid in t."""

    t_min: float = 1e-6
    t_max: float = 10.0
    points: int = 24

    def __post_init__(self) -> None:
        if not (0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if self.points < 8:
            raise ValueError("need at least 8 grid points")

    def values(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.points)

    def describe(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "points": self.points}


DEFAULT_GRID = TGrid()


@dataclass
class RankOneQWeight:
    """omega(rho)(A) = rho(T) mu(A)."""

    T: np.ndarray
    mu: BoundaryWeight

    def __post_init__(self) -> None:
        self.T = np.asarray(self.T, dtype=complex)
        if self.T.shape != (self.mu.dim_k, self.mu.dim_k):
            raise DimensionMismatchError("T shape inconsistent with weight")

    @property
    def dim_k(self) -> int:
        return self.mu.dim_k


@dataclass
class RankTwoQWeight:
    """omega(rho)(A) = rho(e1) mu1(A) + rho(e2) mu2(A)."""

    e1: np.ndarray
    e2: np.ndarray
    mu1: BoundaryWeight
    mu2: BoundaryWeight

    def __post_init__(self) -> None:
        self.e1 = np.asarray(self.e1, dtype=complex)
        self.e2 = np.asarray(self.e2, dtype=complex)
        k = self.mu1.dim_k
        if self.mu2.dim_k != k or self.e1.shape != (k, k) or self.e2.shape != (k, k):
            raise DimensionMismatchError("inconsistent rank-two data")

    @property
    def dim_k(self) -> int:
        return self.mu1.dim_k


@dataclass
class AssembledQWeight:
    """2x2 block map [[omega1, gamma], [gamma*, omega2]] over K1 (+) K2.

    The diagonal blocks are rank-one maps over K1 and K2; the corner, when
    present, is range rank one with data (Q, tau, scale).
    """

    omega1: RankOneQWeight
    omega2: RankOneQWeight
    corner: "CornerData | None" = None

    @property
    def dim_k(self) -> int:
        return self.omega1.dim_k + self.omega2.dim_k

    def block_dims(self) -> tuple[int, int]:
        return (self.omega1.dim_k, self.omega2.dim_k)


QWeightMap = RankOneQWeight | RankTwoQWeight | AssembledQWeight


# ---------------------------------------------------------------------------
# validity
# ---------------------------------------------------------------------------

@dataclass
class QWeightReport:
    valid: bool
    unital: bool
    normalization: float
    reasons: list[str] = field(default_factory=list)


def validate_rank_one(T: np.ndarray, mu: BoundaryWeight,
                      tol: float = NORM_TOL) -> QWeightReport:
    """T positive of norm one, mu positive, mu(I - Lambda(T)) <= 1."""
    T = np.asarray(T, dtype=complex)
    reasons: list[str] = []
    if not is_psd(T, tol):
        reasons.append("T is not positive semidefinite")
    norm_T = operator_norm(T)
    if abs(norm_T - 1.0) > 1e-6:
        reasons.append(f"||T|| = {norm_T:.6g} differs from 1")
    normalization = weight_eval(mu, obs_id_minus_lambda(T))
    if normalization > 1.0 + tol:
        reasons.append(f"mu(I - Lambda(T)) = {normalization:.6g} exceeds 1")
    k = mu.dim_k
    is_identity = bool(np.allclose(T, np.eye(k), atol=1e-9))
    unital = is_identity and abs(normalization - 1.0) <= 1e-6
    return QWeightReport(valid=not reasons, unital=unital,
                         normalization=float(normalization), reasons=reasons)


def box_condition_samples(e1: np.ndarray, e2: np.ndarray,
                          grid_points: int = 9, tol: float = 1e-9) -> bool:
    """Sampled check of: 0 <= x1 e1 + x2 e2 <= I iff x1, x2 in [0, 1]."""
    k = e1.shape[0]
    eye = np.eye(k)
    xs = np.linspace(-0.5, 1.5, grid_points)
    for x1 in xs:
        for x2 in xs:
            M = x1 * e1 + x2 * e2
            inside = is_psd(M, tol) and is_psd(eye - M, tol)
            expected = (-tol <= x1 <= 1 + tol) and (-tol <= x2 <= 1 + tol)
            boundary = min(abs(x1), abs(x1 - 1)) < 1e-6 or \
                min(abs(x2), abs(x2 - 1)) < 1e-6
            if inside != expected and not boundary:
                return False
    return True


# ---------------------------------------------------------------------------
# generalized boundary representation samples
# ---------------------------------------------------------------------------

def truncated(mu: BoundaryWeight, obs: Observable, t: float) -> float:
    return weight_eval(mu, obs.truncated(t))


def gbr_rank_one(qw: RankOneQWeight, t: float) -> FunctionalForm:
    """pi_t(A) = c(t) mu|_t(A) T with c(t) = 1/(1 + mu|_t(Lambda(T)))."""
    denom = 1.0 + truncated(qw.mu, obs_lambda(qw.T), t)
    form = FunctionalForm(qw.dim_k, t)
    c = 1.0 / denom
    for lam, atom in qw.mu.terms:
        form.add(atom, atom, c * lam, qw.T)
    return form


def rank_two_x_matrix(qw: RankTwoQWeight, t: float) -> np.ndarray:
    """X(t) with x_ij = mu_i(Lambda(e_j)|_t)."""
    obs1 = obs_lambda(qw.e1)
    obs2 = obs_lambda(qw.e2)
    return np.array([
        [truncated(qw.mu1, obs1, t), truncated(qw.mu1, obs2, t)],
        [truncated(qw.mu2, obs1, t), truncated(qw.mu2, obs2, t)]])


def gbr_rank_two(qw: RankTwoQWeight, t: float,
                 tol: float = 1e-12) -> FunctionalForm:
    """pi_t(A) = l1_t(A) e1 + l2_t(A) e2 from the 2x2 truncated system."""
    X = rank_two_x_matrix(qw, t)
    det = float((1 + X[0, 0]) * (1 + X[1, 1]) - X[0, 1] * X[1, 0])
    if abs(det) < tol:
        raise SingularSystemError(f"det(I + X({t})) = {det}")
    inv = np.array([[1 + X[1, 1], -X[0, 1]], [-X[1, 0], 1 + X[0, 0]]]) / det
    form = FunctionalForm(qw.dim_k, t)
    for j, mu in ((0, qw.mu1), (1, qw.mu2)):
        for lam, atom in mu.terms:
            target = inv[0, j] * qw.e1 + inv[1, j] * qw.e2
            form.add(atom, atom, lam, target)
    return form


def gbr_assembled(qw: AssembledQWeight, t: float) -> FunctionalForm:
    """Block GBR of [[omega1, gamma], [gamma*, omega2]]."""
    from .cp_core import BlockStructure

    k1, k2 = qw.block_dims()
    blocks = BlockStructure((k1, k2))
    k = k1 + k2
    form = FunctionalForm(k, t)

    def lift(atom, block):
        from .weights import WeightAtom
        v = np.zeros(k, dtype=complex)
        off = 0 if block == 0 else k1
        v[off:off + len(atom.vector)] = atom.vec()
        return WeightAtom(tuple(v.tolist()), atom.profile)

    c1 = 1.0 / (1.0 + truncated(qw.omega1.mu, obs_lambda(qw.omega1.T), t))
    for lam, atom in qw.omega1.mu.terms:
        form.add(lift(atom, 0), lift(atom, 0), c1 * lam,
                 blocks.embed(qw.omega1.T, 0, 0))
    c2 = 1.0 / (1.0 + truncated(qw.omega2.mu, obs_lambda(qw.omega2.T), t))
    for lam, atom in qw.omega2.mu.terms:
        form.add(lift(atom, 1), lift(atom, 1), c2 * lam,
                 blocks.embed(qw.omega2.T, 1, 1))
    if qw.corner is not None:
        corner = qw.corner
        tau_lam = corner.corner_weight_lambda(t)  # scale * tau|_t(Lambda(Q))
        denom = 1.0 + tau_lam
        if abs(denom) < 1e-12:
            raise SingularSystemError("1 + tau|_t(Lambda(Q)) vanished")
        ctau = corner.scale / denom
        Qfull = blocks.embed(corner.Q, 0, 1)
        for coef, bra, ket in corner.tau_pairs:
            form.add(lift(bra, 0), lift(ket, 1), ctau * coef, Qfull)
            form.add(lift(ket, 1), lift(bra, 0),
                     np.conjugate(ctau * coef), Qfull.conj().T)
    return form


def gbr_sample(qw: QWeightMap, t: float) -> FunctionalForm:
    if isinstance(qw, RankOneQWeight):
        return gbr_rank_one(qw, t)
    if isinstance(qw, RankTwoQWeight):
        return gbr_rank_two(qw, t)
    return gbr_assembled(qw, t)


def gbr_cp_norm(qw: QWeightMap, t: float) -> float:
    """||pi_t(I)|| (CP maps attain their norm at the identity)."""
    sample = gbr_sample(qw, t)
    return operator_norm(sample.evaluate(obs_id(sample.dim_k)))


# ---------------------------------------------------------------------------
# rank-two validity machinery
# ---------------------------------------------------------------------------

@dataclass
class RankTwoReport:
    valid: bool
    kappa1: float
    kappa2: float
    kappa1_error: float
    kappa2_error: float
    h1_curve: list[tuple[float, float]]
    h2_curve: list[tuple[float, float]]
    det_curve: list[tuple[float, float]]
    point_xy: tuple[float, float]
    in_parallelogram: bool
    weight_inequalities: str  # "exact", "sampled", or "failed"
    reasons: list[str] = field(default_factory=list)
    grid: dict = field(default_factory=dict)


def h_functions(qw: RankTwoQWeight, t: float) -> tuple[float, float]:
    X = rank_two_x_matrix(qw, t)
    h1 = X[0, 1] / (1.0 + X[1, 1])
    h2 = X[1, 0] / (1.0 + X[0, 0])
    return float(h1), float(h2)


def weight_dominates(mu: BoundaryWeight, nu: BoundaryWeight, factor: float,
                     grid: TGrid, rng: np.random.Generator | None = None,
                     samples: int = 64, truncations: int = 6,
                     tol: float = 1e-9) -> tuple[bool, str]:
    """Check mu >= factor * nu as positive weights.

    Exact when nu's atoms all appear in mu's atom basis (coefficient-wise
    domination is then equivalent for linearly independent atoms);
    otherwise sampled over random PSD observables at several truncations.
    """
    if factor <= tol:
        return True, "exact"
    mu_map = mu.coefficient_map()
    nu_map = nu.coefficient_map()
    if set(nu_map) <= set(mu_map):
        ok = all(mu_map[key] >= factor * lam - tol for key, lam in nu_map.items())
        return ok, "exact"
    if rng is None:
        raise UnsupportedWeightComparisonError(
            "atom bases differ and no sampler was provided")
    k = mu.dim_k
    ts = np.geomspace(grid.t_min, grid.t_max, truncations)
    for _ in range(samples):
        G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        M = G @ G.conj().T
        M /= operator_norm(M)
        for t in ts:
            for obs in (obs_lambda(M), obs_op(M)):
                diff = truncated(mu, obs, t) - factor * truncated(nu, obs, t)
                if diff < -tol:
                    return False, "sampled"
    return True, "sampled"


def validate_rank_two(qw: RankTwoQWeight, grid: TGrid = DEFAULT_GRID,
                      rng: np.random.Generator | None = None,
                      tol: float = NORM_TOL) -> RankTwoReport:
    reasons: list[str] = []
    for name, e in (("e1", qw.e1), ("e2", qw.e2)):
        if not is_psd(e, tol):
            reasons.append(f"{name} is not positive semidefinite")
        if abs(operator_norm(e) - 1.0) > 1e-6:
            reasons.append(f"||{name}|| differs from 1")
    if not is_psd(np.eye(qw.dim_k) - qw.e1 - qw.e2, tol):
        reasons.append("e1 + e2 exceeds the identity")
    if not box_condition_samples(qw.e1, qw.e2):
        reasons.append("box condition 0 <= x1 e1 + x2 e2 <= I fails")

    ts = grid.values()
    h1_curve, h2_curve, det_curve = [], [], []
    for t in ts:
        h1, h2 = h_functions(qw, t)
        X = rank_two_x_matrix(qw, t)
        det = float((1 + X[0, 0]) * (1 + X[1, 1]) - X[0, 1] * X[1, 0])
        h1_curve.append((float(t), h1))
        h2_curve.append((float(t), h2))
        det_curve.append((float(t), det))
    kappa1 = h1_curve[0][1]
    kappa2 = h2_curve[0][1]
    err1 = abs(h1_curve[0][1] - h1_curve[1][1])
    err2 = abs(h2_curve[0][1] - h2_curve[1][1])
    if kappa1 > 1.0 + 1e-9 or kappa2 > 1.0 + 1e-9:
        reasons.append("kappa exceeds 1 on the grid")

    sum_e = qw.e1 + qw.e2
    x = weight_eval(qw.mu1, obs_id_minus_lambda(sum_e))
    y = weight_eval(qw.mu2, obs_id_minus_lambda(sum_e))

    ineq_mode = "exact"
    near_one = kappa1 > 1.0 - 1e-9 or kappa2 > 1.0 - 1e-9
    if near_one:
        # kappa = 1 forces mu1 = mu2 and x = y in [0, 1]
        mu1_map = qw.mu1.coefficient_map()
        mu2_map = qw.mu2.coefficient_map()
        same = set(mu1_map) == set(mu2_map) and all(
            abs(mu1_map[key] - mu2_map[key]) <= 1e-9 for key in mu1_map)
        if not same:
            reasons.append("kappa = 1 requires mu1 = mu2")
        in_par = abs(x - y) <= 1e-8 and (-tol <= x <= 1 + tol)
        if not in_par:
            reasons.append("kappa = 1 requires x = y in [0, 1]")
    else:
        ok1, mode1 = weight_dominates(qw.mu1, qw.mu2, kappa1, grid, rng)
        ok2, mode2 = weight_dominates(qw.mu2, qw.mu1, kappa2, grid, rng)
        ineq_mode = "sampled" if "sampled" in (mode1, mode2) else "exact"
        if not ok1:
            reasons.append("weight inequality mu1 >= kappa1 mu2 fails")
        if not ok2:
            reasons.append("weight inequality mu2 >= kappa2 mu1 fails")
        in_par = (-tol <= x - kappa1 * y <= 1 - kappa1 + tol) and \
            (-tol <= y - kappa2 * x <= 1 - kappa2 + tol)
        if not in_par:
            reasons.append(
                f"(x, y) = ({x:.6g}, {y:.6g}) outside the parallelogram")
    if not ok_curves(h1_curve) or not ok_curves(h2_curve):
        reasons.append("h-functions fail to be non-increasing on the grid")
    return RankTwoReport(valid=not reasons, kappa1=kappa1, kappa2=kappa2,
                         kappa1_error=err1, kappa2_error=err2,
                         h1_curve=h1_curve, h2_curve=h2_curve,
                         det_curve=det_curve, point_xy=(float(x), float(y)),
                         in_parallelogram=in_par,
                         weight_inequalities=ineq_mode, reasons=reasons,
                         grid=grid.describe())


def ok_curves(curve: Sequence[tuple[float, float]], tol: float = 1e-10) -> bool:
    """Non-increasing in t within tolerance."""
    vals = [v for _, v in curve]
    return all(vals[i] >= vals[i + 1] - tol * max(1.0, abs(vals[i]))
               for i in range(len(vals) - 1))


# ---------------------------------------------------------------------------
# subordination and normal spine
# ---------------------------------------------------------------------------

@dataclass
class SubordinationResult:
    holds: bool
    first_failure: dict | None
    min_eigenvalues: list[tuple[float, float]]


def subordination_check(omega: QWeightMap, eta: QWeightMap,
                        grid: TGrid = DEFAULT_GRID,
                        tol: float = 1e-9) -> SubordinationResult:
    """eta <=_q omega iff pi_t - xi_t is completely positive on the grid.

    The difference of GBR samples is a finite-rank map over the combined
    atom basis; complete positivity is the positivity of its block matrix.
    """
    if omega_dim(omega) != omega_dim(eta):
        raise DimensionMismatchError("q-weights live over different spaces")
    curve: list[tuple[float, float]] = []
    failure: dict | None = None
    for t in grid.values():
        diff = gbr_sample(omega, t).minus(gbr_sample(eta, t))
        m = diff.min_block_eigenvalue()
        scale = max(1.0, float(np.linalg.norm(diff.block_matrix())))
        curve.append((float(t), m))
        if m < -tol * scale and failure is None:
            failure = {"t": float(t), "min_eigenvalue": m,
                       "observable": "block functional matrix over the atom basis"}
    return SubordinationResult(holds=failure is None, first_failure=failure,
                               min_eigenvalues=curve)


def omega_dim(qw: QWeightMap) -> int:
    return qw.dim_k


@dataclass
class SpineReport:
    trivial: bool
    evidence: list[tuple[float, float]]


def normal_spine_trivial(qw: QWeightMap, grid: TGrid = DEFAULT_GRID,
                         probe_s: float = 1.0) -> SpineReport:
    """Whether the normal spine vanishes (type II_0 signature).

    Analytically: the Lambda-divergence must meet every diagonal direction
    (rank one: mu(Lambda(T)) = inf; rank two: both diagonal entries of X
    diverge).  Numerically evidenced by ||pi_t(E(s, infty))|| -> 0.
    """
    if isinstance(qw, RankOneQWeight):
        trivial = _lambda_divergent(qw.mu, qw.T)
    elif isinstance(qw, RankTwoQWeight):
        trivial = _lambda_divergent(qw.mu1, qw.e1) and \
            _lambda_divergent(qw.mu2, qw.e2)
    else:
        trivial = _lambda_divergent(qw.omega1.mu, qw.omega1.T) and \
            _lambda_divergent(qw.omega2.mu, qw.omega2.T)
    evidence = []
    for t in grid.values():
        if t >= probe_s:
            continue
        sample = gbr_sample(qw, t)
        val = operator_norm(sample.evaluate(obs_id(sample.dim_k,
                                                   (probe_s, math.inf))))
        evidence.append((float(t), float(val)))
    return SpineReport(trivial=trivial, evidence=evidence)


def _lambda_divergent(mu: BoundaryWeight, T: np.ndarray) -> bool:
    """mu(Lambda(T)) = +inf: some divergent atom meets T."""
    T = np.asarray(T, dtype=complex)
    for lam, atom in mu.terms:
        if not atom.is_divergent():
            continue
        v = atom.vec()
        if float(np.real(np.vdot(v, T @ v))) > 1e-12:
            return True
    return False


# ---------------------------------------------------------------------------
# dmb2 consistency: omega|_t = pi_t (I - Lambda pi_t)^{-1}
# ---------------------------------------------------------------------------

def reconstruct_truncated_weight(qw: QWeightMap, t: float, obs: Observable,
                                 term_tol: float = 1e-14,
                                 max_terms: int = 500) -> np.ndarray:
    """Evaluate omega_breve|_t(A) through the geometric series of dmb2.

    omega_breve|_t = pi_t o (I - Lambda pi_t)^{-1} = sum_n pi_t (Lambda pi_t)^n,
    truncated when terms fall below term_tol.
    """
    sample = gbr_sample(qw, t)
    k = sample.dim_k
    total = np.zeros((k, k), dtype=complex)
    current_obs = obs
    extra: np.ndarray | None = None
    for _ in range(max_terms):
        if extra is None:
            term = sample.evaluate(current_obs)
        else:
            term = sample.evaluate(obs_lambda(extra, (t, math.inf)))
        total += term
        if operator_norm(term) < term_tol * max(1.0, operator_norm(total)):
            break
        extra = term
    return total


def omega_breve_form(qw: QWeightMap) -> FunctionalForm:
    """The dualized map omega_breve as an (untruncated) functional form.

    Evaluate it only on observables pairing finitely (windows with t > 0 or
    the 1 - e^{-x} kernel); the GBR prefactors are absent here.
    """
    if isinstance(qw, RankOneQWeight):
        form = FunctionalForm(qw.dim_k, 0.0)
        for lam, atom in qw.mu.terms:
            form.add(atom, atom, lam, qw.T)
        return form
    if isinstance(qw, RankTwoQWeight):
        form = FunctionalForm(qw.dim_k, 0.0)
        for e, mu in ((qw.e1, qw.mu1), (qw.e2, qw.mu2)):
            for lam, atom in mu.terms:
                form.add(atom, atom, lam, e)
        return form
    from .cp_core import BlockStructure
    from .weights import WeightAtom

    k1, k2 = qw.block_dims()
    blocks = BlockStructure((k1, k2))
    k = k1 + k2
    form = FunctionalForm(k, 0.0)

    def lift(atom: WeightAtom, block: int) -> WeightAtom:
        v = np.zeros(k, dtype=complex)
        off = 0 if block == 0 else k1
        v[off:off + len(atom.vector)] = atom.vec()
        return WeightAtom(tuple(v.tolist()), atom.profile)

    for lam, atom in qw.omega1.mu.terms:
        form.add(lift(atom, 0), lift(atom, 0), lam, blocks.embed(qw.omega1.T, 0, 0))
    for lam, atom in qw.omega2.mu.terms:
        form.add(lift(atom, 1), lift(atom, 1), lam, blocks.embed(qw.omega2.T, 1, 1))
    if qw.corner is not None:
        corner = qw.corner
        Qfull = blocks.embed(corner.Q, 0, 1)
        for coef, bra, ket in corner.tau_pairs:
            form.add(lift(bra, 0), lift(ket, 1), corner.scale * coef, Qfull)
            form.add(lift(ket, 1), lift(bra, 0),
                     np.conjugate(corner.scale * coef), Qfull.conj().T)
    return form


def omega_breve_matrix(qw: QWeightMap, obs: Observable) -> np.ndarray:
    """Direct evaluation of omega_breve(A) for a structured observable."""
    return omega_breve_form(qw).evaluate(obs)
