"""Boundary expectations: the t -> 0 limit of Pi_t o Lambda.

For a q-weight map with finite range rank and trivial normal spine, the net
(Pi_t o Lambda) of completely positive contractions of B(C^k) clusters at a
boundary expectation L.  The raw net converges only logarithmically for the
canonical profiles, but each matrix entry is a rational function of a
computable divergence measure, so the limit is taken by rational
extrapolation in u(t) = 1/(1 + trace divergence); the residual curve of the
raw iterates against the extrapolated L is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cp_core import (CPMapFD, build_ce_algebra, frobenius,
                      is_completely_positive, is_cp_idempotent_contraction,
                      minimal_central_projections)
from .errors import NotTrivialSpineError, RankMismatchError
from .numerics import rational_extrapolate
from .qweight import (QWeightMap, RankOneQWeight, RankTwoQWeight,
                      gbr_sample, normal_spine_trivial, obs_lambda,
                      omega_breve_matrix, rank_two_x_matrix, truncated)
from .weights import BoundaryWeight, Observable, obs_id, obs_op

DEFAULT_T_SEQUENCE = tuple(10.0 ** (-n / 2.0) for n in range(15))
CONVERGENCE_TOL = 1e-7


@dataclass
class ExpectationResult:
    L: CPMapFD
    converged: bool
    residual_curve: list[tuple[float, float]]
    extrapolation_error: float
    axioms: dict = field(default_factory=dict)


def _lambda_map_matrix(qw: QWeightMap, t: float) -> np.ndarray:
    """(Pi_t o Lambda) as a k^2 x k^2 matrix on column-vectorized B(C^k)."""
    sample = gbr_sample(qw, t)
    k = sample.dim_k
    out = np.zeros((k * k, k * k), dtype=complex)
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[i, j] = 1.0
            out[:, j * k + i] = sample.evaluate(obs_lambda(E)).reshape(-1, order="F")
    return out


def _divergence_measure(qw: QWeightMap, t: float) -> float:
    if isinstance(qw, RankOneQWeight):
        return truncated(qw.mu, obs_lambda(qw.T), t)
    if isinstance(qw, RankTwoQWeight):
        X = rank_two_x_matrix(qw, t)
        return float(X[0, 0] + X[1, 1])
    return truncated(qw.omega1.mu, obs_lambda(qw.omega1.T), t) + \
        truncated(qw.omega2.mu, obs_lambda(qw.omega2.T), t)


def boundary_expectation(qw: QWeightMap,
                         t_sequence: tuple[float, ...] = DEFAULT_T_SEQUENCE,
                         extrapolation_nodes: int = 8) -> ExpectationResult:
    """Compute L = lim (Pi_t o Lambda) along a decreasing t sequence."""
    spine = normal_spine_trivial(qw)
    if not spine.trivial:
        raise NotTrivialSpineError("boundary expectations need a trivial spine")
    ts = sorted(t_sequence, reverse=True)
    k = qw.dim_k
    iterates = [(_divergence_measure(qw, t), _lambda_map_matrix(qw, t))
                for t in ts]
    us = np.array([1.0 / (1.0 + d) for d, _ in iterates])
    mats = [m for _, m in iterates]

    n = min(extrapolation_nodes, len(ts))
    limit = np.zeros((k * k, k * k), dtype=complex)
    max_err = 0.0
    for p in range(k * k):
        for q in range(k * k):
            ys = np.array([m[p, q] for m in mats])
            re, err_re = rational_extrapolate(us[-n:], np.real(ys[-n:]))
            im, err_im = rational_extrapolate(us[-n:], np.imag(ys[-n:]))
            limit[p, q] = re + 1j * im
            max_err = max(max_err, err_re, err_im)
    converged = max_err < CONVERGENCE_TOL
    L = _map_from_matrix(limit, k)
    residuals = [(float(t), float(np.linalg.norm(m - limit)))
                 for t, (_, m) in zip(ts, iterates)]
    axioms = verify_axioms(L, qw)
    return ExpectationResult(L=L, converged=converged,
                             residual_curve=residuals,
                             extrapolation_error=float(max_err), axioms=axioms)


def _map_from_matrix(mat: np.ndarray, k: int) -> CPMapFD:
    def fn(M: np.ndarray) -> np.ndarray:
        return (mat @ np.asarray(M, dtype=complex).reshape(-1, order="F")
                ).reshape(k, k, order="F")
    return CPMapFD.from_function(fn, k)


# ---------------------------------------------------------------------------
# axiom verification
# ---------------------------------------------------------------------------

def sample_observables(k: int, windows: tuple[float, ...] = (0.01, 0.3, 1.0),
                       rng: np.random.Generator | None = None,
                       extra: int = 8) -> list[Observable]:
    """Finite-valued probes of omega_breve: Lambda and M (x) I pieces."""
    mats = []
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[i, j] = 1.0
            mats.append(E)
    if rng is not None:
        for _ in range(extra):
            G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            mats.append(0.5 * (G + G.conj().T))
    obs: list[Observable] = []
    for t in windows:
        for M in mats:
            obs.append(obs_lambda(M, (t, math.inf)))
            obs.append(obs_op(M, (t, math.inf)))
        obs.append(obs_id(k, (t, math.inf)))
    return obs


def verify_axioms(L: CPMapFD, qw: QWeightMap,
                  samples: list[Observable] | None = None,
                  tol: float = 1e-6,
                  rng: np.random.Generator | None = None) -> dict:
    """The four boundary-expectation axioms, checked on samples."""
    k = qw.dim_k
    samples = sample_observables(k, rng=rng) if samples is None else samples
    cp = is_completely_positive(L, 1e-7)
    idem = is_cp_idempotent_contraction(L, tol)

    fixes = True
    images = []
    for obs in samples:
        val = omega_breve_matrix(qw, obs)
        images.append(val)
        err = frobenius(L.apply(val) - val)
        if err > tol * max(1.0, frobenius(val)):
            fixes = False
    # range(L) = range(omega_breve) by mutual span containment
    basis_L = _span_basis([L.apply(M) for M in _matrix_units(k)])
    basis_w = _span_basis(images)
    range_eq = _same_span(basis_L, basis_w, tol=1e-6)
    return {"cp": bool(cp), "fixes_range": bool(fixes),
            "range_equality": bool(range_eq),
            "idempotent_norm_one": bool(idem),
            "range_rank": len(basis_w)}


def _matrix_units(k: int) -> list[np.ndarray]:
    out = []
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[i, j] = 1.0
            out.append(E)
    return out


def _span_basis(mats: list[np.ndarray], tol: float = 1e-8) -> list[np.ndarray]:
    stack = np.column_stack([m.reshape(-1) for m in mats])
    u, svals, _ = np.linalg.svd(stack)
    if len(svals) == 0 or svals[0] < 1e-14:
        return []
    rank = int(np.sum(svals > tol * svals[0]))
    k = int(round(math.sqrt(stack.shape[0])))
    return [u[:, r].reshape(k, k) for r in range(rank)]


def _same_span(basis_a: list[np.ndarray], basis_b: list[np.ndarray],
               tol: float = 1e-6) -> bool:
    if len(basis_a) != len(basis_b):
        return False
    for X in basis_a:
        proj = sum(np.vdot(B, X) * B for B in basis_b)
        if frobenius(X - proj) > tol * max(1.0, frobenius(X)):
            return False
    return True


# ---------------------------------------------------------------------------
# standard form for range rank two
# ---------------------------------------------------------------------------

@dataclass
class StandardFormResult:
    e1: np.ndarray
    e2: np.ndarray
    mu1: BoundaryWeight
    mu2: BoundaryWeight
    unit_matches: bool
    box_verified: bool
    expectation: ExpectationResult


def standard_form_rank_two(qw: RankTwoQWeight,
                           box_grid: int = 21) -> StandardFormResult:
    """Minimal central projections of the Choi-Effros algebra of L.

    Returns e_1, e_2 with e_1 + e_2 = L(I) and reconstructed weights
    mu_j = nu_j o omega_breve, matched against the input atom data; the box
    condition 0 <= x1 e1 + x2 e2 <= I iff x1, x2 in [0, 1] is verified on a
    box_grid x box_grid parameter grid.
    """
    result = boundary_expectation(qw)
    alg = build_ce_algebra(result.L, tol=1e-6)
    if alg.dim != 2:
        raise RankMismatchError(f"Choi-Effros algebra has dimension {alg.dim}")
    projections = minimal_central_projections(alg)
    if len(projections) != 2:
        raise RankMismatchError("expected two minimal central projections")
    # order by overlap with the input pair
    p, q = projections
    if abs(np.vdot(qw.e1.reshape(-1), p.reshape(-1))) < \
            abs(np.vdot(qw.e1.reshape(-1), q.reshape(-1))):
        p, q = q, p
    # express the input operators over the new projections:
    # f_i = c_i1 e1 + c_i2 e2, then mu_j = sum_i c_ij w_i
    basis = np.column_stack([p.reshape(-1), q.reshape(-1)])
    coeffs = np.linalg.lstsq(basis, np.column_stack(
        [qw.e1.reshape(-1), qw.e2.reshape(-1)]), rcond=None)[0]
    coeffs = np.real(coeffs)
    mus = []
    for j in range(2):
        terms = []
        for i, mu in enumerate((qw.mu1, qw.mu2)):
            c = float(coeffs[j, i])
            if c < -1e-8:
                raise RankMismatchError("negative state coefficient")
            if c > 1e-12:
                terms.extend((c * lam, atom.vector, atom.profile)
                             for lam, atom in mu.terms)
        mus.append(BoundaryWeight.from_terms(qw.dim_k, terms))
    unit = result.L.apply(np.eye(qw.dim_k))
    unit_matches = frobenius(p + q - unit) <= 1e-6 * max(1.0, frobenius(unit))
    box = _box_grid_check(p, q, box_grid)
    return StandardFormResult(e1=p, e2=q, mu1=mus[0], mu2=mus[1],
                              unit_matches=unit_matches, box_verified=box,
                              expectation=result)


def _box_grid_check(e1: np.ndarray, e2: np.ndarray, n: int,
                    tol: float = 1e-7) -> bool:
    from .cp_core import is_psd

    k = e1.shape[0]
    eye = np.eye(k)
    xs = np.linspace(-0.5, 1.5, n)
    for x1 in xs:
        for x2 in xs:
            M = x1 * e1 + x2 * e2
            inside = is_psd(M, tol) and is_psd(eye - M, tol)
            expected = (-tol <= x1 <= 1 + tol) and (-tol <= x2 <= 1 + tol)
            on_edge = min(abs(x1), abs(x1 - 1.0)) < 1e-6 or \
                min(abs(x2), abs(x2 - 1.0)) < 1e-6
            if inside != expected and not on_edge:
                return False
    return True


# ---------------------------------------------------------------------------
# range rank trichotomy over C^2
# ---------------------------------------------------------------------------

@dataclass
class TrichotomyResult:
    rank: int
    consistent: bool
    q_pure_possible: bool


def range_rank_trichotomy(qw: QWeightMap,
                          rng: np.random.Generator | None = None,
                          threshold: float = 1e-8) -> TrichotomyResult:
    """Numerical range rank of omega_breve for a map over C^2.

    Consistency means rank in {1, 2, 4}; a q-pure unital verdict would
    additionally require rank in {1, 4}.
    """
    k = qw.dim_k
    if k != 2:
        raise RankMismatchError("trichotomy applies to maps over C^2")
    spine = normal_spine_trivial(qw)
    if not spine.trivial:
        raise NotTrivialSpineError("trichotomy requires a trivial spine")
    probes: list[np.ndarray] = []
    mats = _matrix_units(k)
    if rng is not None:
        for _ in range(32):
            G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            mats.append(0.5 * (G + G.conj().T))
    for t in (0.3, 1.0, 3.0):
        for M in mats:
            probes.append(omega_breve_matrix(qw, obs_lambda(M, (t, math.inf))))
            probes.append(omega_breve_matrix(qw, obs_op(M, (t, math.inf))))
    stack = np.column_stack([p.reshape(-1) for p in probes])
    svals = np.linalg.svd(stack, compute_uv=False)
    rank = int(np.sum(svals > threshold * max(svals[0], 1e-14)))
    return TrichotomyResult(rank=rank, consistent=rank in (1, 2, 4),
                            q_pure_possible=rank in (1, 4))
