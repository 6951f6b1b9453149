"""Seeded generators of valid q-weight maps over C^2 (desk-scale fixtures)."""

from __future__ import annotations

import math

import numpy as np

from .corners import corner_candidate
from .profiles import Profile, PowerTerm, Kernel, pair_profiles, powers_canonical
from .qweight import (AssembledQWeight, QWeightMap, RankOneQWeight,
                      RankTwoQWeight, validate_rank_one, validate_rank_two)
from .weights import BoundaryWeight

KINDS = ("rank_one", "rank_two", "rank_four")


def random_unitary(rng: np.random.Generator, k: int) -> np.ndarray:
    G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    q, r = np.linalg.qr(G)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def generate_qweight(rng: np.random.Generator,
                     kind: str | None = None) -> QWeightMap:
    """A valid q-weight map over C^2 with trivial normal spine."""
    kind = kind if kind is not None else KINDS[int(rng.integers(len(KINDS)))]
    if kind == "rank_one":
        return _rank_one(rng)
    if kind == "rank_two":
        return _rank_two(rng)
    if kind == "rank_four":
        return _rank_four(rng)
    raise ValueError(f"unknown kind {kind}")


def _rank_one(rng: np.random.Generator) -> RankOneQWeight:
    can = powers_canonical()
    U = random_unitary(rng, 2)
    u1, u2 = U[:, 0], U[:, 1]
    if rng.random() < 0.5:
        # T = I with canonical atoms along an orthonormal pair
        T = np.eye(2, dtype=complex)
        c1 = float(rng.uniform(0.2, 0.6))
        c2 = float(rng.uniform(0.2, min(0.95 - c1, 0.4) + 0.0001))
        terms = [(c1, tuple(u1.tolist()), can), (c2, tuple(u2.tolist()), can)]
    else:
        # T = uu* with divergence inside range(T); optional bounded atom
        T = np.outer(u1, u1.conj())
        c = float(rng.uniform(0.3, 0.9))
        terms = [(c, tuple(u1.tolist()), can)]
        if rng.random() < 0.5:
            p = float(rng.choice([-0.75, -0.5]))
            extra = float(rng.uniform(0.01, 0.05))
            terms.append((extra, tuple(u1.tolist()),
                          Profile(0.0, (PowerTerm(1.0, p, 2.0),))))
    mu = BoundaryWeight.from_terms(2, terms)
    qw = RankOneQWeight(T, mu)
    report = validate_rank_one(T, mu)
    if not report.valid:
        # rescale below the normalization bound and retry once
        mu = mu.scaled(0.9 / max(report.normalization, 1.0))
        qw = RankOneQWeight(T, mu)
    return qw


def _rank_two(rng: np.random.Generator) -> RankTwoQWeight:
    can = powers_canonical()
    for _ in range(50):
        U = random_unitary(rng, 2)
        u1, u2 = U[:, 0], U[:, 1]
        e1 = np.outer(u1, u1.conj())
        e2 = np.outer(u2, u2.conj())
        alpha = float(rng.uniform(0.25, 0.6))
        delta = float(rng.uniform(0.25, 0.6))
        q = float(rng.uniform(0.0, 0.8))
        r = float(rng.uniform(0.0, 0.8))
        beta = q * delta
        gamma = r * alpha
        if alpha + beta > 0.95 or gamma + delta > 0.95:
            continue
        mu1 = BoundaryWeight.from_terms(
            2, [(alpha, tuple(u1.tolist()), can), (beta, tuple(u2.tolist()), can)]
        ) if beta > 1e-9 else BoundaryWeight.from_terms(
            2, [(alpha, tuple(u1.tolist()), can)])
        mu2 = BoundaryWeight.from_terms(
            2, [(gamma, tuple(u1.tolist()), can), (delta, tuple(u2.tolist()), can)]
        ) if gamma > 1e-9 else BoundaryWeight.from_terms(
            2, [(delta, tuple(u2.tolist()), can)])
        qw = RankTwoQWeight(e1, e2, mu1, mu2)
        if validate_rank_two(qw, rng=rng).valid:
            return qw
    raise RuntimeError("failed to generate a valid rank-two map")


def _rank_four(rng: np.random.Generator) -> AssembledQWeight:
    can = powers_canonical()
    mu0 = BoundaryWeight.from_terms(1, [(1.0, (1.0,), can)])
    omega = RankOneQWeight(np.array([[1.0]]), mu0)
    a = float(rng.uniform(0.1, 0.6))
    s_decay = float(rng.uniform(0.6, 2.5))
    comp = Profile(1.0, (PowerTerm(a, 0.0, s_decay),))
    norm = float(np.real(pair_profiles(comp, comp, Kernel.ONE_MINUS_EXP,
                                       0.0, math.inf, same_atom=True)))
    s = 1.0 / math.sqrt(norm)
    nu = BoundaryWeight.from_terms(1, [(s * s, (1.0,), comp)])
    eta = RankOneQWeight(np.array([[1.0]]), nu)
    corner = corner_candidate(omega, eta, np.array([[1.0]]), s)
    return AssembledQWeight(omega, eta, corner)
