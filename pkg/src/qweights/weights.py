"""Positive boundary weights as finite sums of vector functionals.

A weight atom is h(x) = g(x) v with g a scalar profile and v a unit vector
in C^k; a boundary weight is a positive sum

    mu(A) = sum_i lambda_i <h_i, A h_i>.

Weights are evaluated against structured observables: multiplication
operators of the form  w(x) M  restricted to a window [t, s), where w is one
of the kernels 1, e^{-x}, 1 - e^{-x} and M acts on C^k.  Divergent values
are returned as math.inf (positive sums only); divergent cross pairings
raise DivergentCrossError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (DimensionMismatchError, DivergentCrossError,
                     UnsupportedProfileError)
from .profiles import (AnyProfile, GridSampledProfile, Kernel, Profile,
                       pair_profiles, pairing_diverges)

_VEC_TOL = 1e-12


# ---------------------------------------------------------------------------
# atoms and weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightAtom:
    """h(x) = g(x) v with ||v|| = 1."""

    vector: tuple[complex, ...]
    profile: AnyProfile

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=complex)
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("atom vector must be unit-normalized")

    @property
    def dim_k(self) -> int:
        return len(self.vector)

    def vec(self) -> np.ndarray:
        return np.asarray(self.vector, dtype=complex)

    def key(self) -> tuple:
        return (tuple((round(z.real, 12), round(z.imag, 12)) for z in self.vector),
                self.profile.key())

    def is_divergent(self) -> bool:
        """Whether int e^{-x} |g|^2 dx diverges at the origin."""
        return self.profile.order_at_zero() <= -0.5

    def in_H(self) -> bool:
        return self.profile.in_H()

    def primitive_components(self) -> list[tuple[complex, "WeightAtom"]]:
        """Decompose over primitive atoms (single-term or canonical profiles).

        Primitive atoms with distinct keys are linearly independent, which
        makes the block positivity criterion on functional forms exact even
        when composite-profile atoms overlap linearly.
        """
        if isinstance(self.profile, GridSampledProfile):
            return [(1.0, self)]
        out: list[tuple[complex, WeightAtom]] = []
        if abs(self.profile.canonical_amp) > 1e-14:
            out.append((self.profile.canonical_amp,
                        WeightAtom(self.vector, Profile(1.0, ()))))
        for term in self.profile.terms:
            if abs(term.amp) > 1e-14:
                prim = Profile(0.0, (type(term)(1.0, term.p, term.s),))
                out.append((term.amp, WeightAtom(self.vector, prim)))
        return out


def canonical_atom(vector: Sequence[complex], profile: AnyProfile,
                   coefficient: float = 1.0) -> tuple[float, WeightAtom]:
    """Normalize (coefficient, vector, profile) to the canonical atom form.

    The profile's leading amplitude and the vector's norm and global phase
    are folded into the coefficient, so that structurally equal atoms get
    equal keys and can be merged.
    """
    v = np.asarray(vector, dtype=complex)
    if isinstance(profile, Profile):
        if abs(profile.canonical_amp) > 0:
            scalar = profile.canonical_amp
        elif profile.terms:
            scalar = profile.terms[0].amp
        else:
            raise ValueError("zero profile in atom")
        profile = profile.scaled(1.0 / scalar)
        v = v * scalar
    norm = np.linalg.norm(v)
    if norm < _VEC_TOL:
        raise ValueError("zero vector in atom")
    v = v / norm
    idx = int(np.argmax(np.abs(v) > _VEC_TOL))
    phase = v[idx] / abs(v[idx])
    v = v * np.conjugate(phase)
    coeff = coefficient * float(norm) ** 2
    return coeff, WeightAtom(tuple(v.tolist()), profile)


@dataclass(frozen=True)
class BoundaryWeight:
    """Positive weight mu(A) = sum_i lambda_i <h_i, A h_i>."""

    dim_k: int
    terms: tuple[tuple[float, WeightAtom], ...]

    def __post_init__(self) -> None:
        for lam, atom in self.terms:
            if lam <= 0:
                raise ValueError("weight coefficients must be positive")
            if atom.dim_k != self.dim_k:
                raise DimensionMismatchError("atom dimension mismatch")

    @staticmethod
    def from_terms(dim_k: int,
                   terms: Iterable[tuple[float, Sequence[complex], AnyProfile]]
                   ) -> "BoundaryWeight":
        merged: dict[tuple, tuple[float, WeightAtom]] = {}
        for lam, vector, profile in terms:
            coeff, atom = canonical_atom(vector, profile, lam)
            key = atom.key()
            if key in merged:
                prev, _ = merged[key]
                merged[key] = (prev + coeff, atom)
            else:
                merged[key] = (coeff, atom)
        return BoundaryWeight(dim_k, tuple(merged.values()))

    def scaled(self, factor: float) -> "BoundaryWeight":
        if factor == 0.0:
            return BoundaryWeight(self.dim_k, ())
        if factor < 0:
            raise ValueError("weights stay positive")
        return BoundaryWeight(self.dim_k,
                              tuple((lam * factor, atom) for lam, atom in self.terms))

    def plus(self, other: "BoundaryWeight") -> "BoundaryWeight":
        if other.dim_k != self.dim_k:
            raise DimensionMismatchError("dimension mismatch")
        return BoundaryWeight.from_terms(
            self.dim_k,
            [(lam, atom.vector, atom.profile) for lam, atom in self.terms]
            + [(lam, atom.vector, atom.profile) for lam, atom in other.terms])

    def coefficient_map(self) -> dict[tuple, float]:
        return {atom.key(): lam for lam, atom in self.terms}

    def is_zero(self) -> bool:
        return not self.terms


# ---------------------------------------------------------------------------
# structured observables
# ---------------------------------------------------------------------------

class ObservableKind(Enum):
    ID = "id"
    LAMBDA = "lambda"
    OP_TENSOR_ID = "op_tensor_id"
    ID_MINUS_LAMBDA = "id_minus_lambda"


@dataclass(frozen=True)
class Observable:
    """Structured observable on B(K (x) L^2(0, infty)), windowed to [t, s)."""

    kind: ObservableKind
    matrix: tuple[tuple[complex, ...], ...] | None
    window: tuple[float, float]
    dim_k: int

    def __post_init__(self) -> None:
        t, s = self.window
        if t < 0 or s < t:
            raise ValueError("window must satisfy 0 <= t <= s")

    def mat(self) -> np.ndarray:
        if self.matrix is None:
            return np.eye(self.dim_k, dtype=complex)
        return np.asarray(self.matrix, dtype=complex)

    def truncated(self, t: float) -> "Observable":
        lo, hi = self.window
        return Observable(self.kind, self.matrix, (max(lo, t), hi), self.dim_k)

    def pieces(self) -> list[tuple[Kernel, np.ndarray]]:
        """Decomposition into (kernel, matrix) multiplication pieces."""
        k = self.dim_k
        eye = np.eye(k, dtype=complex)
        if self.kind is ObservableKind.ID:
            return [(Kernel.ONE, eye)]
        if self.kind is ObservableKind.LAMBDA:
            return [(Kernel.EXP_NEG, self.mat())]
        if self.kind is ObservableKind.OP_TENSOR_ID:
            return [(Kernel.ONE, self.mat())]
        # I - Lambda(T), split into two positive pieces when T <= I:
        # (1 - e^{-x}) I + e^{-x} (I - T)
        return [(Kernel.ONE_MINUS_EXP, eye), (Kernel.EXP_NEG, eye - self.mat())]


def _as_rows(matrix: np.ndarray) -> tuple[tuple[complex, ...], ...]:
    return tuple(tuple(complex(z) for z in row) for row in np.asarray(matrix, dtype=complex))


def obs_id(dim_k: int, window: tuple[float, float] = (0.0, math.inf)) -> Observable:
    return Observable(ObservableKind.ID, None, window, dim_k)


def obs_lambda(matrix: np.ndarray, window: tuple[float, float] = (0.0, math.inf)) -> Observable:
    matrix = np.asarray(matrix, dtype=complex)
    return Observable(ObservableKind.LAMBDA, _as_rows(matrix), window, matrix.shape[0])


def obs_op(matrix: np.ndarray, window: tuple[float, float] = (0.0, math.inf)) -> Observable:
    matrix = np.asarray(matrix, dtype=complex)
    return Observable(ObservableKind.OP_TENSOR_ID, _as_rows(matrix), window, matrix.shape[0])


def obs_id_minus_lambda(matrix: np.ndarray,
                        window: tuple[float, float] = (0.0, math.inf)) -> Observable:
    matrix = np.asarray(matrix, dtype=complex)
    return Observable(ObservableKind.ID_MINUS_LAMBDA, _as_rows(matrix), window,
                      matrix.shape[0])


# ---------------------------------------------------------------------------
# evaluation (spec ops: pair_integral, weight_eval, pair_eval)
# ---------------------------------------------------------------------------

def pair_integral(g1: AnyProfile, g2: AnyProfile, kernel: Kernel,
                  window: tuple[float, float]) -> complex | float:
    """int_t^s conj(g1) g2 w dx with w the chosen kernel.

    Returns math.inf for positive diverging diagonals (g1 == g2 at t = 0);
    raises DivergentCrossError for diverging cross pairings.
    """
    t, s = window
    same = g1.key() == g2.key() if hasattr(g1, "key") else g1 is g2
    return pair_profiles(g1, g2, kernel, t, s, same_atom=same)


def weight_eval(mu: BoundaryWeight, obs: Observable) -> float:
    """mu(E(t,s) A E(t,s)) for a structured observable A; math.inf allowed."""
    if obs.dim_k != mu.dim_k:
        raise DimensionMismatchError(
            f"observable dim {obs.dim_k} vs weight dim {mu.dim_k}")
    t, s = obs.window
    total = 0.0
    for kernel, M in obs.pieces():
        scale = max(1.0, float(np.linalg.norm(M)))
        for lam, atom in mu.terms:
            v = atom.vec()
            coef = lam * float(np.real(np.vdot(v, M @ v)))
            if abs(coef) < 1e-13 * scale * lam:
                continue
            if pairing_diverges(atom.profile, atom.profile, kernel, t, s):
                if coef < 0:
                    raise DivergentCrossError("signed divergent contribution")
                return math.inf
            val = pair_profiles(atom.profile, atom.profile, kernel, t, s,
                                same_atom=True)
            total += coef * float(np.real(val))
    return total


def pair_eval(bra: Sequence[tuple[complex, WeightAtom]],
              ket: Sequence[WeightAtom], obs: Observable) -> complex:
    """Sesquilinear evaluation sum_k c_k <h_k^bra, A h_k^ket>."""
    if len(bra) != len(ket):
        raise DimensionMismatchError("bra/ket lists must have equal length")
    t, s = obs.window
    total: complex = 0.0
    for (coef, batom), katom in zip(bra, ket):
        if batom.dim_k != obs.dim_k or katom.dim_k != obs.dim_k:
            raise DimensionMismatchError("atom dimension mismatch")
        for kernel, M in obs.pieces():
            mcoef = complex(np.vdot(batom.vec(), M @ katom.vec()))
            if abs(coef * mcoef) < 1e-18:
                continue
            same = batom.key() == katom.key()
            val = pair_profiles(batom.profile, katom.profile, kernel, t, s,
                                same_atom=same)
            if val == math.inf:
                raise DivergentCrossError("divergent pairing in pair_eval")
            total += coef * mcoef * val
    return total


# ---------------------------------------------------------------------------
# membership and divergence classification
# ---------------------------------------------------------------------------

def is_unbounded(mu: BoundaryWeight) -> bool:
    """True iff mu|_t(I) diverges as t -> 0+ (some atom outside H)."""
    return any(not atom.in_H() for _, atom in mu.terms)


def h_membership(profile: AnyProfile) -> str:
    """'in_H' or 'in_Hq_only' for a supported profile."""
    return "in_H" if profile.in_H() else "in_Hq_only"


def combination_in_H_exists(atoms: Sequence[WeightAtom]
                            ) -> tuple[bool, np.ndarray | None]:
    """Decide whether a nonzero combination sum c_i g_i v_i lies in H.

    The only singular term of x^p e^{-sx} at the origin is the leading
    monomial (p + 1 > 0), so membership in H reduces to cancelling, per
    singular exponent, the vector-valued leading coefficients.  Returns a
    witness coefficient vector when one exists; combinations that vanish
    identically as functions do not count.
    """
    for atom in atoms:
        if isinstance(atom.profile, GridSampledProfile):
            raise UnsupportedProfileError("grid-sampled atoms are not decidable")
    n = len(atoms)
    if n == 0:
        return False, None
    for i, atom in enumerate(atoms):
        if atom.in_H():
            c = np.zeros(n, dtype=complex)
            c[i] = 1.0
            return True, c
    # all atoms singular: cancellation constraints per singular exponent
    k = atoms[0].dim_k
    sing_rows: list[np.ndarray] = []
    zero_rows: list[np.ndarray] = []
    sing_exponents = sorted({q for atom in atoms
                             for q in atom.profile.singular_content()})
    for q in sing_exponents:
        row_block = np.zeros((k, n), dtype=complex)
        for i, atom in enumerate(atoms):
            coef = atom.profile.singular_content().get(q, 0.0)
            row_block[:, i] = coef * atom.vec()
        sing_rows.append(row_block)
    # the combination vanishes identically iff it cancels per (profile key,
    # exponent) fine structure; distinct profiles are linearly independent,
    # so identical-profile groups are the only source of identical zeros
    groups: dict[tuple, list[int]] = {}
    for i, atom in enumerate(atoms):
        groups.setdefault(atom.profile.key(), []).append(i)
    for idxs in groups.values():
        row_block = np.zeros((k, n), dtype=complex)
        for i in idxs:
            row_block[:, i] = atoms[i].vec()
        zero_rows.append(row_block)
    A = np.vstack(sing_rows) if sing_rows else np.zeros((0, n))
    Z = np.vstack(zero_rows)
    ker_A = _null_space(A)
    if ker_A.shape[1] == 0:
        return False, None
    # pick kernel element of A not in kernel of Z
    ZK = Z @ ker_A
    col_norms = np.linalg.norm(ZK, axis=0)
    j = int(np.argmax(col_norms))
    if col_norms[j] < 1e-10:
        return False, None
    return True, ker_A[:, j]


def _null_space(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if A.shape[0] == 0:
        return np.eye(A.shape[1], dtype=complex)
    _, svals, vh = np.linalg.svd(A)
    rank = int(np.sum(svals > tol * max(1.0, svals[0] if len(svals) else 1.0)))
    return vh[rank:].conj().T


def divergent_direction_rank(mu: BoundaryWeight, T: np.ndarray) -> bool:
    """Whether mu(Lambda(uu*)) = infinity for every unit u in range(T).

    T must be an orthogonal projection.  Equivalent to the vectors
    {T v_i : atom i divergent} spanning range(T).
    """
    T = np.asarray(T, dtype=complex)
    rank_T = int(round(float(np.real(np.trace(T)))))
    div_vecs = [T @ atom.vec() for lam, atom in mu.terms if atom.is_divergent()]
    if not div_vecs:
        return False
    M = np.column_stack(div_vecs)
    svals = np.linalg.svd(M, compute_uv=False)
    rank_div = int(np.sum(svals > 1e-10 * max(1.0, svals[0])))
    return rank_div == rank_T


# ---------------------------------------------------------------------------
# functional forms (finite-rank maps built from weight pairings)
# ---------------------------------------------------------------------------

@dataclass
class FunctionalForm:
    """Finite-rank map  A |-> sum coef_e <h_bra, A h_ket> target_e.

    This is the common representation of generalized boundary representation
    samples and their differences.  Complete positivity is equivalent to
    positive semidefiniteness of the block matrix [M_ab] indexed by the
    deduplicated atom list (atoms with distinct keys are linearly
    independent profiles, so the criterion is exact).
    """

    dim_k: int
    t: float
    entries: list[tuple[WeightAtom, WeightAtom, complex, np.ndarray]] = field(
        default_factory=list)

    def add(self, bra: WeightAtom, ket: WeightAtom, coef: complex,
            target: np.ndarray) -> None:
        self.entries.append((bra, ket, complex(coef), np.asarray(target, dtype=complex)))

    def minus(self, other: "FunctionalForm") -> "FunctionalForm":
        if other.dim_k != self.dim_k:
            raise DimensionMismatchError("dimension mismatch")
        out = FunctionalForm(self.dim_k, max(self.t, other.t))
        out.entries = list(self.entries) + [
            (b, k, -c, m) for b, k, c, m in other.entries]
        return out

    def evaluate(self, obs: Observable) -> np.ndarray:
        obs = obs.truncated(self.t)
        out = np.zeros((self.dim_k, self.dim_k), dtype=complex)
        for bra, ket, coef, target in self.entries:
            val = 0.0 + 0.0j
            for kernel, M in obs.pieces():
                mcoef = complex(np.vdot(bra.vec(), M @ ket.vec()))
                if abs(mcoef) < 1e-18:
                    continue
                same = bra.key() == ket.key()
                val += mcoef * pair_profiles(bra.profile, ket.profile, kernel,
                                             *obs.window, same_atom=same)
            out += coef * val * target
        return out

    def block_matrix(self) -> np.ndarray:
        """[M_ab] over the primitive atom basis: the map is CP iff PSD."""
        atoms: dict[tuple, int] = {}
        decomposed = []
        for bra, ket, coef, target in self.entries:
            bra_parts = bra.primitive_components()
            ket_parts = ket.primitive_components()
            decomposed.append((bra_parts, ket_parts, coef, target))
            for _, atom in bra_parts + ket_parts:
                key = atom.key()
                if key not in atoms:
                    atoms[key] = len(atoms)
        n = len(atoms)
        k = self.dim_k
        H = np.zeros((n * k, n * k), dtype=complex)
        for bra_parts, ket_parts, coef, target in decomposed:
            for beta_b, pb in bra_parts:
                a = atoms[pb.key()]
                for beta_k, pk in ket_parts:
                    b = atoms[pk.key()]
                    H[a * k:(a + 1) * k, b * k:(b + 1) * k] += \
                        np.conjugate(beta_b) * beta_k * coef * target
        return H

    def min_block_eigenvalue(self) -> float:
        H = self.block_matrix()
        if H.size == 0:
            return 0.0
        H = 0.5 * (H + H.conj().T)
        return float(np.min(np.linalg.eigvalsh(H)))

    def is_cp(self, tol: float = 1e-9) -> bool:
        H = self.block_matrix()
        if H.size == 0:
            return True
        scale = max(1.0, float(np.linalg.norm(H)))
        return self.min_block_eigenvalue() >= -tol * scale
