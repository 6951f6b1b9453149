"""Finite-dimensional completely positive map machinery.

Maps between matrix algebras are stored through their Choi matrices
(C[(i,k),(j,l)] = phi(E_ij)_{kl}), so complete positivity is positive
semidefiniteness of one Hermitian matrix.  On top of that sit idempotent
contractions, Choi-Effros algebras with their x <> y = L(xy) product,
minimal central projections, and the 2x2 matrix-unit extraction used for
corner analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (DegenerateRangeError, IndexOutOfRangeError,
                     NotCPError, NotHermitianError, NotInRangeError,
                     NumericalDegeneracyError, PreconditionViolatedError)

TOL_EIG = 1e-12
TOL_PSD = 1e-9
TOL_RANGE = 1e-8
TOL_CLUSTER = 1e-7


# ---------------------------------------------------------------------------
# matrix predicates and eigensolver
# ---------------------------------------------------------------------------

def frobenius(M: np.ndarray) -> float:
    return float(np.linalg.norm(M))


def is_hermitian(M: np.ndarray, tol: float = TOL_PSD) -> bool:
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, frobenius(M))
    return frobenius(M - M.conj().T) <= tol * scale


def hermitian_eigen(M: np.ndarray, tol: float = TOL_PSD
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian M."""
    M = np.asarray(M, dtype=complex)
    if not is_hermitian(M, tol):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    return vals, vecs


def is_psd(M: np.ndarray, tol: float = TOL_PSD) -> bool:
    M = np.asarray(M, dtype=complex)
    if not is_hermitian(M, tol):
        return False
    vals = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    return bool(vals.min(initial=0.0) >= -tol * max(1.0, frobenius(M)))


def operator_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=complex), ord=2))


# ---------------------------------------------------------------------------
# CP maps via Choi matrices
# ---------------------------------------------------------------------------

@dataclass
class CPMapFD:
    """Linear map B(C^a) -> B(C^b) stored as its ab x ab Choi matrix."""

    in_dim: int
    out_dim: int
    choi: np.ndarray

    def __post_init__(self) -> None:
        self.choi = np.asarray(self.choi, dtype=complex)
        ab = self.in_dim * self.out_dim
        if self.choi.shape != (ab, ab):
            raise ValueError("Choi matrix has wrong shape")

    @staticmethod
    def from_function(fn: Callable[[np.ndarray], np.ndarray],
                      in_dim: int, out_dim: int | None = None) -> "CPMapFD":
        out_dim = in_dim if out_dim is None else out_dim
        choi = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
        for i in range(in_dim):
            for j in range(in_dim):
                E = np.zeros((in_dim, in_dim), dtype=complex)
                E[i, j] = 1.0
                block = np.asarray(fn(E), dtype=complex)
                for k in range(out_dim):
                    for l in range(out_dim):
                        choi[i * out_dim + k, j * out_dim + l] = block[k, l]
        return CPMapFD(in_dim, out_dim, choi)

    @staticmethod
    def identity(dim: int) -> "CPMapFD":
        return CPMapFD.from_function(lambda A: A, dim)

    def apply(self, M: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=complex)
        a, b = self.in_dim, self.out_dim
        C = self.choi.reshape(a, b, a, b)
        return np.einsum("ij,ikjl->kl", M, C)

    def compose(self, other: "CPMapFD") -> "CPMapFD":
        """self o other."""
        if other.out_dim != self.in_dim:
            raise ValueError("composition dimension mismatch")
        return CPMapFD.from_function(lambda A: self.apply(other.apply(A)),
                                     other.in_dim, self.out_dim)

    def plus(self, other: "CPMapFD") -> "CPMapFD":
        if (other.in_dim, other.out_dim) != (self.in_dim, self.out_dim):
            raise ValueError("sum dimension mismatch")
        return CPMapFD(self.in_dim, self.out_dim, self.choi + other.choi)

    def scaled(self, factor: complex) -> "CPMapFD":
        return CPMapFD(self.in_dim, self.out_dim, factor * self.choi)

    def map_matrix(self) -> np.ndarray:
        """The (out^2 x in^2) matrix acting on column-vectorized inputs."""
        a, b = self.in_dim, self.out_dim
        out = np.zeros((b * b, a * a), dtype=complex)
        for i in range(a):
            for j in range(a):
                E = np.zeros((a, a), dtype=complex)
                E[i, j] = 1.0
                out[:, j * a + i] = self.apply(E).reshape(-1, order="F")
        return out


def is_completely_positive(phi: CPMapFD, tol: float = TOL_PSD) -> bool:
    return is_psd(phi.choi, tol)


def cp_norm(phi: CPMapFD, tol: float = TOL_PSD) -> float:
    """Norm of a CP map, attained at the identity."""
    if not is_completely_positive(phi, tol):
        raise NotCPError("cp_norm requires a completely positive map")
    return operator_norm(phi.apply(np.eye(phi.in_dim)))


def is_cp_idempotent_contraction(L: CPMapFD, tol: float = TOL_PSD) -> bool:
    if L.in_dim != L.out_dim:
        return False
    if not is_completely_positive(L, tol):
        return False
    m = L.map_matrix()
    if frobenius(m @ m - m) > tol * max(1.0, frobenius(m)):
        return False
    norm = operator_norm(L.apply(np.eye(L.in_dim)))
    return norm <= tol or abs(norm - 1.0) <= tol


# ---------------------------------------------------------------------------
# range machinery and the Choi-Effros product
# ---------------------------------------------------------------------------

def range_basis(L: CPMapFD, tol: float = TOL_RANGE) -> list[np.ndarray]:
    """Orthonormal basis (Frobenius inner product) of range(L)."""
    k = L.in_dim
    vecs = []
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[i, j] = 1.0
            vecs.append(L.apply(E).reshape(-1))
    A = np.column_stack(vecs)
    u, svals, _ = np.linalg.svd(A)
    rank = int(np.sum(svals > tol * max(1.0, svals[0] if len(svals) else 1.0)))
    return [u[:, r].reshape(k, k) for r in range(rank)]


def project_onto_span(basis: Sequence[np.ndarray], X: np.ndarray) -> np.ndarray:
    out = np.zeros_like(np.asarray(X, dtype=complex))
    for b in basis:
        out += np.vdot(b, X) * b
    return out


def in_range(L: CPMapFD, X: np.ndarray, tol: float = TOL_RANGE,
             basis: Sequence[np.ndarray] | None = None) -> bool:
    basis = range_basis(L) if basis is None else basis
    X = np.asarray(X, dtype=complex)
    resid = frobenius(X - project_onto_span(basis, X))
    return resid <= tol * max(1.0, frobenius(X))


def choi_effros_product(L: CPMapFD, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x <> y = L(xy) for x, y in range(L)."""
    basis = range_basis(L)
    for M in (x, y):
        if not in_range(L, M, basis=basis):
            raise NotInRangeError("operand not in range(L)")
    return L.apply(np.asarray(x) @ np.asarray(y))


@dataclass
class CEAlgebra:
    """Choi-Effros algebra carried by the range of an idempotent L."""

    projection: CPMapFD
    basis: list[np.ndarray]
    unit: np.ndarray
    structure: np.ndarray  # structure[i, j, :] = coords of b_i <> b_j

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coords(self, X: np.ndarray) -> np.ndarray:
        return np.array([np.vdot(b, X) for b in self.basis])

    def from_coords(self, c: np.ndarray) -> np.ndarray:
        out = np.zeros_like(self.basis[0])
        for ci, b in zip(c, self.basis):
            out += ci * b
        return out

    def product(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self.projection.apply(np.asarray(X) @ np.asarray(Y))

    def left_multiplication(self, X: np.ndarray) -> np.ndarray:
        """Matrix of y |-> X <> y in basis coordinates."""
        cols = [self.coords(self.product(X, b)) for b in self.basis]
        return np.column_stack(cols)


def build_ce_algebra(L: CPMapFD, tol: float = TOL_PSD) -> CEAlgebra:
    if not is_cp_idempotent_contraction(L, tol):
        raise PreconditionViolatedError("L is not a CP idempotent contraction")
    basis = range_basis(L)
    if not basis:
        raise DegenerateRangeError("range of L is zero")
    unit = L.apply(np.eye(L.in_dim))
    d = len(basis)
    structure = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            prod = L.apply(basis[i] @ basis[j])
            coords = np.array([np.vdot(b, prod) for b in basis])
            resid = prod - sum(c * b for c, b in zip(coords, basis))
            if frobenius(resid) > TOL_RANGE * max(1.0, frobenius(prod)):
                raise NumericalDegeneracyError("product table fails to close")
            structure[i, j] = coords
    return CEAlgebra(L, basis, unit, structure)


def minimal_central_projections(alg: CEAlgebra,
                                cluster_tol: float = TOL_CLUSTER
                                ) -> list[np.ndarray]:
    """Minimal central projections of a Choi-Effros algebra (dim <= 16)."""
    if alg.dim > 16:
        raise PreconditionViolatedError("algebra dimension exceeds desk scale")
    d = alg.dim
    # center: coefficient vectors x with sum_i x_i [b_i, c] = 0 for all c
    A = np.zeros((d * d, d), dtype=complex)
    for i in range(d):
        for jc, c in enumerate(alg.basis):
            block = alg.coords(alg.product(alg.basis[i], c)) \
                - alg.coords(alg.product(c, alg.basis[i]))
            A[jc * d:(jc + 1) * d, i] = block
    _, svals, vh = np.linalg.svd(A)
    rank = int(np.sum(svals > 1e-9 * max(1.0, svals[0] if len(svals) else 1.0)))
    center_coords = vh[rank:].conj().T  # d x z
    z = center_coords.shape[1]
    if z == 0:
        raise NumericalDegeneracyError("empty center")
    center = [alg.from_coords(center_coords[:, i]) for i in range(z)]
    # hermitize the center basis (the involution is the matrix adjoint)
    herm: list[np.ndarray] = []
    for X in center:
        for Y in (X + X.conj().T, 1j * (X - X.conj().T)):
            if frobenius(Y) < 1e-10:
                continue
            resid = Y - sum(np.vdot(h, Y) * h for h in herm) if herm else Y
            if frobenius(resid) > 1e-8:
                herm.append(resid / frobenius(resid))
    if not herm:
        raise NumericalDegeneracyError("center has no Hermitian part")
    # generic self-adjoint central element separates the minimal projections;
    # retry with reweighted combinations if an unlucky draw fails to separate
    last_error: Exception | None = None
    for attempt in range(3):
        weights = np.array([math.sqrt(2.0 + i) + 0.37 * attempt * (i + 1)
                            for i in range(len(herm))])
        zgen = sum(w * h for w, h in zip(weights, herm))
        try:
            return _spectral_split(alg, zgen, cluster_tol)
        except NumericalDegeneracyError as exc:
            last_error = exc
    raise last_error if last_error else NumericalDegeneracyError("no split")


def _spectral_split(alg: CEAlgebra, zgen: np.ndarray, cluster_tol: float
                    ) -> list[np.ndarray]:
    lm = alg.left_multiplication(zgen)
    vals = np.real(np.linalg.eigvals(lm))
    clusters: list[float] = []
    for v in sorted(vals):
        if not clusters or abs(v - clusters[-1]) > cluster_tol * max(1.0, abs(v)):
            clusters.append(v)
    # spectral projections of zgen by Lagrange interpolation under <>
    projections: list[np.ndarray] = []
    for lam in clusters:
        others = [m for m in clusters if m != lam]
        P = alg.unit.copy()
        for m in others:
            P = alg.product(P, (zgen - m * alg.unit)) / (lam - m)
        if frobenius(alg.product(P, P) - P) > 1e-6 * max(1.0, frobenius(P)):
            raise NumericalDegeneracyError("interpolation failed to separate")
        if frobenius(P) < 1e-8:
            continue
        projections.append(0.5 * (P + P.conj().T))
    total = sum(projections)
    if frobenius(total - alg.unit) > 1e-6 * max(1.0, frobenius(alg.unit)):
        raise NumericalDegeneracyError("projections do not resolve the unit")
    return projections


# ---------------------------------------------------------------------------
# block structure (generalized Schur maps)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockStructure:
    """Orthogonal decomposition C^k = K_1 (+) K_2 (+) ... by dimension."""

    dims: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.dims)

    def offset(self, i: int) -> int:
        if not 0 <= i < len(self.dims):
            raise IndexOutOfRangeError(f"block index {i}")
        return sum(self.dims[:i])

    def embed(self, X: np.ndarray, i: int, j: int) -> np.ndarray:
        """X^{ij}: place X in block (i, j) of a k x k matrix."""
        X = np.asarray(X, dtype=complex)
        out = np.zeros((self.total, self.total), dtype=complex)
        oi, oj = self.offset(i), self.offset(j)
        out[oi:oi + self.dims[i], oj:oj + self.dims[j]] = X
        return out

    def extract(self, M: np.ndarray, i: int, j: int) -> np.ndarray:
        oi, oj = self.offset(i), self.offset(j)
        return np.asarray(M)[oi:oi + self.dims[i], oj:oj + self.dims[j]]


def block_component(phi: CPMapFD, blocks: BlockStructure, i: int, j: int
                    ) -> Callable[[np.ndarray], np.ndarray]:
    """phi_{ij}(X) = [phi(X^{ij})]_{ij} as a callable on block matrices."""
    if blocks.total != phi.in_dim or blocks.total != phi.out_dim:
        raise IndexOutOfRangeError("blocks inconsistent with map dimensions")

    def component(X: np.ndarray) -> np.ndarray:
        return blocks.extract(phi.apply(blocks.embed(X, i, j)), i, j)

    return component


class NoCorner:
    """Sentinel returned when the off-diagonal block of L vanishes."""

    def __repr__(self) -> str:  # pragma: no cover
        return "NoCorner"


NO_CORNER = NoCorner()


def extract_matrix_units(L: CPMapFD, blocks: BlockStructure,
                         tol: float = 1e-9) -> list[np.ndarray] | NoCorner:
    """Matrix units of the Choi-Effros algebra of a 2-block idempotent L.

    Requires dim(range L_11) = dim(range L_22) = 1.  If L_12 vanishes the
    sentinel NO_CORNER is returned; otherwise units e_11, e_12, e_21, e_22
    satisfying e_ij <> e_kl = delta_jk e_il, e_ij* = e_ji and
    e_11 + e_22 = L(I).
    """
    if len(blocks.dims) != 2:
        raise PreconditionViolatedError("need a 2-block structure")
    d1, d2 = blocks.dims
    # diagonal corner range ranks
    for idx, d in ((0, d1), (1, d2)):
        comp = block_component(L, blocks, idx, idx)
        vecs = []
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[i, j] = 1.0
                vecs.append(comp(E).reshape(-1))
        svals = np.linalg.svd(np.column_stack(vecs), compute_uv=False)
        rank = int(np.sum(svals > 1e-9 * max(1.0, svals[0])))
        if rank != 1:
            raise PreconditionViolatedError(
                f"diagonal corner {idx} has range rank {rank}, need 1")
    # probe the off-diagonal block
    comp12 = block_component(L, blocks, 0, 1)
    B0 = None
    best = 0.0
    for i in range(d1):
        for j in range(d2):
            E = np.zeros((d1, d2), dtype=complex)
            E[i, j] = 1.0
            cand = comp12(E)
            norm = operator_norm(cand)
            if norm > best:
                best = norm
                B0 = cand
    if B0 is None or best <= tol:
        return NO_CORNER
    B0 = B0 / operator_norm(B0)
    u = blocks.embed(B0, 0, 1)
    u = L.apply(u)  # fixes range representative
    u = u / operator_norm(u)
    e12 = u
    e21 = u.conj().T
    e11 = L.apply(e12 @ e21)
    e22 = L.apply(e21 @ e12)
    return [e11, e12, e21, e22]


def verify_matrix_units(L: CPMapFD, units: Sequence[np.ndarray],
                        tol: float = 1e-9) -> float:
    """Max deviation over the ten matrix-unit relations under <>."""
    e = {(1, 1): units[0], (1, 2): units[1], (2, 1): units[2], (2, 2): units[3]}
    dev = 0.0
    for (i, j) in e:
        for (k, l) in e:
            prod = L.apply(e[(i, j)] @ e[(k, l)])
            expected = e[(i, l)] if j == k else np.zeros_like(prod)
            dev = max(dev, frobenius(prod - expected))
    for (i, j) in e:
        dev = max(dev, frobenius(e[(i, j)].conj().T - e[(j, i)]))
    unit = L.apply(np.eye(L.in_dim))
    dev = max(dev, frobenius(e[(1, 1)] + e[(2, 2)] - unit))
    return dev


# ---------------------------------------------------------------------------
# extractor criterion for assembled block maps
# ---------------------------------------------------------------------------

def assemble_block_map(P1: np.ndarray, P2: np.ndarray, Q: np.ndarray,
                       sigma: CPMapFD) -> CPMapFD:
    """phi(A) = [[s11(A) P1, s12(A) Q], [s21(A) Q*, s22(A) P2]] on K (+) K."""
    k = np.asarray(P1).shape[0]
    blocks = BlockStructure((k, k))
    Q = np.asarray(Q, dtype=complex)

    def phi(A: np.ndarray) -> np.ndarray:
        S = sigma.apply(A)
        out = np.zeros((2 * k, 2 * k), dtype=complex)
        out += blocks.embed(S[0, 0] * np.asarray(P1), 0, 0)
        out += blocks.embed(S[0, 1] * Q, 0, 1)
        out += blocks.embed(S[1, 0] * Q.conj().T, 1, 0)
        out += blocks.embed(S[1, 1] * np.asarray(P2), 1, 1)
        return out

    return CPMapFD.from_function(phi, sigma.in_dim, 2 * k)


def extractor_check(P1: np.ndarray, P2: np.ndarray, Q: np.ndarray,
                    sigma: CPMapFD, tol: float = TOL_PSD) -> bool:
    """P1 Q P2 = Q, QQ* <= P1, Q*Q <= P2 and sigma completely positive.

    Equivalent to complete positivity of the assembled block map.
    """
    P1 = np.asarray(P1, dtype=complex)
    P2 = np.asarray(P2, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    if frobenius(P1 @ Q @ P2 - Q) > tol * max(1.0, frobenius(Q)):
        return False
    if not is_psd(P1 - Q @ Q.conj().T, tol):
        return False
    if not is_psd(P2 - Q.conj().T @ Q, tol):
        return False
    return is_completely_positive(sigma, tol)
