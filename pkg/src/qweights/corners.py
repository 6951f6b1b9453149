"""q-corners between range-rank-one q-weight maps.

A corner candidate between omega(rho) = rho(T1) mu and eta(rho) = rho(T2) nu
is built from a unitary U with U T1 U* = T2, a number z > 0 and correction
functions d_k in H: the corner functional is gamma(rho) = lambda rho(Q) tau
with Q = T1 U*, tau the cross pairing of the atom lists, r the e^{-x} mass
of the corrections and lambda = 2z / (1 + z^2 + r).

Verification tracks h(t) = sqrt(a(t) b(t)) / (1 + gamma_w|_t(Lambda(Q))):
for a genuine q-corner |h| is non-increasing with 1 <= |h(t)| <= kappa, and
the limiting 2x2 functional matrix with off-diagonal kappa gamma_w is
completely positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cp_core import is_psd, operator_norm
from .errors import (IllDefinedHError, MisalignedError,
                     NotSquareSummableError, PreconditionViolatedError)
from .profiles import Kernel, pair_profiles
from .purity import classify_rank_one
from .qweight import (DEFAULT_GRID, AssembledQWeight, RankOneQWeight, TGrid,
                      gbr_sample, obs_lambda, obs_op, subordination_check,
                      truncated, validate_rank_one)
from .weights import WeightAtom, is_unbounded

H_TOL = 1e-9


@dataclass
class CornerData:
    """Off-diagonal corner gamma(rho) = scale * rho(Q) tau."""

    Q: np.ndarray  # k1 x k2
    tau_pairs: list[tuple[complex, WeightAtom, WeightAtom]]  # (coef, bra, ket)
    scale: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.Q = np.asarray(self.Q, dtype=complex)

    def tau_value(self, kernel_matrix: np.ndarray, kernel: Kernel,
                  t: float, s: float = math.inf) -> complex:
        """tau|_[t,s)(w(x) M) for a k1 x k2 matrix M."""
        total: complex = 0.0
        for coef, bra, ket in self.tau_pairs:
            mcoef = complex(np.vdot(bra.vec(), kernel_matrix @ ket.vec()))
            if abs(coef * mcoef) < 1e-18:
                continue
            same = bra.key() == ket.key()
            total += coef * mcoef * pair_profiles(
                bra.profile, ket.profile, kernel, t, s, same_atom=same)
        return total

    def corner_weight_lambda(self, t: float) -> complex:
        """scale * tau|_t(Lambda(Q))."""
        return self.scale * self.tau_value(self.Q, Kernel.EXP_NEG, t)

    def scaled(self, factor: float) -> "CornerData":
        return CornerData(self.Q, list(self.tau_pairs), self.scale * factor,
                          dict(self.diagnostics))


@dataclass
class HCurve:
    values: list[tuple[float, complex]]
    kappa: float
    kappa_error: float

    def moduli(self) -> list[tuple[float, float]]:
        return [(t, abs(h)) for t, h in self.values]


@dataclass
class CornerReport:
    is_q_corner: bool
    h_curve: HCurve
    kappa: float
    trivially_maximal: bool
    reasons: list[str] = field(default_factory=list)
    grid: dict = field(default_factory=dict)


def corner_candidate(omega: RankOneQWeight, eta: RankOneQWeight,
                     U: np.ndarray, z: float,
                     h_atoms: list[tuple[complex, WeightAtom] | None] | None = None,
                     require_q_pure: bool = True) -> CornerData:
    """Build the corner candidate from (U, z, corrections).

    When h_atoms is None the corrections d_k = g_k - z (U (x) I) f_k are
    derived from the two atom lists (matched in order) and must lie in H;
    when supplied explicitly they are used as given (one entry per atom of
    omega, None meaning zero) and only tested for H membership.
    """
    U = np.asarray(U, dtype=complex)
    k1, k2 = omega.dim_k, eta.dim_k
    if U.shape != (k2, k1):
        raise MisalignedError(f"U must be {k2} x {k1}")
    if operator_norm(U @ U.conj().T - np.eye(k2)) > 1e-9:
        raise MisalignedError("U is not unitary")
    if operator_norm(U @ omega.T @ U.conj().T - eta.T) > 1e-8:
        raise MisalignedError("U T1 U* differs from T2")
    for qw, name in ((omega, "omega"), (eta, "eta")):
        if not validate_rank_one(qw.T, qw.mu).valid:
            raise PreconditionViolatedError(f"{name} is not a valid q-weight")
        if require_q_pure and classify_rank_one(qw).verdict != "QPure":
            raise PreconditionViolatedError(f"{name} is not q-pure")

    mu_terms = list(omega.mu.terms)
    nu_terms = list(eta.mu.terms)
    n = max(len(mu_terms), len(nu_terms))
    corrections: list[tuple[complex, WeightAtom] | None]
    residuals: list[float] = []
    if h_atoms is None:
        corrections = []
        for idx in range(n):
            parts = _difference_parts(mu_terms, nu_terms, idx, U, z, k2)
            d = _collapse_parts(parts, k2)
            corrections.append(d)
            residuals.append(0.0)
            if d is not None and not d[1].in_H():
                raise NotSquareSummableError(
                    f"derived correction {idx} lies outside H")
    else:
        if len(h_atoms) != n:
            raise PreconditionViolatedError(
                "need one correction entry per matched atom")
        corrections = list(h_atoms)
        for idx, entry in enumerate(corrections):
            if entry is not None and not entry[1].in_H():
                raise NotSquareSummableError(f"correction {idx} lies outside H")
            parts = _difference_parts(mu_terms, nu_terms, idx, U, z, k2)
            if entry is not None:
                parts.append((-entry[0], entry[1]))
            residuals.append(_parts_norm(parts, k2))

    r = 0.0
    for entry in corrections:
        if entry is None:
            continue
        coef, atom = entry
        val = pair_profiles(atom.profile, atom.profile, Kernel.EXP_NEG,
                            0.0, math.inf, same_atom=True)
        r += abs(coef) ** 2 * float(np.real(val))
    lam = 2.0 * z / (1.0 + z * z + r)
    Q = omega.T @ U.conj().T

    tau_pairs: list[tuple[complex, WeightAtom, WeightAtom]] = []
    for idx in range(n):
        f = mu_terms[idx] if idx < len(mu_terms) else None
        g = nu_terms[idx] if idx < len(nu_terms) else None
        if f is None or g is None:
            continue
        coef = math.sqrt(f[0]) * math.sqrt(g[0])
        tau_pairs.append((coef, f[1], g[1]))

    zeta_pairs: list[tuple[complex, WeightAtom, WeightAtom]] = []
    for idx, entry in enumerate(corrections):
        if entry is None or idx >= len(mu_terms):
            continue
        coef, atom = entry
        zeta_pairs.append((math.sqrt(mu_terms[idx][0]) * coef,
                           mu_terms[idx][1], atom))

    diagnostics = {
        "z": float(z), "r": float(r), "lambda": float(lam),
        "decomposition_residuals": residuals,
        "zeta_pairs": zeta_pairs,
    }
    return CornerData(Q, tau_pairs, lam, diagnostics)


def _difference_parts(mu_terms, nu_terms, idx, U, z, k2):
    """g_idx - z (U (x) I) f_idx as a list of (coef, atom) summands over K2."""
    parts: list[tuple[complex, WeightAtom]] = []
    if idx < len(nu_terms):
        lam, atom = nu_terms[idx]
        parts.append((math.sqrt(lam), atom))
    if idx < len(mu_terms):
        lam, atom = mu_terms[idx]
        v = U @ atom.vec()
        parts.append((-z * math.sqrt(lam),
                      WeightAtom(tuple(v.tolist()), atom.profile)))
    return parts


def _collapse_parts(parts, k2):
    """Combine summands sharing a vector ray into one composite atom.

    The returned pair (coef, atom) represents the function coef * g(x) v
    exactly, phase included (the scale is carried by the profile).
    """
    from .profiles import Profile

    live = [(c, a) for c, a in parts if abs(c) > 1e-13]
    if not live:
        return None
    rays = {a.key()[0] for _, a in live}
    if len(rays) != 1:
        raise NotSquareSummableError(
            "correction mixes vector rays; supply h_atoms explicitly")
    vector = live[0][1].vec()
    profile = Profile()
    for c, a in live:
        if not isinstance(a.profile, Profile):
            raise NotSquareSummableError("grid-sampled corrections unsupported")
        phase = _ray_phase(a.vec(), vector)
        profile = profile.plus(a.profile.scaled(c * phase))
    if profile.is_zero:
        return None
    return (1.0 + 0.0j, WeightAtom(tuple(vector.tolist()), profile))


def _ray_phase(v: np.ndarray, ref: np.ndarray) -> complex:
    idx = int(np.argmax(np.abs(ref) > 1e-12))
    return complex(v[idx] / ref[idx])


def _parts_norm(parts, k2) -> float:
    """Hq-type norm of a summand list under the 1 - e^{-x} kernel."""
    total = 0.0
    for c1, a1 in parts:
        for c2, a2 in parts:
            mdot = complex(np.vdot(a1.vec(), a2.vec()))
            if abs(mdot) < 1e-16:
                continue
            same = a1.key() == a2.key()
            val = pair_profiles(a1.profile, a2.profile, Kernel.ONE_MINUS_EXP,
                                0.0, math.inf, same_atom=same)
            total += float(np.real(np.conjugate(c1) * c2 * mdot * val))
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def h_curve(omega: RankOneQWeight, eta: RankOneQWeight, corner: CornerData,
            grid: TGrid) -> HCurve:
    values: list[tuple[float, complex]] = []
    for t in grid.values():
        a = 1.0 + truncated(omega.mu, obs_lambda(omega.T), t)
        b = 1.0 + truncated(eta.mu, obs_lambda(eta.T), t)
        c = 1.0 + corner.corner_weight_lambda(t)
        if abs(c) < 1e-12:
            raise IllDefinedHError(f"1 + tau|_t(Lambda(Q)) vanished at t = {t}")
        values.append((float(t), complex(math.sqrt(a * b) / c)))
    kappa = abs(values[0][1])
    kappa_error = abs(abs(values[0][1]) - abs(values[1][1]))
    return HCurve(values, kappa, kappa_error)


def verify_corner(omega: RankOneQWeight, eta: RankOneQWeight,
                  corner: CornerData, grid: TGrid = DEFAULT_GRID,
                  rng: np.random.Generator | None = None,
                  psd_samples: int = 64, truncations: int = 6) -> CornerReport:
    """Check the corner data against the h-curve and limit-matrix criteria."""
    reasons: list[str] = []
    if abs(operator_norm(corner.Q) - 1.0) > 1e-8:
        reasons.append("||Q|| differs from 1")
    if not is_psd(omega.T - corner.Q @ corner.Q.conj().T, H_TOL):
        reasons.append("QQ* exceeds T1")
    if not is_psd(eta.T - corner.Q.conj().T @ corner.Q, H_TOL):
        reasons.append("Q*Q exceeds T2")

    curve = h_curve(omega, eta, corner, grid)
    mods = [m for _, m in curve.moduli()]
    non_increasing = all(mods[i] >= mods[i + 1] - H_TOL * max(1.0, mods[i])
                         for i in range(len(mods) - 1))
    if not non_increasing:
        reasons.append("|h(t)| fails to be non-increasing on the grid")
    if min(mods) < 1.0 - H_TOL:
        reasons.append("|h(t)| dips below 1 on the grid")
    kappa = curve.kappa
    if max(mods) > kappa + H_TOL:
        reasons.append("|h(t)| exceeds its t_min value on the grid")

    if not _limit_matrix_cp(omega, eta, corner, kappa, grid, rng,
                            psd_samples, truncations):
        reasons.append("limiting 2x2 functional matrix is not CP on samples")

    trivially_maximal = is_unbounded(omega.mu) and is_unbounded(eta.mu)
    return CornerReport(is_q_corner=not reasons, h_curve=curve, kappa=kappa,
                        trivially_maximal=trivially_maximal, reasons=reasons,
                        grid=grid.describe())


def _limit_matrix_cp(omega, eta, corner, kappa, grid, rng,
                     psd_samples, truncations) -> bool:
    """psi_0 = [[mu, kappa gamma_w], [kappa gamma_w*, nu]] positive on samples.

    Sampled on the structured observables Lambda(M) and M (x) I for PSD M at
    several truncations (grid-certified; the atom-level construction makes
    this a regression guard rather than a proof).
    """
    k1 = omega.dim_k
    k2 = eta.dim_k
    ts = np.geomspace(grid.t_min, grid.t_max, truncations)
    mats = [np.eye(max(k1, k2), dtype=complex)]
    if rng is not None:
        for _ in range(psd_samples):
            G = rng.normal(size=(max(k1, k2), max(k1, k2))) \
                + 1j * rng.normal(size=(max(k1, k2), max(k1, k2)))
            M = G @ G.conj().T
            mats.append(M / operator_norm(M))
    for M in mats:
        M1 = M[:k1, :k1]
        M2 = M[:k2, :k2]
        M12 = M[:k1, :k2]
        for t in ts:
            for kernel, obs1, obs2 in (
                    (Kernel.EXP_NEG, obs_lambda(M1), obs_lambda(M2)),
                    (Kernel.ONE, obs_op(M1), obs_op(M2))):
                top = truncated(omega.mu, obs1, t)
                bottom = truncated(eta.mu, obs2, t)
                off = kappa * corner.scale * corner.tau_value(M12, kernel, t)
                psi = np.array([[top, off], [np.conjugate(off), bottom]])
                if np.min(np.linalg.eigvalsh(0.5 * (psi + psi.conj().T))) \
                        < -1e-8 * max(1.0, float(np.abs(psi).max())):
                    return False
    return True


@dataclass
class DeterminantPoint:
    t: float
    a: float
    b: complex
    holds: bool


def determinant_inequality_check(omega: RankOneQWeight, corner: CornerData,
                                 grid: TGrid = DEFAULT_GRID
                                 ) -> list[DeterminantPoint]:
    """Per-t check of the candidate determinant inequality.

    With a = mu|_t(Lambda(T1)), b the correction cross pairing
    zeta|_t(Lambda(T1 U*)) = zeta|_t(Lambda(Q)), r and lambda from the
    candidate data:

        lambda^2 (1 + a + a z^2 + 2 z Re b + r + a r - |b|^2)
            <= 1 + 2 lambda (a z + Re b).
    """
    z = corner.diagnostics["z"]
    r = corner.diagnostics["r"]
    lam = corner.diagnostics["lambda"]
    zeta_pairs = corner.diagnostics.get("zeta_pairs", [])
    zeta = CornerData(corner.Q, zeta_pairs, 1.0)
    out: list[DeterminantPoint] = []
    for t in grid.values():
        a = truncated(omega.mu, obs_lambda(omega.T), t)
        b = zeta.tau_value(corner.Q, Kernel.EXP_NEG, t) if zeta_pairs else 0.0
        lhs = lam * lam * (1.0 + a + a * z * z + 2.0 * z * np.real(b)
                           + r + a * r - abs(b) ** 2)
        rhs = 1.0 + 2.0 * lam * (a * z + np.real(b))
        out.append(DeterminantPoint(float(t), float(a), complex(b),
                                    bool(lhs <= rhs + 1e-10 * max(1.0, abs(rhs)))))
    return out


# ---------------------------------------------------------------------------
# assembly and hyper-maximality
# ---------------------------------------------------------------------------

@dataclass
class ThetaReport:
    valid: bool
    cp_curve: list[tuple[float, float]]
    norm_curve: list[tuple[float, float]]
    reasons: list[str] = field(default_factory=list)


def assemble_theta(omega: RankOneQWeight, eta: RankOneQWeight,
                   corner: CornerData | None,
                   grid: TGrid = DEFAULT_GRID) -> tuple[AssembledQWeight, ThetaReport]:
    """Theta = [[omega, gamma], [gamma*, eta]], certified on the grid."""
    theta = AssembledQWeight(omega, eta, corner)
    reasons: list[str] = []
    if corner is not None:
        if not is_psd(omega.T - corner.Q @ corner.Q.conj().T, H_TOL):
            reasons.append("QQ* exceeds T1")
        if not is_psd(eta.T - corner.Q.conj().T @ corner.Q, H_TOL):
            reasons.append("Q*Q exceeds T2")
    cp_curve: list[tuple[float, float]] = []
    norm_curve: list[tuple[float, float]] = []
    from .qweight import gbr_cp_norm

    for t in grid.values():
        sample = gbr_sample(theta, t)
        m = sample.min_block_eigenvalue()
        scale = max(1.0, float(np.linalg.norm(sample.block_matrix())))
        cp_curve.append((float(t), m))
        norm = gbr_cp_norm(theta, t)
        norm_curve.append((float(t), norm))
        if m < -1e-9 * scale:
            reasons.append(f"GBR not CP at t = {t:.3g}")
            break
        if norm > 1.0 + 1e-9:
            reasons.append(f"GBR norm {norm:.6g} exceeds 1 at t = {t:.3g}")
            break
    return theta, ThetaReport(valid=not reasons, cp_curve=cp_curve,
                              norm_curve=norm_curve, reasons=reasons)


@dataclass
class FalsificationResult:
    falsified: bool
    witness: dict | None


def hypermaximal_falsify(theta: AssembledQWeight,
                         grid: TGrid = DEFAULT_GRID,
                         shrink_factors: tuple[float, ...] = (0.5, 0.9, 0.99)
                         ) -> FalsificationResult:
    """Search diagonal shrinkings that keep the corner yet stay q-weights.

    Hyper-maximality demands that no strictly smaller diagonal works; a
    found candidate falsifies it.  not_falsified only reports that the
    finite family failed (never a proof of hyper-maximality).
    """
    base_report = theta_grid_valid(theta, grid)
    if not base_report:
        raise PreconditionViolatedError("theta is not valid on the grid")
    for side in (0, 1):
        for s in shrink_factors:
            omega1 = theta.omega1
            omega2 = theta.omega2
            if side == 0:
                omega1 = RankOneQWeight(omega1.T, omega1.mu.scaled(s))
            else:
                omega2 = RankOneQWeight(omega2.T, omega2.mu.scaled(s))
            candidate = AssembledQWeight(omega1, omega2, theta.corner)
            if not theta_grid_valid(candidate, grid):
                continue
            sub = subordination_check(theta, candidate, grid)
            if sub.holds:
                return FalsificationResult(True, {
                    "side": "omega" if side == 0 else "eta",
                    "shrink_factor": s})
    return FalsificationResult(False, None)


def theta_grid_valid(theta: AssembledQWeight, grid: TGrid) -> bool:
    from .qweight import gbr_cp_norm

    for t in grid.values():
        sample = gbr_sample(theta, t)
        scale = max(1.0, float(np.linalg.norm(sample.block_matrix())))
        if sample.min_block_eigenvalue() < -1e-9 * scale:
            return False
        if gbr_cp_norm(theta, t) > 1.0 + 1e-9:
            return False
    return True


def conjugacy_obstruction(dim1: int, dim2: int,
                          spines_trivial: tuple[bool, bool]) -> bool:
    """Obstruction to cocycle conjugacy for unital q-pure rank-one inputs.

    Corners between such maps force equal dimensions, so differing
    dimensions obstruct conjugacy.
    """
    if not all(spines_trivial):
        raise PreconditionViolatedError("both normal spines must be trivial")
    return dim1 != dim2
