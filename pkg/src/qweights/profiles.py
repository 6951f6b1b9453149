"""Scalar profile functions on the half line and their kernel pairings.

A profile is the scalar part g of a weight atom h(x) = g(x) v.  Two families
are supported in closed form:

* power-exponential sums  g(x) = sum_j a_j x^{p_j} e^{-s_j x}  (p_j > -1),
* the canonical profile   g(x) = e^{-x/2} / sqrt(1 - e^{-x}),

plus grid-sampled bounded profiles for completeness.  A profile may mix a
canonical component with power-exponential terms; pairings then fall back to
adaptive quadrature with an analytic tail.

All pairings are of the form  int_t^s conj(g1)(x) g2(x) w(x) dx  with kernel
weight w in {1, e^{-x}, 1 - e^{-x}}.  Divergence at t = 0 is decided
analytically from the effective order of the integrand, never numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DivergentCrossError
from .numerics import (adaptive_half_line_quad, power_exp_integral,
                       power_exp_one_minus_integral)

#: Tail cut beyond which the canonical profile is replaced by its
#: exponential series (error below 1e-18 relative).
TAIL_CUT = 40.0

#: Orders at the origin are resolved by scanning this many Taylor layers.
ORDER_SCAN_DEPTH = 12

_COEF_TOL = 1e-14


class Kernel(Enum):
    ONE = "one"
    EXP_NEG = "exp_neg"
    ONE_MINUS_EXP = "one_minus_exp"


class PowerTerm(NamedTuple):
    amp: complex
    p: float
    s: float


@dataclass(frozen=True)
class Profile:
    """Scalar profile: canonical component plus power-exponential terms.

    canonical_amp * e^{-x/2}(1-e^{-x})^{-1/2} + sum_j amp_j x^{p_j} e^{-s_j x}
    """

    canonical_amp: complex = 0.0
    terms: tuple[PowerTerm, ...] = ()

    def __post_init__(self) -> None:
        for term in self.terms:
            if term.p <= -1.0:
                raise ValueError(f"power p={term.p} must exceed -1")
            if term.s <= 0.0:
                raise ValueError(f"decay s={term.s} must be positive")

    @property
    def is_zero(self) -> bool:
        return abs(self.canonical_amp) < _COEF_TOL and all(
            abs(t.amp) < _COEF_TOL for t in self.terms)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        if abs(self.canonical_amp) > 0:
            out += self.canonical_amp * np.exp(-x / 2) / np.sqrt(-np.expm1(-x))
        for amp, p, s in self.terms:
            out += amp * np.power(x, p) * np.exp(-s * x)
        return out

    def scaled(self, factor: complex) -> "Profile":
        return Profile(self.canonical_amp * factor,
                       tuple(PowerTerm(t.amp * factor, t.p, t.s) for t in self.terms))

    def plus(self, other: "Profile") -> "Profile":
        return Profile(self.canonical_amp + other.canonical_amp,
                       self.terms + other.terms)

    def order_at_zero(self) -> float:
        """Leading exponent of the profile near x = 0 (cancellation-aware).

        The canonical profile behaves like x^{-1/2} with unit coefficient;
        each power term x^p e^{-sx} expands as x^p sum_n (-s)^n x^n / n!.
        Returns +inf for the zero profile.
        """
        layers: dict[float, complex] = {}
        if abs(self.canonical_amp) > _COEF_TOL:
            # e^{-x/2}(1-e^{-x})^{-1/2} = x^{-1/2}(1 + c_1 x + ...)
            expansion = _canonical_series()
            for n, cn in enumerate(expansion):
                key = -0.5 + n
                layers[key] = layers.get(key, 0.0) + self.canonical_amp * cn
        for amp, p, s in self.terms:
            if abs(amp) <= _COEF_TOL:
                continue
            fact = 1.0
            for n in range(ORDER_SCAN_DEPTH):
                if n > 0:
                    fact *= n
                key = p + n
                layers[key] = layers.get(key, 0.0) + amp * (-s) ** n / fact
        live = [q for q, c in layers.items() if abs(c) > 1e-11]
        if not live:
            return math.inf
        return min(live)

    def singular_content(self) -> dict[float, complex]:
        """Coefficients of the non-square-integrable monomials x^q, q <= -1/2."""
        content: dict[float, complex] = {}
        if abs(self.canonical_amp) > _COEF_TOL:
            content[-0.5] = content.get(-0.5, 0.0) + self.canonical_amp
        for amp, p, s in self.terms:
            if abs(amp) > _COEF_TOL and p <= -0.5:
                content[p] = content.get(p, 0.0) + amp
        return {q: c for q, c in content.items() if abs(c) > 1e-13}

    def in_H(self) -> bool:
        """Square integrability on (0, infty) with Lebesgue measure."""
        return self.order_at_zero() > -0.5

    def key(self) -> tuple:
        """Structural key used for atom matching (rounded to 12 digits)."""
        terms = tuple(sorted((_round_c(t.amp), round(t.p, 12), round(t.s, 12))
                             for t in self.terms))
        return (_round_c(self.canonical_amp), terms)


@dataclass(frozen=True)
class GridSampledProfile:
    """Bounded profile given by values at increasing knots, linear between."""

    knots: tuple[float, ...]
    values: tuple[complex, ...]

    def __post_init__(self) -> None:
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("need matching knots/values with at least two points")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if self.knots[0] <= 0:
            raise ValueError("knots must lie in (0, infty)")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.knots, [v.real for v in self.values], left=0.0, right=0.0)
        im = np.interp(x, self.knots, [v.imag for v in self.values], left=0.0, right=0.0)
        return re + 1j * im

    def order_at_zero(self) -> float:
        return 0.0

    def in_H(self) -> bool:
        return True

    def singular_content(self) -> dict[float, complex]:
        return {}

    def key(self) -> tuple:
        return ("grid", tuple(round(k, 12) for k in self.knots),
                tuple(_round_c(v) for v in self.values))


AnyProfile = Profile | GridSampledProfile


def power_exp(amp: complex, p: float, s: float) -> Profile:
    return Profile(0.0, (PowerTerm(complex(amp), float(p), float(s)),))


def powers_canonical() -> Profile:
    return Profile(1.0, ())


def _round_c(z: complex) -> tuple[float, float]:
    z = complex(z)
    return (round(z.real, 12), round(z.imag, 12))


_CANONICAL_SERIES_CACHE: list[complex] | None = None


def _canonical_series() -> list[complex]:
    """Taylor layers of x^{1/2} e^{-x/2} (1-e^{-x})^{-1/2} around 0."""
    global _CANONICAL_SERIES_CACHE
    if _CANONICAL_SERIES_CACHE is None:
        import numpy.polynomial.polynomial as npp

        n = ORDER_SCAN_DEPTH
        # series of (1 - e^{-x})/x
        base = np.zeros(n)
        fact = 1.0
        for k in range(n):
            fact *= (k + 1)
            base[k] = (-1.0) ** k / fact
        # ((1-e^{-x})/x)^{-1/2} via exp(-0.5 log(base))
        logs = _poly_log(base, n)
        half = _poly_exp(-0.5 * logs, n)
        expm = np.zeros(n)
        fact = 1.0
        for k in range(n):
            if k > 0:
                fact *= k
            expm[k] = (-0.5) ** k / fact
        prod = npp.polymul(expm, half)[:n]
        _CANONICAL_SERIES_CACHE = [complex(c) for c in prod]
    return _CANONICAL_SERIES_CACHE


def _poly_log(coeffs: np.ndarray, n: int) -> np.ndarray:
    # log of a power series with constant term 1
    import numpy.polynomial.polynomial as npp

    a = np.array(coeffs[:n], dtype=float)
    out = np.zeros(n)
    # d/dx log f = f'/f ; integrate term by term
    deriv = npp.polyder(a)
    quot = _poly_div(deriv, a, n - 1)
    for k in range(1, n):
        out[k] = quot[k - 1] / k
    return out


def _poly_exp(coeffs: np.ndarray, n: int) -> np.ndarray:
    # exp of a power series with constant term 0
    import numpy.polynomial.polynomial as npp

    out = np.zeros(n)
    out[0] = 1.0
    term = np.zeros(n)
    term[0] = 1.0
    for k in range(1, 24):
        term = npp.polymul(term, coeffs)[:n] / k
        out = out + term
        if np.max(np.abs(term)) < 1e-18:
            break
    return out


def _poly_div(num: np.ndarray, den: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    num = np.concatenate([num, np.zeros(max(0, n - len(num)))])
    den = np.concatenate([den, np.zeros(max(0, n - len(den)))])
    for k in range(n):
        acc = num[k] if k < len(num) else 0.0
        for j in range(k):
            acc -= out[j] * den[k - j]
        out[k] = acc / den[0]
    return out


# ---------------------------------------------------------------------------
# pairing engine
# ---------------------------------------------------------------------------

_KERNEL_SHIFT = {Kernel.ONE: 0.0, Kernel.EXP_NEG: 1.0}


def pairing_order(g1: AnyProfile, g2: AnyProfile, kernel: Kernel) -> float:
    """Effective order at the origin of conj(g1) g2 w(x)."""
    base = g1.order_at_zero() + g2.order_at_zero()
    if kernel is Kernel.ONE_MINUS_EXP:
        base += 1.0
    return base


def pairing_diverges(g1: AnyProfile, g2: AnyProfile, kernel: Kernel,
                     t: float, s: float) -> bool:
    if t > 0.0 or s <= t:
        return False
    return pairing_order(g1, g2, kernel) <= -1.0


def pair_profiles(g1: AnyProfile, g2: AnyProfile, kernel: Kernel,
                  t: float, s: float = math.inf,
                  same_atom: bool = False) -> complex | float:
    """int_t^s conj(g1) g2 w dx; math.inf for positive divergent diagonals.

    Raises DivergentCrossError when a divergent pairing is not a positive
    diagonal one (distinct atoms cannot be absorbed into an extended real).
    Results are memoized on (profiles, kernel, window): profiles are frozen
    and the evaluation is pure.
    """
    return _pair_profiles_cached(g1, g2, kernel, float(t), float(s),
                                 bool(same_atom))


@lru_cache(maxsize=1 << 18)
def _pair_profiles_cached(g1: AnyProfile, g2: AnyProfile, kernel: Kernel,
                          t: float, s: float,
                          same_atom: bool) -> complex | float:
    if s <= t:
        return 0.0
    if pairing_diverges(g1, g2, kernel, t, s):
        if same_atom:
            return math.inf
        raise DivergentCrossError(
            "cross pairing diverges at the origin (order <= -1)")

    grid1 = isinstance(g1, GridSampledProfile)
    grid2 = isinstance(g2, GridSampledProfile)
    if grid1 or grid2:
        return _pair_quadrature(g1, g2, kernel, t, s)

    can1 = abs(g1.canonical_amp) > _COEF_TOL
    can2 = abs(g2.canonical_amp) > _COEF_TOL
    if can1 and can2 and not g1.terms and not g2.terms:
        return (np.conjugate(g1.canonical_amp) * g2.canonical_amp
                * _canonical_pair(kernel, t, s))
    if not can1 and not can2:
        return _power_pair(g1, g2, kernel, t, s)
    # mixed canonical / power content: the pieces below are only separately
    # integrable away from the origin; if one of them diverges at 0 while
    # the total converges (cancelling singular content), integrate the
    # product pointwise on [t, 1/2] and decompose on the remainder
    if t < 0.5 and _mixed_piece_order(g1, g2, can1, can2) <= -1.0:
        cut = min(s, 0.5)
        lo = _pair_quadrature(g1, g2, kernel, t, cut)
        hi = _pair_profiles_cached(g1, g2, kernel, cut, s, same_atom) \
            if s > cut else 0.0
        return lo + hi
    total: complex = 0.0
    p1 = Profile(0.0, g1.terms)
    p2 = Profile(0.0, g2.terms)
    if can1 and can2:
        total += (np.conjugate(g1.canonical_amp) * g2.canonical_amp
                  * _canonical_pair(kernel, t, s))
    if g1.terms and g2.terms:
        total += _power_pair(p1, p2, kernel, t, s)
    if can1 and g2.terms:
        total += np.conjugate(g1.canonical_amp) * _canonical_power_cross(
            p2, kernel, t, s, conjugate_canonical=True)
    if can2 and g1.terms:
        total += g2.canonical_amp * np.conjugate(_canonical_power_cross(
            p1, kernel, t, s, conjugate_canonical=True))
    return total


def _mixed_piece_order(g1: Profile, g2: Profile, can1: bool, can2: bool) -> float:
    """Smallest origin order among the separate pieces of a mixed pairing."""
    orders = [math.inf]
    if can1 and can2:
        orders.append(-1.0)
    if can1:
        orders.extend(-0.5 + term.p for term in g2.terms
                      if abs(term.amp) > _COEF_TOL)
    if can2:
        orders.extend(-0.5 + term.p for term in g1.terms
                      if abs(term.amp) > _COEF_TOL)
    for t1 in g1.terms:
        for t2 in g2.terms:
            if abs(t1.amp) > _COEF_TOL and abs(t2.amp) > _COEF_TOL:
                orders.append(t1.p + t2.p)
    return min(orders)


def _canonical_pair(kernel: Kernel, t: float, s: float) -> float:
    """Closed forms for |canonical|^2 = e^{-x}/(1-e^{-x}) against each kernel."""

    def anti(x: float) -> float:
        if math.isinf(x):
            return 0.0
        one_minus = -math.expm1(-x)
        if kernel is Kernel.ONE:
            return math.log(one_minus)
        if kernel is Kernel.EXP_NEG:
            return math.log(one_minus) + math.exp(-x)
        return -math.exp(-x)

    return anti(s) - anti(t)


def _power_pair(g1: Profile, g2: Profile, kernel: Kernel,
                t: float, s: float) -> complex:
    pieces = []
    for a1, p1, s1 in g1.terms:
        for a2, p2, s2 in g2.terms:
            pieces.append((np.conjugate(a1) * a2, p1 + p2, s1 + s2))
    if not pieces:
        return 0.0
    # internal cancellation: individually divergent pieces with a convergent
    # total are integrated pointwise near the origin
    if t < 0.5 and any(P <= -1.0 for _, P, _ in pieces):
        cut = 0.5 if s > 0.5 else s
        lo = _pair_quadrature(g1, g2, kernel, t, cut)
        hi = _power_pair(g1, g2, kernel, cut, s) if s > cut else 0.0
        return lo + hi
    total: complex = 0.0
    for coef, P, S in pieces:
        if abs(coef) < _COEF_TOL:
            continue
        if kernel is Kernel.ONE_MINUS_EXP:
            total += coef * power_exp_one_minus_integral(P, S, t, s)
        else:
            total += coef * power_exp_integral(P, S + _KERNEL_SHIFT[kernel], t, s)
    return total


def _canonical_power_cross(g: Profile, kernel: Kernel, t: float, s: float,
                           conjugate_canonical: bool) -> complex:
    """int conj(canonical) * g * w dx via quadrature plus an analytic tail.

    The canonical profile is real, so conjugation of it is a no-op; the flag
    is kept for clarity at call sites.
    """
    cut = min(s, TAIL_CUT)
    total: complex = 0.0
    if cut > t:
        singular = g.order_at_zero() < 0.5  # integrand order may dip below 0

        def f_re(x: float) -> float:
            return float(np.real(_cross_integrand(g, kernel, x)))

        def f_im(x: float) -> float:
            return float(np.imag(_cross_integrand(g, kernel, x)))

        total += adaptive_half_line_quad(f_re, t, cut, singular_at_zero=singular)
        total += 1j * adaptive_half_line_quad(f_im, t, cut, singular_at_zero=singular)
    if s > cut:
        # canonical(x) = e^{-x/2} (1 + e^{-x}/2 + 3 e^{-2x}/8 + ...) for large x
        series = [(1.0, 0.5), (0.5, 1.5), (0.375, 2.5)]
        tail = Profile(0.0, tuple(PowerTerm(c, 0.0, d) for c, d in series))
        total += _power_pair(tail, g, kernel, cut, s)
    return total


def _cross_integrand(g: Profile, kernel: Kernel, x: float) -> complex:
    can = math.exp(-x / 2) / math.sqrt(-math.expm1(-x))
    w = _kernel_weight(kernel, x)
    return can * complex(g.evaluate(np.array([x]))[0]) * w


def _kernel_weight(kernel: Kernel, x: float) -> float:
    if kernel is Kernel.ONE:
        return 1.0
    if kernel is Kernel.EXP_NEG:
        return math.exp(-x)
    return -math.expm1(-x)


def _pair_quadrature(g1: AnyProfile, g2: AnyProfile, kernel: Kernel,
                     t: float, s: float) -> complex:
    order = pairing_order(g1, g2, kernel)
    singular = order < 0.5

    def make(fn):
        def f(x: float) -> float:
            xv = np.array([x])
            val = (np.conjugate(g1.evaluate(xv))[0] * g2.evaluate(xv)[0]
                   * _kernel_weight(kernel, x))
            return float(fn(val))
        return f

    if isinstance(g1, GridSampledProfile):
        s = min(s, g1.knots[-1])
    if isinstance(g2, GridSampledProfile):
        s = min(s, g2.knots[-1])
    if s <= t:
        return 0.0
    re = adaptive_half_line_quad(make(np.real), t, s, singular_at_zero=singular)
    im = adaptive_half_line_quad(make(np.imag), t, s, singular_at_zero=singular)
    return re + 1j * im
