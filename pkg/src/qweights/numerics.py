"""Special functions and quadrature for half-line profile pairings.

Everything here works with plain floats.  Integrals over [t, s) against the
weights 1, e^{-x} and (1 - e^{-x}) reduce to upper incomplete gamma values;
the remaining mixed cases go through adaptive quadrature with a u = sqrt(x)
substitution that removes the algebraic singularity at the origin.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

#: Relative accuracy targeted by the closed-form pairings.
GAMMA_RTOL = 1e-13

#: Relative accuracy requested from adaptive quadrature.
QUAD_RTOL = 1e-11


def upper_incomplete_gamma(alpha: float, x: float) -> float:
    """Upper incomplete gamma Gamma(alpha, x) for x >= 0 and any real alpha.

    For alpha > 0 this wraps the regularized routine from scipy.  For
    alpha <= 0 (where scipy's gammaincc is undefined) the value is obtained
    by the downward recurrence

        Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a,

    started from the fractional representative in (0, 1], or from
    Gamma(0, x) = E_1(x) when alpha is a non-positive integer.  Both terms
    on the right share the sign for small x, so the recurrence is stable in
    the regime used here (a few steps at most).
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        if alpha <= 0:
            raise ValueError("Gamma(alpha, 0) diverges for alpha <= 0")
        return float(special.gamma(alpha))
    if alpha > 0:
        return float(special.gammaincc(alpha, x) * special.gamma(alpha))

    if x >= 1.0:
        return _gamma_continued_fraction(alpha, x)
    m = round(alpha)
    if abs(alpha - m) < 1e-12:
        # integer alpha = m <= 0: climb down from Gamma(0, x) = E1(x)
        g = float(special.exp1(x))
        a = 0.0
        steps = int(-m)
    else:
        k = int(math.ceil(-alpha))
        a = alpha + k  # in (0, 1)
        g = float(special.gammaincc(a, x) * special.gamma(a))
        steps = k
    lx = math.log(x)
    for _ in range(steps):
        a -= 1.0
        g = (g - math.exp(a * lx - x)) / a
    return g


def _gamma_continued_fraction(alpha: float, x: float) -> float:
    """Gamma(alpha, x) by the Legendre continued fraction (modified Lentz).

    Convergent for x > 0; used in the regime x >= 1 where it beats the
    downward recurrence for alpha <= 0.
    """
    fpmin = 1e-300
    b = x + 1.0 - alpha
    c = 1.0 / fpmin
    d = 1.0 / b
    h = d
    for i in range(1, 400):
        an = -i * (i - alpha)
        b += 2.0
        d = an * d + b
        if abs(d) < fpmin:
            d = fpmin
        c = b + an / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + alpha * math.log(x)) * h


def power_exp_integral(P: float, S: float, t: float, s: float) -> float:
    """Integral of x^P e^{-S x} over [t, s), with s possibly infinite.

    Requires S > 0.  Returns math.inf when t == 0 and P <= -1 (the integrand
    is then non-integrable at the origin).
    """
    if S <= 0:
        raise ValueError("decay rate must be positive")
    if s <= t:
        return 0.0
    if t == 0.0 and P <= -1.0:
        return math.inf
    a = P + 1.0
    scale = S ** (-a)
    upper = 0.0 if math.isinf(s) else upper_incomplete_gamma(a, S * s)
    if t == 0.0:
        lower = float(special.gamma(a))
    else:
        lower = upper_incomplete_gamma(a, S * t)
    return scale * (lower - upper)


def power_exp_one_minus_integral(P: float, S: float, t: float, s: float) -> float:
    """Integral of x^P e^{-S x} (1 - e^{-x}) over [t, s).

    Finite for all P > -2.  Near the origin the factor (1 - e^{-x}) is
    expanded in its Taylor series so that the two individually divergent
    gamma terms never meet; away from the origin the plain difference of
    the S and S+1 integrals is well conditioned.
    """
    if s <= t:
        return 0.0
    cut = 0.5
    if t >= cut or P > -0.5:
        return power_exp_integral(P, S, t, s) - power_exp_integral(P, S + 1.0, t, s)
    hi = min(s, cut)
    # sum_{n>=1} (-1)^{n+1}/n! * int x^{P+n} e^{-Sx} on [t, hi)
    total = 0.0
    sign = 1.0
    fact = 1.0
    for n in range(1, 60):
        fact *= n
        term = sign / fact * power_exp_integral(P + n, S, t, hi)
        total += term
        sign = -sign
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    if s > cut:
        total += power_exp_integral(P, S, cut, s) - power_exp_integral(P, S + 1.0, cut, s)
    return total


def adaptive_half_line_quad(f, t: float, s: float, singular_at_zero: bool = False) -> float:
    """Adaptive quadrature of a real integrand on [t, s) with s possibly inf.

    When singular_at_zero is set and t < 1, the substitution x = u^2 is used
    on [t, 1] so that an integrable algebraic singularity at the origin
    becomes a bounded integrand.
    """
    if s <= t:
        return 0.0
    total = 0.0
    lo = t
    if singular_at_zero and lo < 1.0:
        hi = min(1.0, s)

        def g(u: float) -> float:
            return 2.0 * u * f(u * u)

        val, _ = integrate.quad(g, math.sqrt(lo), math.sqrt(hi),
                                epsabs=1e-14, epsrel=QUAD_RTOL, limit=200)
        total += val
        lo = hi
    if s > lo:
        upper = s if not math.isinf(s) else np.inf
        val, _ = integrate.quad(f, lo, upper,
                                epsabs=1e-14, epsrel=QUAD_RTOL, limit=200)
        total += val
    return total


def rational_extrapolate(us: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Stoer-Bulirsch rational extrapolation of y(u) to u = 0.

    us must be positive and strictly decreasing.  Returns the extrapolated
    value together with the magnitude of the last correction, which serves
    as an error estimate.  Used to take t -> 0+ limits of quantities that
    are rational in a computable divergence measure; exact (to roundoff)
    when y is a rational function of u of low enough degree.
    """
    xs = [float(u) for u in us]
    n = len(xs)
    if n == 0:
        raise ValueError("no samples")
    if n == 1:
        return float(ys[0]), math.inf
    tiny = 1e-300
    c = [float(y) for y in ys]
    d = [float(y) + tiny for y in ys]
    ns = n - 1  # node closest to u = 0
    y = c[ns]
    ns -= 1
    err = math.inf
    for m in range(1, n):
        for i in range(n - m):
            w = c[i + 1] - d[i]
            t_ = xs[i] * d[i] / xs[i + m]
            dd = t_ - c[i + 1]
            if dd == 0.0:
                dd = tiny
            dd = w / dd
            d[i] = c[i + 1] * dd
            c[i] = t_ * dd
        if 2 * (ns + 1) < (n - m):
            dy = c[ns + 1]
        else:
            dy = d[ns]
            ns -= 1
        y += dy
        err = abs(dy)
    return float(y), float(err)


def polynomial_extrapolate(us: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Neville polynomial extrapolation of y(u) to u = 0 with error estimate."""
    n = len(us)
    tab = np.array(ys, dtype=float)
    us = np.asarray(us, dtype=float)
    est = tab[-1]
    err = math.inf
    for k in range(1, n):
        upd = np.empty(n - k)
        for j in range(n - k):
            upd[j] = (us[j] * tab[j + 1] - us[j + k] * tab[j]) / (us[j] - us[j + k])
        tab = upd
        err = abs(tab[-1] - est)
        est = tab[-1]
    return float(est), float(err)
