"""Special-function layer against independent mpmath oracles."""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

from qweights.numerics import (polynomial_extrapolate, power_exp_integral,
                               power_exp_one_minus_integral,
                               rational_extrapolate, upper_incomplete_gamma)

mp.mp.dps = 30


@pytest.mark.parametrize("alpha", [-1.9, -1.5, -1.0, -0.5, 0.0, 0.3, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("x", [1e-8, 1e-3, 0.1, 1.0, 5.0, 20.0, 60.0])
def test_upper_incomplete_gamma_against_mpmath(alpha, x):
    mine = upper_incomplete_gamma(alpha, x)
    ref = float(mp.gammainc(alpha, x, mp.inf))
    assert abs(mine - ref) <= 1e-12 * max(1e-300, abs(ref))


def test_gamma_at_zero():
    assert upper_incomplete_gamma(1.5, 0.0) == pytest.approx(
        float(mp.gamma(1.5)), rel=1e-14)
    with pytest.raises(ValueError):
        upper_incomplete_gamma(-0.5, 0.0)


@pytest.mark.parametrize("P,S,t,s", [
    (-1.5, 2.0, 1e-6, math.inf),
    (-1.0, 1.0, 0.01, math.inf),
    (0.0, 3.0, 0.0, math.inf),
    (2.3, 0.7, 0.5, 4.0),
    (-0.5, 1.0, 0.0, 1.0),
])
def test_power_exp_integral_oracle(P, S, t, s):
    hi = 80.0 if math.isinf(s) else s
    ref = float(mp.quad(lambda x: x ** P * mp.e ** (-S * x),
                        [max(t, 1e-30), min(1.0, hi), hi]))
    assert power_exp_integral(P, S, t, s) == pytest.approx(ref, rel=1e-9)


def test_power_exp_integral_divergence():
    assert power_exp_integral(-1.0, 1.0, 0.0, math.inf) == math.inf
    assert power_exp_integral(-1.5, 2.0, 0.0, 1.0) == math.inf


@pytest.mark.parametrize("P,S,t", [
    (-1.0, 2.0, 0.0), (-1.5, 1.0, 0.0), (-1.9, 1.0, 1e-8), (-1.0, 2.0, 1e-6)])
def test_one_minus_exp_integral_stable_near_zero(P, S, t):
    mine = power_exp_one_minus_integral(P, S, t, math.inf)
    ref = float(mp.quad(lambda x: x ** P * mp.e ** (-S * x) * (1 - mp.e ** (-x)),
                        [max(t, 1e-30), 1e-4, 1.0, 80.0]))
    assert mine == pytest.approx(ref, rel=1e-8)


def test_rational_extrapolation_recovers_rational_limits():
    us = np.array([1.0 / (1 + 1.15 * n) for n in range(6, 15)])
    ys = (2 + 3 * us) / (1 + 0.8 * us)
    est, err = rational_extrapolate(us, ys)
    assert est == pytest.approx(2.0, abs=1e-10)
    assert err < 1e-8

    ys2 = (0.5 - us + us ** 2) / (1 + us + 0.3 * us ** 2)
    est2, _ = rational_extrapolate(us, ys2)
    assert est2 == pytest.approx(0.5, abs=1e-9)


def test_polynomial_extrapolation():
    us = np.geomspace(0.5, 0.01, 8)
    ys = 1.0 + 2 * us - us ** 2
    est, _ = polynomial_extrapolate(us, ys)
    assert est == pytest.approx(1.0, abs=1e-10)
