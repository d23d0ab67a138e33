import math

import numpy as np
import pytest
from scipy import integrate

from fracspde import green
from fracspde.kernels import BesselTau, FracParams, RieszDelta, WhiteNoise
from fracspde.noise import GridSpec

HEAT = FracParams(1.0, 2.0, 0.0, 1.0, 1.0, 1)


def test_heat_l2_closed_form():
    for t in (0.1, 1.0, 7.0):
        v = green.green_l2(green.GreenSymbol(HEAT, t))
        assert v == pytest.approx(1.0 / (2.0 * math.sqrt(2 * math.pi * t)), rel=1e-6)


def test_l2_scaling_ratio():
    p = FracParams(0.6, 1.3, 0.4, 0.8, 1.0, 2)
    r = green.green_l2(green.GreenSymbol(p, 2.0)) / green.green_l2(green.GreenSymbol(p, 1.0))
    assert r <= 2.0 ** (-p.beta * p.d / p.order) * (1 + 1e-6)


def test_l2_needs_order_condition():
    with pytest.raises(ValueError):
        green.green_l2(green.GreenSymbol(FracParams(0.5, 0.5, 0.0, d=2), 1.0))


def test_l2_bound_with_small_nu():
    p = FracParams(0.2, 1.1, 0.7, 0.3, 1.0, 2)
    for t in (0.1, 1.0, 10.0):
        g = green.GreenSymbol(p, t)
        assert green.green_l2(g) <= green.l2_bound(g)


def test_nt_heat_closed_form():
    for t, r in ((0.5, 0.3), (2.0, 1.7), (1.0, 40.0)):
        assert green.nt(HEAT, t, r) == pytest.approx((1 - math.exp(-2 * t * r * r)) / (2 * r * r), rel=1e-10)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_nt_against_direct_quadrature(beta):
    p = FracParams(beta, 1.2, 0.3, 1.4)
    t, r = 1.7, 2.3
    S = p.nu * float(p.symbol(r))
    ref = integrate.quad(lambda u: green.ml_neg(beta, np.array([S * u**beta]))[0] ** 2, 0, t,
                         epsabs=1e-13, limit=200)[0]
    assert green.nt(p, t, r) == pytest.approx(ref, rel=1e-7)


def test_nt_bound_holds_at_sample_points():
    for beta in (0.3, 0.5, 0.8):
        p = FracParams(beta, 1.0, 0.5, 0.7)
        for t in (0.01, 1.0, 20.0):
            for r in (0.0, 0.5, 5.0, 500.0):
                assert green.nt(p, t, r) <= green.nt_bound(p, t, r)


def test_physical_heat_kernel():
    g = GridSpec(1, 16.0, 512, 0.01, 1)
    x = np.array([0.0, 0.5, 1.3])
    v = green.green_physical(green.GreenSymbol(HEAT, 0.5), x, g)
    exact = np.exp(-x**2 / 2.0) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(v - exact)) < 1e-8


def test_heat_time_increment_parts():
    t, tp = 1.0, 0.75
    h = t - tp
    p1, p2 = green.increment_time_integral(HEAT, WhiteNoise(1), t, tp)
    assert p2 == pytest.approx(math.sqrt(2 * math.pi * h), rel=1e-7)

    def inner(u):
        a, b = u + h, u
        return math.sqrt(math.pi / (2 * a)) + math.sqrt(math.pi / (2 * b)) - 2 * math.sqrt(math.pi / (a + b))
    ref = integrate.quad(inner, 0.0, tp, limit=200)[0]
    assert p1 == pytest.approx(ref, rel=1e-6)


def test_heat_space_increment():
    t, h = 1.0, 0.3
    f = lambda r: 2 * (1 - math.cos(r * h)) * (1 - math.exp(-2 * t * r * r)) / (2 * r * r)
    ref = 2 * integrate.quad(f, 0, 200, limit=2000)[0] + 2 * integrate.quad(lambda r: 1 / (r * r), 200, np.inf)[0] \
        - 2 * integrate.quad(lambda r: 1 / (r * r), 200, np.inf, weight="cos", wvar=h)[0]
    v = green.increment_space_integral(HEAT, WhiteNoise(1), t, h)
    assert v == pytest.approx(ref, rel=1e-6)


def test_increment_checks_fractional_case():
    p = FracParams(0.4, 1.5, 0.5)
    k = RieszDelta(1, 0.5)
    c1, c2 = green.check_time_increments(p, k, 1.0, 0.6)
    assert c1.verdict and c2.verdict
    assert green.check_space_increment(p, k, 1.0, 0.2).verdict


def test_increments_reject_inadmissible_kernel():
    with pytest.raises(ValueError):
        green.increment_time_integral(FracParams(0.75, 0.3, 0.0), BesselTau(1, 0.1), 1.0, 0.5)
