import math

import numpy as np
import pytest
from scipy import integrate

from fracspde.kernels import (BesselTau, FiniteMeasure, FracParams, FractionalProduct, RieszDelta, WhiteNoise,
                              check_hypothesis, check_tempered, closed_form_inequality, dalang_exponent,
                              holder_windows, make_kernel, near_origin_mass, riesz_equivalent_delta,
                              spectral_density)


def test_param_validation():
    with pytest.raises(ValueError):
        FracParams(0.0, 1.0)
    with pytest.raises(ValueError):
        FracParams(0.5, -1.0)
    with pytest.raises(ValueError):
        FracParams(0.5, 1.0, d=0)
    p = FracParams(0.75, 1.5, 0.5)
    assert p.replace(lam=2.0).lam == 2.0 and p.order == 2.0


def test_symbol_excludes_nu():
    p = FracParams(0.5, 1.0, 2.0, nu=3.0)
    assert float(p.symbol(2.0)) == pytest.approx(2.0 * 5.0)


def test_dalang_exponent_by_regime():
    assert dalang_exponent(FracParams(0.3, 1.0, 0.5)) == 1.5
    assert dalang_exponent(FracParams(0.5, 1.0, 0.5)) == 0.75
    assert dalang_exponent(FracParams(0.75, 1.0, 0.5)) == pytest.approx(1.0)


def test_make_kernel_roundtrip_and_errors():
    for k in (RieszDelta(2, 0.7), BesselTau(1, 2.0), FractionalProduct(2, (0.6, 0.8)), WhiteNoise(1),
              FiniteMeasure(1, 2.0)):
        assert make_kernel(k.describe()) == k
    with pytest.raises(ValueError):
        make_kernel({"type": "riesz", "delta": 1.5, "d": 1})
    with pytest.raises(ValueError):
        make_kernel({"type": "nope"})
    with pytest.raises(ValueError):
        make_kernel({"type": "bessel", "tau": 1.0, "bogus": 1})
    with pytest.raises(ValueError):
        WhiteNoise(2)
    with pytest.raises(ValueError):
        FractionalProduct(1, (0.4,))


def test_spectral_density_points():
    assert spectral_density(RieszDelta(2, 1.0), [3.0, 4.0]) == pytest.approx(0.2)
    assert spectral_density(FractionalProduct(1, (0.75,)), 4.0) == pytest.approx(0.375 * 4.0 ** -0.5)
    with pytest.raises(ValueError):
        spectral_density(RieszDelta(1, 0.5), 0.0)


def test_near_origin_mass_closed_forms():
    assert near_origin_mass(RieszDelta(1, 0.5)) == pytest.approx(2 / 0.5, rel=1e-8)
    assert near_origin_mass(BesselTau(1, 2.0)) == pytest.approx(math.pi / 2, rel=1e-8)
    assert near_origin_mass(RieszDelta(3, 1.0)) == pytest.approx(4 * math.pi / 2, rel=1e-8)


def test_fractional_product_radial_mass_matches_planar_integral():
    k = FractionalProduct(2, (0.7, 0.85))
    # mass of the annulus 1 < |xi| < 2 in polar coordinates, directly from the density
    f = lambda th, r: r * k.density(np.array([r * math.cos(th), r * math.sin(th)]))
    direct = 4 * integrate.dblquad(f, 1.0, 2.0, 0.0, math.pi / 2, epsabs=1e-11)[0]
    radial = integrate.quad(lambda r: float(k.radial_mass(r)), 1.0, 2.0)[0]
    assert radial == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("k,expo,expected", [
    (RieszDelta(1, 0.5), 0.3, True),     # 0.6 + 0.5 > 1
    (RieszDelta(1, 0.5), 0.2, False),
    (BesselTau(3, 1.0), 1.2, True),
    (BesselTau(3, 0.5), 1.0, False),
    (WhiteNoise(1), 0.75, True),
    (WhiteNoise(1), 0.45, False),
    (FiniteMeasure(2), 0.1, True),
])
def test_hypothesis_routes_agree(k, expo, expected):
    q = check_hypothesis(k, expo, route="quadrature")
    assert q.verdict is expected
    if not isinstance(k, FiniteMeasure):
        assert check_hypothesis(k, expo, route="closed-form").verdict is expected


def test_quadrature_value_of_a_finite_condition():
    # white noise, exponent 1: int dxi / (1 + xi^2) = pi
    q = check_hypothesis(WhiteNoise(1), 1.0, route="quadrature")
    assert q.value == pytest.approx(math.pi, rel=1e-8)


def test_closed_form_text_and_margin():
    p = FracParams(0.75, 1.5, 0.5, d=3)
    text, margin = closed_form_inequality(BesselTau(3, 0.1), p)
    assert text == "(alpha+gamma)/beta+tau>d" and margin < 0
    text, margin = closed_form_inequality(RieszDelta(1, 0.5), FracParams(0.3, 1.0, 0.0))
    assert margin == pytest.approx(2.0 + 0.5 - 1.0)


def test_tempered_and_equivalent_delta():
    c = check_tempered(RieszDelta(2, 1.0))
    assert c.verdict and c.detail["m"] == 1
    assert riesz_equivalent_delta(BesselTau(1, 0.4)) == 0.4
    assert riesz_equivalent_delta(BesselTau(1, 2.0)) is None
    assert riesz_equivalent_delta(WhiteNoise(1)) == 0.0


def test_holder_windows_heat_and_fractional():
    w = holder_windows(FracParams(1.0, 2.0, 0.0), WhiteNoise(1))
    assert w.time_exponent == pytest.approx(0.25) and w.space_sharp == pytest.approx(0.5)
    w = holder_windows(FracParams(0.75, 1.5, 0.5), RieszDelta(1, 0.5))
    assert w.time_exponent == pytest.approx(0.25) and not w.empty
    assert w.eta_floor < w.eta < w.rho_max
    w = holder_windows(FracParams(0.75, 0.5, 0.0), WhiteNoise(1))
    assert w.empty
