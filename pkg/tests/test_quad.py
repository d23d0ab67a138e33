import math

import numpy as np
import pytest

from fracspde import quad


def test_finite_interval():
    assert quad.integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-12)


def test_endpoint_singularity_with_geometric_breaks():
    br = quad.geometric_breaks(0.0, 1.0)
    val, _, _ = quad.adaptive(lambda x: x ** -0.5, br, rtol=1e-10)
    assert val == pytest.approx(2.0, rel=1e-6)


def test_radial_power_tails():
    # int_0^inf r / (1 + r^2)^2 dr = 1/2
    res = quad.radial(lambda r: r / (1 + r * r) ** 2)
    assert res.converged is True
    assert res.value == pytest.approx(0.5, rel=1e-8)


def test_radial_detects_divergence():
    res = quad.radial(lambda r: 1.0 / (1.0 + r) ** 0.5)
    assert res.converged is False


def test_radial_slow_convergence_is_summed():
    # tail ~ r^-1.2 needs the geometric tail correction
    res = quad.radial(lambda r: 1.0 / (1.0 + r) ** 1.2)
    assert res.converged is True
    assert res.value == pytest.approx(5.0, rel=1e-6)
