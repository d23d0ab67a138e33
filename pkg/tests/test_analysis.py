import math

import numpy as np
import pytest

from fracspde import analysis, sim
from fracspde.kernels import BesselTau, FracParams, RieszDelta, WhiteNoise
from fracspde.noise import GridSpec

HEAT = FracParams(1.0, 2.0, 0.0, 1.0, 1.0, 1)
TUPLE = FracParams(0.75, 1.5, 0.5, 1.0, 1.0, 1)


def test_heat_covariance_at_zero_lag():
    assert analysis.covariance_rt(HEAT, WhiteNoise(1), 1.0) == pytest.approx(math.sqrt(1 / (2 * math.pi)), rel=1e-8)


def test_heat_covariance_at_a_lag():
    # R_t(y) = int_0^t (8 pi s)^-1/2 exp(-y^2 / (8 s)) ds
    from scipy.integrate import quad
    y = 0.7
    ref = quad(lambda s: math.exp(-y * y / (8 * s)) / math.sqrt(8 * math.pi * s), 0, 1.0)[0]
    assert analysis.covariance_rt(HEAT, WhiteNoise(1), 1.0, y) == pytest.approx(ref, rel=1e-7)


def test_growth_exponent_and_oracle():
    k = RieszDelta(1, 0.5)
    assert analysis.growth_exponent(TUPLE, k) == pytest.approx(2.4615, abs=1e-3)
    g = [analysis.growth_rate_oracle(TUPLE.replace(lam=lam), k) for lam in (0.5, 1.0, 2.0, 4.0)]
    assert g[1] == pytest.approx(0.43119, rel=1e-3)
    slope = np.polyfit(np.log([0.5, 1, 2, 4]), np.log(g), 1)[0]
    assert abs(slope - 2.4615) < 0.3


def test_heat_growth_rate_closed_form():
    # heat, white noise, d = 1: the renewal equation lambda^2 / (2 sqrt(2 g)) = 1 gives g = lambda^4 / 8
    g = analysis.growth_rate_oracle(HEAT.replace(lam=1.5), WhiteNoise(1))
    assert g == pytest.approx(1.5**4 / 8, rel=1e-5)


def test_kernel_double_integral_ratio():
    chk = analysis.kernel_double_integral(TUPLE, RieszDelta(1, 0.5), 1.0)
    assert chk.verdict
    heat = analysis.kernel_double_integral(HEAT, WhiteNoise(1), 1.0)
    assert heat.value == pytest.approx(2 ** -0.5, rel=1e-6)


def test_temporal_limit_at_zero_shift():
    p = FracParams(0.75, 0.5, 1.0)
    rep = analysis.temporal_asymptotics(p, WhiteNoise(1), 0.0, (5.0, 10.0, 20.0, 40.0))
    assert rep.check.verdict
    assert rep.values == sorted(rep.values)
    assert rep.values[-1] < rep.limit


def test_temporal_rejects_bad_inputs():
    with pytest.raises(ValueError):
        analysis.temporal_asymptotics(FracParams(0.4, 0.5, 1.0), WhiteNoise(1), 0.0)
    with pytest.raises(ValueError):
        analysis.temporal_asymptotics(FracParams(0.75, 0.5, 1.0), WhiteNoise(1), -1.0)


def _brownian_field(R=400, n=16, nt=256, seed=0):
    g = GridSpec(1, 4.0, n, 1 / nt, nt)
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal((R, nt, n)) * math.sqrt(g.dt)
    v = np.concatenate([np.zeros((R, 1, n)), np.cumsum(inc, axis=1)], axis=1)
    return sim.Field(v, g, HEAT, "synthetic")


def test_holder_fit_recovers_brownian_index():
    f = _brownian_field()
    h = analysis.holder_fit(f, HEAT, WhiteNoise(1), "time")
    assert h.fitted_slope == pytest.approx(0.5, abs=0.02)
    assert list(h.lags) == sorted(h.lags, reverse=True)


def test_empirical_covariance_of_white_field():
    f = _brownian_field()
    cov, se = analysis.empirical_covariance(f, f.grid.nt, (0, 1, 3))
    assert abs(cov[0] - 1.0) < 5 * se[0]
    assert abs(cov[1]) < 5 * se[1] and abs(cov[2]) < 5 * se[2]
    assert analysis.stationarity_check(f, f.grid.nt, (0, 1)).verdict


def test_moment_report_exponential_growth():
    # synthetic field with second moment exp(g t), g = 1.3
    g = GridSpec(1, 4.0, 8, 0.05, 60)
    rng = np.random.default_rng(1)
    t = g.times()
    z = rng.standard_normal((2000, 1, g.n))
    v = z * np.exp(0.65 * t)[None, :, None]
    rep = analysis.moment_report(sim.Field(v, g, TUPLE.replace(lam=2.0), "synthetic"))
    assert rep.growth_rate == pytest.approx(1.3, abs=5 * rep.growth_stderr + 0.05)


def test_moment_growth_needs_two_runs():
    with pytest.raises(ValueError):
        analysis.moment_growth([_brownian_field()], WhiteNoise(1))
