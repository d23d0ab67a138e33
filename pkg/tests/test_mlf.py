import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfcx

from fracspde.mlf import MlQuery, eval_ml, ml_bounds, ml_neg


def ml_reference(beta, x, dps=60):
    """Direct power series in high precision (independent of the package)."""
    with mpmath.workdps(dps):
        b, z = mpmath.mpf(beta), -mpmath.mpf(x)
        return float(mpmath.nsum(lambda k: z**k / mpmath.gamma(b * k + 1), [0, mpmath.inf]))


@pytest.mark.parametrize("beta,x", [(0.3, 0.5), (0.5, 2.0), (0.75, 3.0), (0.9, 0.1), (0.25, 5.0)])
def test_matches_high_precision_series(beta, x):
    ref = ml_reference(beta, x)
    assert abs(eval_ml(beta, x) - ref) <= 1e-10
    assert abs(eval_ml(beta, x, tol=1e-13) - ref) <= 1e-13


def test_closed_forms():
    for x in (0.0, 0.3, 4.0, 30.0):
        assert eval_ml(1.0, x) == pytest.approx(math.exp(-x), abs=1e-15)
        assert eval_ml(0.5, x) == pytest.approx(erfcx(x), abs=1e-10)


def test_bounds_half_at_one():
    lo, hi = ml_bounds(0.5, 1.0)
    assert lo == pytest.approx(1 / (1 + math.gamma(0.5)), rel=1e-12)   # 0.360691
    assert hi == pytest.approx(1 / (1 + 1 / math.gamma(1.5)), rel=1e-12)
    assert lo <= eval_ml(0.5, 1.0) <= hi


def test_query_validation():
    with pytest.raises(ValueError):
        MlQuery(0.0, 1.0)
    with pytest.raises(ValueError):
        MlQuery(0.5, -1.0)
    with pytest.raises(ValueError):
        eval_ml(0.5, 1.0, tol=0.1)
    with pytest.raises(ValueError):
        ml_neg(0.5, np.array([1.0, np.inf]))


def test_vectorised_agrees_with_scalar():
    for beta in (0.2, 0.5, 0.8):
        x = np.concatenate([[0.0], np.logspace(-4, 4, 60)])
        v = ml_neg(beta, x)
        ref = np.array([eval_ml(beta, float(t)) for t in x])
        assert np.max(np.abs(v - ref)) < 2e-10


def test_large_argument_relative_accuracy():
    # E_beta(-x) ~ x^-1 / Gamma(1 - beta) for large x
    beta, x = 0.6, 1e6
    v = float(ml_neg(beta, np.array([x]))[0])
    lead = 1 / (x * math.gamma(1 - beta)) - 1 / (x**2 * math.gamma(1 - 2 * beta))
    assert v == pytest.approx(lead, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0.0, 200.0))
def test_sandwich_and_monotone(beta, x):
    v = eval_ml(beta, x)
    lo, hi = ml_bounds(beta, x)
    assert lo - 1e-12 <= v <= hi + 1e-12
    assert eval_ml(beta, x + 0.5) <= v + 1e-12
