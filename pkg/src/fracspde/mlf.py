"""Mittag-Leffler function E_beta(-x) for 0 < beta <= 1 and x >= 0.

Two evaluators live here:

* :func:`eval_ml` is the certified scalar path. It switches between the
  alternating power series (double precision), the large-argument asymptotic
  expansion, and the power series summed in extended precision (mpmath).
* :func:`ml_neg` is the vectorised workhorse used by the quadrature and
  simulation code. It inverts the Laplace transform s^(beta-1)/(s^beta + x)
  on a parabolic contour, and uses the asymptotic expansion where that is
  accurate to full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gamma, rgamma

DEFAULT_TOL = 1e-10

# asymptotic branch is disabled above this order (poles of 1/Gamma(1 - beta k) crowd in)
ASYMPTOTIC_MAX_BETA = 0.95


class MLConvergenceError(ArithmeticError):
    """Raised when no evaluation regime can certify the requested tolerance."""


@dataclass(frozen=True)
class MlQuery:
    beta: float
    x: float

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0) or math.isnan(self.beta):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not (self.x >= 0.0) or math.isinf(self.x):
            raise ValueError(f"x must be finite and >= 0, got {self.x}")


def _as_query(q, x=None) -> MlQuery:
    if isinstance(q, MlQuery):
        return q
    return MlQuery(float(q), float(x))


# ---------------------------------------------------------------------------
# scalar, certified


def _series_double(beta: float, x: float, tol: float):
    """Alternating series in double precision; None if not certifiable."""
    total = 0.0
    max_term = 0.0
    j = 0
    term = 1.0
    prev = math.inf
    while True:
        term = x**j * rgamma(1.0 + beta * j)
        if term > max_term:
            max_term = term
        if max_term * 1e-16 * (j + 1) > tol / 10:
            return None
        total += term if j % 2 == 0 else -term
        # past the peak, |terms| decrease and the tail is bounded by the next term
        if j > 0 and term < prev and x ** (j + 1) * rgamma(1.0 + beta * (j + 1)) < tol / 10:
            return total
        prev = term
        j += 1
        if j > 2000:
            return None


def _asymptotic_terms(beta: float, x: float, kmax: int = 60) -> np.ndarray:
    k = np.arange(1, kmax + 1)
    return (-1.0) ** (k + 1) * np.exp(-k * math.log(x)) * rgamma(1.0 - beta * k)


def _asymptotic(beta: float, x: float, tol: float):
    """Optimally truncated asymptotic expansion; None if the smallest term is too big."""
    if beta > ASYMPTOTIC_MAX_BETA or x <= 1.0:
        return None
    terms = _asymptotic_terms(beta, x)
    mags = np.abs(terms)
    # terms with 1 - beta k a non-positive integer vanish exactly; skip them for the minimum
    nz = mags > 0
    if not nz.any():
        return None
    idx = np.flatnonzero(nz)
    kstar = idx[np.argmin(mags[idx])]
    err = mags[kstar]
    if beta > 2.0 / 3.0:
        # exponentially small oscillatory terms exp(x^(1/beta) e^(+-i pi/beta)) enter past beta = 2/3
        err += 2.0 / beta * math.exp(x ** (1.0 / beta) * math.cos(math.pi / beta))
    if err > tol / 100:
        return None
    return float(np.sum(terms[:kstar]))


def _series_mp(beta: float, x: float, tol: float, max_terms: int = 200_000) -> float:
    """Power series in extended precision with an alternating-series tail bound."""
    T = x ** (1.0 / beta)
    # log10 of the largest term is about T / ln 10
    dps = int(T / math.log(10)) + int(-math.log10(tol)) + 15
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        xx = mpmath.mpf(x)
        eps = mpmath.mpf(tol) / 10
        total = mpmath.mpf(0)
        prev = mpmath.inf
        for j in range(max_terms):
            term = xx**j / mpmath.gamma(1 + b * j)
            total += term if j % 2 == 0 else -term
            if j > 0 and term < prev:
                nxt = xx ** (j + 1) / mpmath.gamma(1 + b * (j + 1))
                if nxt < eps and nxt < term:
                    return float(total)
            prev = term
    raise MLConvergenceError(f"series did not converge for beta={beta}, x={x}")


def eval_ml(q, x=None, tol: float = DEFAULT_TOL) -> float:
    """E_beta(-x) with absolute error <= tol.

    Accepts either an :class:`MlQuery` or ``(beta, x)``.
    """
    q = _as_query(q, x)
    if not (0.0 < tol <= 1e-3):
        raise ValueError(f"tol must lie in (0, 1e-3], got {tol}")
    beta, x = q.beta, q.x
    if x == 0.0:
        return 1.0
    if beta == 1.0:
        return math.exp(-x)
    if x < 1.0:
        v = _series_double(beta, x, tol)
        if v is not None:
            return v
    v = _asymptotic(beta, x, tol)
    if v is not None:
        return v
    v = _series_double(beta, x, tol)
    if v is not None:
        return v
    return _series_mp(beta, x, tol)


def ml_bounds(q, x=None) -> tuple[float, float]:
    """Two-sided enclosure 1/(1+Gamma(1-beta)x) <= E_beta(-x) <= 1/(1+x/Gamma(1+beta)).

    At beta = 1 the lower bound is replaced by exp(-x) itself.
    """
    q = _as_query(q, x)
    beta, x = q.beta, q.x
    upper = 1.0 / (1.0 + x / gamma(1.0 + beta))
    if beta == 1.0:
        lower = math.exp(-x)
    else:
        lower = 1.0 / (1.0 + gamma(1.0 - beta) * x)
    return lower, upper


# ---------------------------------------------------------------------------
# vectorised

_CONTOUR_N = 18


@lru_cache(maxsize=None)
def _contour_nodes(n: int = _CONTOUR_N):
    # Weideman-Trefethen parabola s(u) = mu (1 + iu)^2 for t = 1
    h = 3.0 / n
    mu = math.pi * n / 12.0
    u = h * np.arange(-n, n + 1)
    s = mu * (1.0 + 1j * u) ** 2
    ds = 2j * mu * (1.0 + 1j * u)
    w = np.exp(s) * ds * h / (2j * math.pi)
    return s, w


@lru_cache(maxsize=256)
def _asymptotic_threshold(beta: float, K: int = 16) -> float:
    """Smallest x past which the K-term expansion is good to ~1e-15 relative."""
    if beta > ASYMPTOTIC_MAX_BETA:
        return math.inf
    k = np.arange(1, K + 2)
    rg = np.abs(rgamma(1.0 - beta * k))
    for x in np.geomspace(1.5, 1e6, 400):
        mags = rg * x ** (-k.astype(float))
        expo = math.exp(x ** (1.0 / beta) * math.cos(math.pi / beta)) if beta > 2.0 / 3.0 else 0.0
        if (mags[-1] <= 1e-16 * mags[0] and np.all(mags[1:] <= 10 * mags[0])
                and expo <= 1e-16 * mags[0]):
            return float(x)
    return math.inf


def ml_neg(beta: float, x) -> np.ndarray:
    """Vectorised E_beta(-x) for array ``x >= 0``.

    Absolute accuracy is ~1e-14 everywhere; for large x the asymptotic branch
    also keeps full relative accuracy, which matters for tail integrals.
    """
    beta = float(beta)
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise ValueError("x must be finite and >= 0")
    if beta == 1.0:
        return np.exp(-x)
    out = np.empty_like(x)
    flat = x.ravel()
    res = out.reshape(-1)
    zero = flat == 0.0
    res[zero] = 1.0
    thr = _asymptotic_threshold(beta)
    big = flat >= thr
    if big.any():
        xb = flat[big]
        K = 16
        acc = np.zeros_like(xb)
        inv = 1.0 / xb
        p = np.ones_like(xb)
        for k in range(1, K + 1):
            p = p * inv
            acc += (-1.0) ** (k + 1) * p * rgamma(1.0 - beta * k)
        res[big] = acc
    mid = ~(zero | big)
    if mid.any():
        s, w = _contour_nodes()
        sb = s**beta
        kern = w * sb / s
        xm = flat[mid]
        # chunk to bound the temporary (len(xm), nodes) array
        vals = np.empty_like(xm)
        step = 65536
        for i in range(0, xm.size, step):
            xi = xm[i:i + step]
            vals[i:i + step] = (kern[None, :] / (sb[None, :] + xi[:, None])).sum(axis=1).real
        res[mid] = vals
    return out
