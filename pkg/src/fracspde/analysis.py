"""Verdicts on simulated fields and on the spectral integrals behind them.

Monte Carlo comparisons use 5-standard-error bands from the replica variance;
standard errors of fitted slopes come from a delete-one-group jackknife over
replica groups, so they account for the correlation between lags and times.

Covariances follow the physical normalisation of the noise module:

    E U(t, x) U(t, z) = (2 pi)^-d int rho(xi) e^{i xi.(x - z)} N_t(xi) dxi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import quad
from .green import (_GL_W, _GL_X, _angular_average_cos, _mu_integral, _oscillatory_tail,
                    _require_admissible, nt_radial, transition_radius)
from .kernels import (FracParams, FractionalProduct, SpectralKernel, holder_windows,
                      riesz_equivalent_delta)
from .mlf import ml_neg
from .records import BoundCheck
from .sim import BLOWUP, Field

BAND = 5.0


def _jackknife(stat, values: np.ndarray, groups: int):
    """(estimate on all replicas, jackknife standard error over ``groups`` replica groups)."""
    R = values.shape[0]
    g = max(2, min(groups, R))
    edges = np.linspace(0, R, g + 1).astype(int)
    full = stat(values)
    loo = []
    for a, b in zip(edges[:-1], edges[1:]):
        keep = np.concatenate([values[:a], values[b:]])
        loo.append(stat(keep))
    loo = np.asarray(loo, float)
    se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean(axis=0)) ** 2, axis=0)))
    return full, se


def _slope(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xm = x - x.mean()
    return float(xm @ (y - y.mean()) / (xm @ xm))


# ---------------------------------------------------------------------------
# second-moment growth


@dataclass
class MomentReport:
    """sup_x E|u(t, x)|^2 along the horizon of one run."""

    lam: float
    times: np.ndarray
    sup_m2: np.ndarray
    stderr: np.ndarray
    replicas: int
    pooled_m2: np.ndarray
    growth_rate: float = math.nan
    growth_stderr: float = math.nan
    fit_window: tuple = ()
    blowup: bool = False

    def rows(self):
        for t, m, s, p in zip(self.times, self.sup_m2, self.stderr, self.pooled_m2):
            yield float(t), float(m), float(s), float(p)


def moment_report(f: Field, frac: float = 1.0 / 3.0, groups: int = 10) -> MomentReport:
    """sup over the grid of the replica mean of u^2 and the growth-rate proxy.

    The growth rate is the least-squares slope of log sup_m2 against t over the
    final ``frac`` of the horizon (the limsup proxy).
    """
    v = f.values
    R = v.shape[0]
    sq = v * v
    m = sq.mean(axis=0)                         # (nt+1, N)
    arg = np.argmax(m, axis=1)
    sup = m[np.arange(m.shape[0]), arg]
    se = sq[:, np.arange(m.shape[0]), arg].std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(sup)
    t = f.grid.times()
    sel = t >= (1.0 - frac) * t[-1]
    blow = bool(f.meta.get("blowup", False)) or bool(np.max(np.abs(v)) > BLOWUP)

    def rate(sub):
        s = (sub * sub).mean(axis=0).max(axis=1)
        return _slope(t[sel], np.log(np.maximum(s[sel], 1e-300)))

    g, gse = _jackknife(rate, v, groups) if R > 1 else (rate(v), math.nan)
    return MomentReport(lam=f.params.lam, times=t, sup_m2=sup, stderr=se, replicas=R,
                        pooled_m2=m.mean(axis=1), growth_rate=float(g), growth_stderr=float(gse),
                        fit_window=(float(t[sel][0]), float(t[-1])), blowup=blow)


def growth_exponent(p: FracParams, k: SpectralKernel) -> float:
    """2(alpha+gamma) / ((alpha+gamma) - beta(d - delta))."""
    delta = riesz_equivalent_delta(k)
    if delta is None:
        raise ValueError(f"kernel {k.tag!r} has no Riesz-equivalent delta")
    s = p.order
    gap = s - p.beta * (p.d - delta)
    if not (0.0 < p.d - delta < s) or gap <= 0:
        raise ValueError(f"need 0 < d - delta < alpha + gamma (d - delta = {p.d - delta:g})")
    return 2.0 * s / gap


def moment_growth(fields: Sequence[Field], kernel: SpectralKernel, band: float = 0.3,
                  frac: float = 1.0 / 3.0, groups: int = 10):
    """Growth rates over a lambda sweep and the exponent check.

    Each field is one run at its own lambda (same beta, alpha, gamma, nu, d).
    The verdict requires the log-log slope of g against lambda to lie within
    ``band`` of the predicted exponent and g to be nondecreasing in lambda
    within 5 standard errors. The bound g(lambda) <= C lambda^e with C fitted
    at the smallest lambda is evaluated and reported in ``detail`` only: the
    constant of the growth bound is existential, so a finite sweep cannot
    refute it.
    """
    if len(fields) < 2:
        raise ValueError("a lambda sweep needs at least two runs")
    p0 = fields[0].params
    e = growth_exponent(p0, kernel)
    reps = sorted((moment_report(f, frac, groups) for f in fields), key=lambda r: r.lam)
    lam = np.array([r.lam for r in reps])
    g = np.array([r.growth_rate for r in reps])
    gse = np.array([r.growth_stderr for r in reps])
    detail = {"lambdas": lam.tolist(), "growth_rates": g.tolist(), "growth_stderr": gse.tolist(),
              "expected_exponent": e, "band": band,
              "horizons": [r.times[-1] for r in reps], "replicas": [r.replicas for r in reps]}
    if any(r.blowup for r in reps):
        detail["blowup"] = True
        return reps, BoundCheck("growth-exponent", None, e, None, None, "monte-carlo", detail=detail)
    if np.any(lam <= 0) or np.any(g <= 0):
        detail["reason"] = "nonpositive lambda or growth rate; log-log fit impossible"
        return reps, BoundCheck("growth-exponent", None, e, None, None, "monte-carlo", detail=detail)
    x, y = np.log(lam), np.log(g)
    slope = _slope(x, y)
    # jackknife-free slope error: propagate the per-run rate errors (runs are independent)
    xm = x - x.mean()
    rel = np.where(np.isfinite(gse), gse / g, 0.0)
    slope_se = float(math.sqrt(np.sum((xm / (xm @ xm)) ** 2 * rel**2)))
    mono = bool(np.all(np.diff(g) >= -BAND * np.sqrt(gse[1:] ** 2 + gse[:-1] ** 2)))
    C = g[0] / lam[0] ** e
    ratio = g / (C * lam**e)
    detail.update(slope_stderr=slope_se, monotone=mono, constant=C,
                  constant_ratio=ratio.tolist(),
                  constant_bound_ok=bool(np.all(ratio <= 1.0 + BAND * rel + 1e-12)))
    margin = band - abs(slope - e)
    return reps, BoundCheck("growth-exponent", slope, e, margin, bool(margin >= 0 and mono),
                            "monte-carlo", detail=detail)


def growth_rate_oracle(p: FracParams, k: SpectralKernel, lipschitz: float = 1.0,
                       rtol: float = 1e-7) -> float:
    """Exponential growth rate of E u^2 for sigma(u) = L u and constant u0.

    The second moment solves m(t) = u0^2 + (lam L)^2 int_0^t k(t-s) m(s) ds with
    k(s) = (2 pi)^-d int rho E_beta(-nu s^beta S)^2 dxi, so the rate g solves
    (lam L)^2 int_0^inf e^{-g s} k(s) ds = 1. Returns 0 when no positive root
    exists (the integral of k is below the threshold).
    """
    _require_admissible(p, k)
    c = (p.lam * lipschitz) ** 2
    if c == 0:
        return 0.0
    edges = np.linspace(0.0, 1.0, 49)
    a, b = edges[:-1], edges[1:]
    tau = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]).ravel()
    w = (0.5 * (b - a)[:, None] * _GL_W[None, :]).ravel()
    lw0, lw1 = math.log(1e-16), math.log(60.0)
    wn = np.exp(lw0 + (lw1 - lw0) * tau)
    ww = w * (lw1 - lw0) * wn * np.exp(-wn)

    def laplace(gr):
        def inner(r):
            r = np.asarray(r, float)
            S = p.nu * p.symbol(r.ravel())
            X = S[:, None] * (wn[None, :] / gr) ** p.beta
            E = ml_neg(p.beta, X.ravel()).reshape(X.shape)
            return ((E * E) @ ww / gr).reshape(r.shape)
        val = _mu_integral(k, inner, scale=transition_radius(p, 1.0 / gr), rtol=rtol)
        return val / (2 * math.pi) ** p.d

    h = lambda lg: c * laplace(math.exp(lg)) - 1.0
    lo, hi = -40.0, 5.0
    while h(hi) > 0:
        hi += 5.0
        if hi > 60:
            raise ArithmeticError("growth-rate root not bracketed")
    if h(lo) < 0:
        return 0.0
    return math.exp(brentq(h, lo, hi, xtol=1e-10))


# ---------------------------------------------------------------------------
# Holder fits


@dataclass
class HolderFit:
    axis: str
    lags: list
    m2_increments: list
    fitted_slope: float
    slope_stderr: float
    theoretical_window: tuple
    verdict: Optional[bool] = None
    note: str = ""

    def to_check(self) -> BoundCheck:
        lo, hi = self.theoretical_window
        margin = self.fitted_slope + 2 * self.slope_stderr - lo if math.isfinite(self.fitted_slope) else None
        return BoundCheck(f"holder-{self.axis}", self.fitted_slope, lo, margin, self.verdict, "monte-carlo",
                          regime=self.note,
                          detail={"lags": self.lags, "m2_increments": self.m2_increments,
                                  "slope_stderr": self.slope_stderr, "window": list(self.theoretical_window)})


def _increment_m2(v: np.ndarray, grid, axis: str, steps, t_index, t_start):
    """(R, nlags) mean squared increments per replica."""
    out = np.empty((v.shape[0], len(steps)))
    if axis == "time":
        nt = v.shape[1] - 1
        i0 = t_start
        i1 = nt - max(steps)
        if i1 < i0:
            raise ValueError("time window too short for the requested lags")
        for j, s in enumerate(steps):
            d = v[:, i0 + s:i1 + s + 1] - v[:, i0:i1 + 1]
            out[:, j] = np.mean(d * d, axis=(1, 2))
    else:
        u = v[:, t_index].reshape((v.shape[0],) + grid.shape)
        for j, s in enumerate(steps):
            acc = 0.0
            for ax in range(1, grid.d + 1):
                d = np.roll(u, -s, axis=ax) - u
                acc = acc + np.mean(d * d, axis=tuple(range(1, grid.d + 1)))
            out[:, j] = acc / grid.d
    return out


def holder_fit(f: Field, params: FracParams, kernel: SpectralKernel, axis: str,
               steps: Optional[Sequence[int]] = None, t_index: Optional[int] = None,
               t_start: Optional[int] = None, groups: int = 10) -> HolderFit:
    """Fit the Holder index of the sampled field along ``axis`` ("time" or "space").

    The slope of (1/2) log E|u(.+lag) - u(.)|^2 against log lag is fitted over
    dyadic lags (in grid steps). Time increments are pooled over space and
    over base times t_start.. (default: second half of the horizon); space
    increments over all grid points at ``t_index`` (default: last time).
    Verdict: fitted + 2 se >= window low; a fit at or above 1 (smooth field)
    is outside the stochastic regime and reported as not-applicable (None).
    """
    if axis not in ("time", "space"):
        raise ValueError("axis must be 'time' or 'space'")
    g = f.grid
    if steps is None:
        limit = g.nt // 4 if axis == "time" else g.n // 16
        steps = [2**j for j in range(0, 8) if 2**j <= limit][:5]
    steps = sorted(set(int(s) for s in steps), reverse=True)
    if len(steps) < 4 or steps[-1] < 1:
        raise ValueError(f"Holder fit needs >= 4 positive lags representable on the grid, got {steps}")
    if t_index is None:
        t_index = g.nt
    if t_start is None:
        t_start = g.nt // 2
    hw = holder_windows(params, kernel)
    if hw.empty and axis == "space":
        raise ValueError("Hypothesis-2 window is empty: no spatial Holder exponent is guaranteed")
    low = hw.time_exponent if axis == "time" else hw.space_exponent
    window = (float(low), 1.0)
    unit = g.dt if axis == "time" else g.dx
    lags = [s * unit for s in steps]
    m = _increment_m2(f.values, g, axis, steps, t_index, t_start)
    mean = m.mean(axis=0)
    if np.any(mean <= 0):
        return HolderFit(axis, lags, mean.tolist(), math.inf, 0.0, window, None, "not-applicable")
    lx = np.log(lags)

    def stat(sub):
        return 0.5 * _slope(lx, np.log(sub.mean(axis=0)))

    slope, se = _jackknife(stat, m, groups) if m.shape[0] > 1 else (stat(m), math.nan)
    if slope - 2 * (se if math.isfinite(se) else 0.0) >= 1.0:
        return HolderFit(axis, lags, mean.tolist(), slope, se, window, None, "not-applicable")
    verdict = bool(slope + 2 * (se if math.isfinite(se) else 0.0) >= low)
    return HolderFit(axis, lags, mean.tolist(), slope, se, window, verdict, "")


# ---------------------------------------------------------------------------
# spatial covariance and stationarity


def covariance_rt(params: FracParams, kernel: SpectralKernel, t: float, lag=0.0,
                  rtol: float = 1e-9) -> float:
    """R_t(lag) = (2 pi)^-d int rho(xi) e^{i xi.lag} N_t(xi) dxi.

    Directions are averaged (isotropic kernels), which makes the angular factor
    cos(r |lag|) in d = 1 and a Bessel-type factor in d = 2.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    _require_admissible(params, kernel)
    h = float(np.sqrt(np.sum(np.square(np.atleast_1d(np.asarray(lag, float))))))
    d = params.d
    norm = (2 * math.pi) ** d
    if h == 0.0:
        v = _mu_integral(kernel, lambda r: nt_radial(params, t, r), scale=transition_radius(params, t), rtol=rtol)
        return v / norm
    if isinstance(kernel, FractionalProduct) and d > 1:
        raise ValueError("covariance at a nonzero lag needs an isotropic kernel in d > 1")
    g = lambda r: kernel.radial_mass(r) * nt_radial(params, t, r)
    period = 2 * math.pi / h
    rs = transition_radius(params, t)
    K = int(max(200, math.ceil(4 * rs / period)))
    R0 = K * period
    geo = [R0 * 2.0 ** (-j) for j in range(1, 80)]
    per = list(np.arange(1, K) * period) if K <= 4000 else list(np.linspace(0, R0, 4001)[1:-1])
    br = np.unique(np.array([0.0] + geo + per + [R0]))
    f = lambda r: g(r) * _angular_average_cos(d, r * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        head, _, _ = quad.adaptive(lambda r: np.nan_to_num(f(r)), br, rtol=rtol * 1e-2,
                                   atol=1e-14, max_panels=200000)
    return (head + _oscillatory_tail(g, d, h, R0)) / norm


def empirical_covariance(f: Field, t_index: int, lag_steps: Sequence[int]):
    """Covariance at lags along the first axis, pooled over grid points.

    Returns (cov, stderr) arrays; the error treats replicas as independent
    (each replica contributes one spatial average).
    """
    R = f.n_replicas
    u = f.spatial(t_index)
    out, se = [], []
    for s in lag_steps:
        prod = (u * np.roll(u, -int(s), axis=1)).reshape(R, -1).mean(axis=1)
        out.append(prod.mean())
        se.append(prod.std(ddof=1) / math.sqrt(R))
    return np.array(out), np.array(se)


def covariance_check(f: Field, params: FracParams, kernel: SpectralKernel, t_index: int,
                     lag_steps: Sequence[int] = (0, 1, 2, 4, 8)) -> BoundCheck:
    """Empirical spatial covariance against covariance_rt, 5 stderr per lag."""
    t = f.grid.times()[t_index]
    emp, se = empirical_covariance(f, t_index, lag_steps)
    ref = np.array([covariance_rt(params, kernel, t, s * f.grid.dx) for s in lag_steps])
    z = np.abs(emp - ref) / se
    return BoundCheck("covariance-vs-quadrature", float(z.max()), BAND, float(BAND - z.max()),
                      bool(np.all(z <= BAND)), "monte-carlo",
                      detail={"t": t, "lags": [s * f.grid.dx for s in lag_steps], "empirical": emp.tolist(),
                              "stderr": se.tolist(), "quadrature": ref.tolist(), "z": z.tolist()})


def stationarity_check(f: Field, t_index: int, lag_steps: Sequence[int] = (0, 1, 2, 4, 8),
                       positions: int = 8) -> BoundCheck:
    """Covariance at shifted pairs sharing a lag, and the mean, against 5 pooled stderr.

    For each lag the covariance is estimated at ``positions`` well-separated
    base points; each must agree with the position-pooled value within
    5 standard errors of the difference. The mean field must be within
    5 stderr of 0 at every grid point.
    """
    R = f.n_replicas
    if R < 2:
        raise ValueError("stationarity check needs at least two replicas")
    u = f.spatial(t_index).reshape(R, f.grid.n, -1)  # first axis carries the shifts
    n = f.grid.n
    base = (np.arange(positions) * (n // positions)) % n
    worst = 0.0
    per_lag = []
    for s in lag_steps:
        prod = u * np.roll(u, -int(s), axis=1)            # (R, n, rest)
        c_all = prod.mean()
        zs = []
        for b in base:
            px = prod[:, b].mean(axis=-1)
            # the position estimate minus the pooled one, per replica
            dx = px - prod.reshape(R, -1).mean(axis=1)
            se = dx.std(ddof=1) / math.sqrt(R)
            zs.append(abs(dx.mean()) / se if se > 0 else 0.0)
        per_lag.append({"lag_steps": int(s), "pooled": float(c_all), "max_z": float(max(zs))})
        worst = max(worst, max(zs))
    mu = u.mean(axis=0)
    mse = u.std(axis=0, ddof=1) / math.sqrt(R)
    zmean = float(np.max(np.abs(mu) / np.where(mse > 0, mse, np.inf)))
    ok = worst <= BAND and zmean <= BAND
    return BoundCheck("stationarity", max(worst, zmean), BAND, BAND - max(worst, zmean), bool(ok), "monte-carlo",
                      detail={"per_lag": per_lag, "mean_max_z": zmean, "replicas": R,
                              "t": float(f.grid.times()[t_index])})


# ---------------------------------------------------------------------------
# large-time behaviour


def _log_nodes(lo, hi):
    """Composite GL nodes/weights in log u on [lo, hi] (arrays of shape (K,) each)."""
    edges = np.linspace(0.0, 1.0, 49)
    a, b = edges[:-1], edges[1:]
    tau = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]).ravel()
    w = (0.5 * (b - a)[:, None] * _GL_W[None, :]).ravel()
    la, lb = np.log(lo), np.log(hi)
    L = (lb - la)[:, None]
    u = np.exp(la[:, None] + L * tau[None, :])
    return u, w[None, :] * u * L


def _lagged_product(p: FracParams, t: float, tau: float, r):
    """int_0^t F(u + tau, r) F(u, r) du per radius."""
    r = np.asarray(r, float)
    shape = r.shape
    r = r.ravel()
    S = p.nu * p.symbol(r)
    with np.errstate(divide="ignore"):
        ustar = np.where(S > 0, S ** (-1.0 / p.beta), np.inf)
    lo = 1e-14 * np.minimum(ustar, t)
    u, w = _log_nodes(lo, np.full(r.size, t))
    prod = ml_neg(p.beta, S[:, None] * (u + tau) ** p.beta) * ml_neg(p.beta, S[:, None] * u**p.beta)
    val = np.sum(prod * w, axis=1) + lo * ml_neg(p.beta, S * tau**p.beta)
    return val.reshape(shape)


def _limit_integrand(p: FracParams, tau: float, r):
    """(1 / (beta S^(1/beta))) int_{S tau^beta}^inf x^(1/beta-1) E(-x) E(-S((x/S)^(1/beta) - tau)^beta) dx."""
    r = np.asarray(r, float)
    shape = r.shape
    r = r.ravel()
    S = p.nu * p.symbol(r)
    b = p.beta
    x0 = S * tau**b
    lo = np.where(x0 > 0, x0, 1e-14)
    hi = np.maximum(lo, 1.0) * 1e10
    x, w = _log_nodes(lo, hi)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        inner = np.maximum((x / S[:, None]) ** (1.0 / b) - tau, 0.0)
        f = x ** (1.0 / b - 1) * ml_neg(b, x) * ml_neg(b, S[:, None] * inner**b)
    val = np.sum(f * w, axis=1)
    # tail beyond hi: E(-x) ~ x^-1 / Gamma(1-beta) for both factors
    from scipy.special import gamma as G
    e = 1.0 / b - 2.0
    val += hi**e / (-e) / G(1.0 - b) ** 2
    if tau == 0.0:
        val += lo ** (1.0 / b) * b  # [0, lo]: E ~ 1
    with np.errstate(divide="ignore"):
        out = val / (b * S ** (1.0 / b))
    return out.reshape(shape)


@dataclass
class TemporalReport:
    tau: float
    t_list: list
    values: list
    limit: float
    differences: list
    check: BoundCheck


def temporal_asymptotics(params: FracParams, kernel: SpectralKernel, tau: float,
                         t_list: Sequence[float] = (5.0, 10.0, 20.0, 40.0), rtol: float = 1e-8) -> TemporalReport:
    """E U(t + tau, x) U(t, x) along t_list and its large-time limit.

    The values come from direct (u, xi) quadrature of
    (2 pi)^-d int rho(xi) int_0^t F(u + tau) F(u) du dxi; the limit from the
    change of variables x = nu (u + tau)^beta S in the s-integral. The check
    passes when successive differences shrink strictly (Cauchy behaviour) and
    the limit is finite. Only tau >= 0 is supported.
    """
    if not (0.5 < params.beta < 1.0):
        raise ValueError("limit integral diverges unless 1/2 < beta < 1 (1/beta - 2 must be negative)")
    if tau < 0:
        raise ValueError("only tau >= 0 is implemented")
    _require_admissible(params, kernel)
    norm = (2 * math.pi) ** params.d
    ts = sorted(float(t) for t in t_list)
    vals = []
    for t in ts:
        v = _mu_integral(kernel, lambda r: _lagged_product(params, t, tau, r),
                         scale=transition_radius(params, t), rtol=rtol, k_lo=-24, k_hi=16)
        vals.append(v / norm)
    lim = _mu_integral(kernel, lambda r: _limit_integrand(params, tau, r),
                       scale=transition_radius(params, ts[-1]), rtol=rtol, k_lo=-24, k_hi=16) / norm
    diffs = [abs(b - a) for a, b in zip(vals[:-1], vals[1:])]
    shrinking = all(b < a for a, b in zip(diffs[:-1], diffs[1:]))
    finite = math.isfinite(lim)
    chk = BoundCheck("temporal-cauchy", diffs[-1] if diffs else None, diffs[0] if diffs else None,
                     None, bool(shrinking and finite), "quadrature",
                     detail={"tau": tau, "t": ts, "values": vals, "differences": diffs, "limit": lim,
                             "limit_finite": finite})
    return TemporalReport(tau, ts, vals, lim, diffs, chk)


def kernel_double_integral(params: FracParams, kernel: SpectralKernel, t: float,
                           rtol: float = 1e-10) -> BoundCheck:
    """Ratio test of I(t) = int E_beta(-nu t^beta S)^2 mu(dxi) at t and 2t.

    I(t) is the spectral form of the double integral of G_t G_t f; the check is
    I(2t) / I(t) <= 2^(-beta(d-delta)/(alpha+gamma)) (1 + 1e-3).
    """
    _require_admissible(params, kernel)
    delta = riesz_equivalent_delta(kernel)
    if delta is None:
        raise ValueError(f"kernel {kernel.tag!r} has no Riesz-equivalent delta")
    if not (0.0 < params.d - delta < params.order):
        raise ValueError("need 0 < d - delta < alpha + gamma")

    def I(s):
        h = lambda r: ml_neg(params.beta, params.nu * s**params.beta * params.symbol(r)) ** 2
        return _mu_integral(kernel, h, scale=transition_radius(params, s), rtol=rtol)

    a, b = I(t), I(2 * t)
    theta = params.beta * (params.d - delta) / params.order
    bound = 2.0 ** (-theta) * (1 + 1e-3)
    ratio = b / a
    return BoundCheck("kernel-double-integral", ratio, bound, bound - ratio,
                      bool(a > 0 and b > 0 and ratio <= bound), "quadrature", params.regime,
                      detail={"t": t, "I(t)": a, "I(2t)": b, "theta": theta})
