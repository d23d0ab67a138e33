"""The twelve acceptance criteria, one test each, at the stated tolerances.

Each test records a one-line PASS/FAIL summary that pytest prints in the
"acceptance criteria" section at the end of the run. Running this file
directly (python3 tests/test_acceptance.py) prints the same lines.
"""
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import erfcx

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE  # noqa: E402

from fracspde import analysis, cli, green, kernels, mlf, sim  # noqa: E402
from fracspde.kernels import (BesselTau, FracParams, FractionalProduct, RieszDelta, WhiteNoise,  # noqa: E402
                              check_hypothesis, closed_form_inequality, dalang_exponent, holder_windows)
from fracspde.noise import GridSpec  # noqa: E402


def record(n, ok, msg):
    ACCEPTANCE[n] = (bool(ok), msg)
    if __name__ == "__main__":
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {msg}", flush=True)
    assert ok, msg


def _snapshot(grid, params, fields_last):
    """A two-time Field (0, T) holding only the final slice, for large replica counts."""
    g = GridSpec(grid.d, grid.L, grid.n, grid.T, 1)
    vals = np.zeros((fields_last.shape[0], 2, fields_last.shape[1]))
    vals[:, 1] = fields_last
    return sim.Field(vals, g, params, "additive-exact")


def _final_slices(grid, params, kernel, seed, replicas, chunk=1000, keep_first=False):
    out, first = [], None
    for a in range(0, replicas, chunk):
        f = sim.sample_additive(grid, params, kernel, seed, range(a, min(a + chunk, replicas)))
        out.append(f.values[:, -1].copy())
        if keep_first and first is None:
            first = f
        del f
    return np.concatenate(out), first


# ---------------------------------------------------------------------------


def test_criterion_01_ml_sandwich():
    rng = np.random.default_rng(1)
    beta = rng.uniform(0.05, 0.95, 1000)
    x = rng.uniform(0.0, 50.0, 1000)
    x[x == 0] = 1e-12
    bad = 0
    for b, xx in zip(beta, x):
        v = mlf.eval_ml(b, xx)
        lo, hi = mlf.ml_bounds(b, xx)
        bad += not (lo - 1e-10 <= v <= hi + 1e-10)
    record(1, bad == 0, f"Mittag-Leffler sandwich: {bad} violations in 1000 random (beta, x)")


def test_criterion_02_closed_forms():
    x = np.linspace(0.0, 20.0, 200)
    e1 = max(abs(mlf.eval_ml(1.0, v) - math.exp(-v)) for v in x)
    e2 = max(abs(mlf.eval_ml(0.5, v) - erfcx(v)) for v in x)
    record(2, e1 <= 1e-10 and e2 <= 1e-8, f"max |E_1 - exp| = {e1:.2e} (<=1e-10), max |E_1/2 - erfcx| = {e2:.2e} (<=1e-8)")


def _random_params(rng, regime=None, d=None, lam=1.0):
    if regime is None:
        regime = rng.choice(["lt", "eq", "gt"])
    beta = {"lt": rng.uniform(0.1, 0.45), "eq": 0.5, "gt": rng.uniform(0.55, 0.95)}[regime]
    return FracParams(beta, rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.5, 2.0), lam,
                      int(d if d is not None else rng.integers(1, 4)))


def test_criterion_03_green_l2():
    rng = np.random.default_rng(3)
    bad, n = 0, 0
    worst = -math.inf
    while n < 50:
        p = _random_params(rng)
        if not p.d < 2 * p.order:
            continue
        n += 1
        for t in (0.1, 1.0, 10.0):
            g = green.GreenSymbol(p, t)
            v, b = green.green_l2(g, rtol=1e-6), green.l2_bound(g)
            worst = max(worst, v / b)
            bad += v > b * (1 + 1e-6)
    record(3, bad == 0, f"L2 norm of G_t vs C_2 t^(-beta d/(alpha+gamma)): {bad} violations in 150, max ratio {worst:.4f}")


def test_criterion_04_nt_bound():
    rng = np.random.default_rng(4)
    bad = 0
    regimes = {"lt": 0, "eq": 0, "gt": 0}
    for i in range(200):
        reg = ["lt", "eq", "gt"][i % 3]
        regimes[reg] += 1
        p = _random_params(rng, reg)
        t = float(10 ** rng.uniform(-2, 1.5))
        xi = rng.normal(size=p.d) * 10 ** rng.uniform(-2, 2)
        bad += green.nt(p, t, xi) > green.nt_bound(p, t, xi)
    record(4, bad == 0, f"N_t <= C_2.i(t)(1+|xi|^2)^-rho: {bad} violations in 200 draws {regimes}")


def _increment_draw(rng, reg):
    while True:
        p = _random_params(rng, reg, d=1)
        k = WhiteNoise(1) if rng.random() < 0.3 else RieszDelta(1, float(rng.uniform(0.05, 0.95)))
        if check_hypothesis(k, dalang_exponent(p)).verdict and not holder_windows(p, k).empty:
            return p, k


@pytest.mark.slow
def test_criterion_05_increment_bounds():
    rng = np.random.default_rng(5)
    fails = {"lt": [0, 0, 0], "eq": [0, 0, 0], "gt": [0, 0, 0]}
    examples = []
    for reg in ("lt", "eq", "gt"):
        for _ in range(50):
            p, k = _increment_draw(rng, reg)
            t = float(rng.uniform(0.5, 3.0))
            tp = float(t * rng.uniform(0.05, 0.95))
            h = float(rng.uniform(0.01, 1.0))
            c1, c2 = green.check_time_increments(p, k, t, tp, slack=1e-5)
            c3 = green.check_space_increment(p, k, t, h, slack=1e-5)
            for j, c in enumerate((c1, c2, c3)):
                if not c.verdict:
                    fails[reg][j] += 1
                    if len(examples) < 3:
                        examples.append(f"{c.quantity} beta={p.beta:.3f} t={t:.3f} t'={tp:.3f} "
                                        f"value={c.value:.4g} bound={c.bound:.4g}")
    total = sum(sum(v) for v in fails.values())
    msg = (f"increment integrals vs C_3.i bounds, 50 draws per regime: violations "
           f"[time-1, time-2, space] by regime {fails}")
    if examples:
        msg += "; e.g. " + " | ".join(examples)
    record(5, total == 0, msg)


def test_criterion_06_dalang_checker():
    rng = np.random.default_rng(6)
    compared = disagree = undecided = 0
    for i in range(300):
        p = _random_params(rng)
        d = p.d
        kind = i % 3
        if kind == 0:
            k = RieszDelta(d, float(rng.uniform(0.01, d - 0.01)))
        elif kind == 1:
            k = BesselTau(d, float(rng.uniform(0.01, 3.0)))
        else:
            k = FractionalProduct(d, tuple(float(h) for h in rng.uniform(0.51, 0.99, d)))
        _, margin = closed_form_inequality(k, p)
        if abs(margin) <= 0.05:
            continue
        compared += 1
        v = check_hypothesis(k, dalang_exponent(p), route="quadrature").verdict
        if v is None:
            undecided += 1
        if v != (margin > 0):
            disagree += 1
    record(6, disagree == 0, f"quadrature vs closed-form Hypothesis 1: {disagree} disagreements "
                             f"({undecided} undecided) in {compared} tuples with margin > 0.05")


@pytest.mark.slow
def test_criterion_07_heat_regression():
    p = FracParams(1.0, 2.0, 0.0, 1.0, 1.0, 1)
    w = WhiteNoise(1)
    g = GridSpec(1, 8.0, 256, 1 / 128, 128)
    last, first = _final_slices(g, p, w, seed=11, replicas=10_000, keep_first=True)
    v = last[:, g.n // 2]                      # x = 0
    target = math.sqrt(g.T / (2 * math.pi))
    z = abs(np.mean(v * v) - target) / (np.std(v * v, ddof=1) / math.sqrt(v.size))
    ht = analysis.holder_fit(first, p, w, "time")
    hs = analysis.holder_fit(first, p, w, "space")
    ok = z <= 5 and abs(ht.fitted_slope - 0.25) <= 0.1 and abs(hs.fitted_slope - 0.5) <= 0.1
    record(7, ok, f"heat: Var U(1,0) = {np.mean(v * v):.5f} vs (t/2pi)^1/2 = {target:.5f}, z = {z:.2f} (<=5, 1e4 replicas); "
                  f"time slope {ht.fitted_slope:.3f}+-{ht.slope_stderr:.3f} (0.25+-0.1), "
                  f"space slope {hs.fitted_slope:.3f}+-{hs.slope_stderr:.3f} (0.5+-0.1)")


@pytest.mark.slow
def test_criterion_08_spatial_covariance():
    p = FracParams(0.75, 1.5, 0.5, 1.0, 1.0, 1)
    k = BesselTau(1, 0.5)
    g = GridSpec(1, 16.0, 256, 1 / 128, 128)
    last, _ = _final_slices(g, p, k, seed=5, replicas=10_000)
    f = _snapshot(g, p, last)
    steps = (0, 1, 2, 4, 8)
    cov = analysis.covariance_check(f, p, k, 1, steps)
    st = analysis.stationarity_check(f, 1, steps)
    ok = cov.verdict and st.verdict
    record(8, ok, f"covariance vs R_t quadrature at 5 lags: max z = {cov.value:.2f} (<=5); "
                  f"stationarity max z = {st.value:.2f} (<=5); 1e4 replicas, Bessel tau=0.5, beta=0.75")


@pytest.mark.slow
def test_criterion_09_temporal_index():
    # beta(d - delta)/(alpha+gamma) = 2 - 2 beta makes the local temporal index equal beta - 1/2,
    # and alpha < beta(d - delta) keeps the stationary limit finite
    p = FracParams(0.75, 0.5, 1.0, 1.0, 1.0, 1)
    w = WhiteNoise(1)
    g = GridSpec(1, 8.0, 256, 2.0 / 128, 128)
    f = sim.sample_additive(g, p, w, seed=3, replicas=1000)
    h = analysis.holder_fit(f, p, w, "time")
    rep = analysis.temporal_asymptotics(p, w, 0.5, (5.0, 10.0, 20.0, 40.0))
    ok = abs(h.fitted_slope - (p.beta - 0.5)) <= 0.1 and rep.check.verdict
    record(9, ok, f"temporal slope {h.fitted_slope:.3f}+-{h.slope_stderr:.3f} vs beta-1/2 = 0.25 (+-0.1); "
                  f"covariance differences over t=5,10,20,40: "
                  + ", ".join(f"{d:.4f}" for d in rep.differences) + f" (limit {rep.limit:.4f})")


@pytest.mark.slow
def test_criterion_10_growth_scaling():
    k = RieszDelta(1, 0.5)
    base = FracParams(0.75, 1.5, 0.5, 1.0, 1.0, 1)
    e = analysis.growth_exponent(base, k)
    fields = []
    for lam in (0.5, 1.0, 2.0, 4.0):
        p = base.replace(lam=lam)
        T = 20.0 * lam ** (-e)              # about 8 e-folds of growth at every lambda
        L = 2.0 ** round(math.log2(16.0 * T ** 0.375))
        g = GridSpec(1, L, 256, T / 128, 128)
        fields.append(sim.walsh_recursion(g, p, k, sim.SigmaSpec("linear", 1.0),
                                          sim.InitialCondition("constant", 1.0), seed=7, replicas=1000))
    reps, chk = analysis.moment_growth(fields, k, band=0.3)
    del fields
    g_ = ", ".join(f"{r.growth_rate:.4g}+-{r.growth_stderr:.2g}" for r in reps)
    record(10, chk.verdict, f"log-log slope {chk.value:.3f}+-{chk.detail['slope_stderr']:.3f} vs {e:.4f} (+-0.3); "
                            f"monotone={chk.detail['monotone']}; g(0.5,1,2,4) = {g_}")


def test_criterion_11_picard_contraction():
    p = FracParams(0.75, 1.5, 0.5, 1.0, 0.5, 1)
    k = RieszDelta(1, 0.5)
    g = GridSpec(1, 8.0, 256, 1 / 128, 128)
    _, deltas = sim.picard_iterate(g, p, k, sim.SigmaSpec("linear", 1.0), sim.InitialCondition("constant", 1.0),
                                   seed=2, replicas=200, k_max=8, tol=0.0)
    d = np.array(deltas[:5])
    dec = bool(np.all(np.diff(d) < 0))
    ratio = float(np.exp(np.polyfit(np.arange(5), np.log(d), 1)[0]))
    record(11, dec and ratio < 1, f"Picard deltas n=1..5: " + ", ".join(f"{x:.3g}" for x in d)
           + f"; geometric ratio {ratio:.3f} (<1)")


def test_criterion_12_reproducibility(tmp_path):
    cfg = {"schema": 1, "seed": 99, "replicas": 64,
           "params": {"beta": 0.75, "alpha": 1.5, "gamma": 0.5, "lam": 0.5},
           "kernel": {"type": "riesz", "delta": 0.5},
           "grid": {"L": 8.0, "n": 64, "dt": 1 / 64, "nt": 32},
           "sigma": {"kind": "linear", "value": 1.0}, "u0": {"kind": "constant", "value": 1.0},
           "simulate": {"sampler": "walsh", "batch": 16}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    codes = [cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / f"r{i}"), "--threads", str(th)])
             for i, th in ((1, 1), (2, 3))]
    same = all((tmp_path / "r1" / n).read_bytes() == (tmp_path / "r2" / n).read_bytes()
               for n in ("moments.csv", "replicas.csv"))
    record(12, codes == [0, 0] and same, f"two runs of one config+seed (1 and 3 threads): exit codes {codes}, "
                                         f"CSV bodies byte-identical = {same}")


if __name__ == "__main__":
    import tempfile
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    fn(Path(tempfile.mkdtemp()))
                else:
                    fn()
            except AssertionError:
                pass
