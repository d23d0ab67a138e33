"""Command line entry point: ``fracspde <subcommand> ...``.

Exit codes: 0 all requested checks pass, 2 configuration error,
3 admissibility rejection, 4 numerical failure, 5 a requested check failed.
Environment: FRACSPDE_THREADS (worker threads), FRACSPDE_OUT (output directory).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, analysis, config, green, kernels, mlf, sim
from .quad import QuadratureError
from .records import BoundCheck

EXIT_OK, EXIT_CONFIG, EXIT_ADMISSIBILITY, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4, 5


class AdmissibilityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _emit(records, as_json: bool, out: Optional[Path] = None, name: str = "checks.jsonl"):
    lines = [r.to_json() if isinstance(r, BoundCheck) else json.dumps(r, sort_keys=True) for r in records]
    if as_json:
        for line in lines:
            print(line)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text("".join(line + "\n" for line in lines))
    elif not as_json:
        for line in lines:
            print(line)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    path.write_text(buf.getvalue())


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def normalization_hash() -> str:
    text = resources.files("fracspde").joinpath("NORMALIZATION.md").read_bytes()
    return hashlib.sha256(text).hexdigest()


def _versions() -> dict:
    return {"fracspde": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _status(checks) -> int:
    return EXIT_OK if all(c.verdict is True for c in checks) else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------
# preflight


def preflight(cfg: config.RunConfig, holder: bool = False) -> list[BoundCheck]:
    """Hypothesis 1 always (rejection raises AdmissibilityError); Hypothesis 2 when Holder work is asked."""
    p, k = cfg.params, cfg.kernel
    if k.d != p.d:
        raise AdmissibilityError(f"kernel dimension {k.d} differs from params.d = {p.d}")
    checks = []
    rho = kernels.dalang_exponent(p)
    h1 = kernels.check_hypothesis(k, rho, quantity="hypothesis-1")
    h1.regime = p.regime
    try:
        text, margin = kernels.closed_form_inequality(k, p)
        h1.detail["inequality"] = text
        h1.detail["inequality_margin"] = margin
    except (TypeError, ValueError):
        text = f"integral of (1+|xi|^2)^-{rho:g} against mu finite"
    checks.append(h1)
    if h1.verdict is not True:
        what = "fails" if h1.verdict is False else "cannot be decided"
        raise AdmissibilityError(f"Hypothesis 1 {what} for kernel {k.describe()} with "
                                 f"beta={p.beta:g}, alpha={p.alpha:g}, gamma={p.gamma:g}, d={p.d}: "
                                 f"condition {text} (exponent {rho:g})")
    checks.append(kernels.check_tempered(k))
    if holder:
        hw = kernels.holder_windows(p, k)
        chk = BoundCheck("hypothesis-2", hw.eta, hw.rho_max, hw.rho_max - hw.eta_floor, not hw.empty,
                         "closed-form", p.regime,
                         detail={"eta_floor": hw.eta_floor, "eta": hw.eta, "rho": hw.rho,
                                 "time_exponent": hw.time_exponent, "space_exponent": hw.space_exponent})
        checks.append(chk)
        if hw.empty:
            raise AdmissibilityError("Hypothesis 2 window is empty: need (d - delta)/2 < "
                                     f"{hw.rho_max:g}, have floor {hw.eta_floor:g}")
    return checks


# ---------------------------------------------------------------------------
# simulation


def run_sampler(cfg: config.RunConfig, replicas: int, seed: int, threads: int = 1) -> sim.Field:
    sc = cfg.simulate
    batch = int(sc["batch"])
    if sc["sampler"] == "picard":
        with threadpool_limits(1):
            f, deltas = sim.picard_iterate(cfg.grid, cfg.params, cfg.kernel, cfg.sigma, cfg.u0, seed, replicas,
                                           k_max=sc["k_max"], tol=sc["tol"], scheme=sc["scheme"])
        f.meta["iterates_delta"] = deltas
        return f
    chunks = [range(a, min(a + batch, replicas)) for a in range(0, replicas, batch)]

    def one(rg):
        with threadpool_limits(1):
            if sc["sampler"] == "additive":
                return sim.sample_additive(cfg.grid, cfg.params, cfg.kernel, seed, rg, batch=batch)
            return sim.walsh_recursion(cfg.grid, cfg.params, cfg.kernel, cfg.sigma, cfg.u0, seed, rg,
                                       scheme=sc["scheme"], batch=batch)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(one, chunks))
    else:
        parts = [one(c) for c in chunks]
    vals = np.concatenate([p.values for p in parts])
    first = parts[0]
    return sim.Field(vals, cfg.grid, cfg.params, first.provenance, seed, tuple(range(replicas)), dict(first.meta))


MOMENT_COLUMNS = ("t", "x", "mean", "m2", "m4", "stderr")
REPLICA_COLUMNS = ("replica", "final_mean", "final_m2", "max_abs")


def write_simulation(out: Path, cfg: config.RunConfig, f: sim.Field, checks, replicas: int, seed: int):
    out.mkdir(parents=True, exist_ok=True)
    v = f.values
    R = v.shape[0]
    t = cfg.grid.times()
    g = cfg.grid
    ax = g.coords()
    if g.d == 1:
        xs = [(float(a),) for a in ax]
    else:
        xs = [(float(a), float(b)) for a in ax for b in ax]
    mean = v.mean(axis=0)
    m2 = (v * v).mean(axis=0)
    m4 = (v**4).mean(axis=0)
    se = v.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(mean)
    header = ("t", "x") if g.d == 1 else ("t", "x", "y")
    header = header + MOMENT_COLUMNS[2:]

    def rows():
        for i, ti in enumerate(t):
            for j, xj in enumerate(xs):
                yield (ti,) + xj + (mean[i, j], m2[i, j], m4[i, j], se[i, j])

    write_csv(out / "moments.csv", header, rows())
    write_csv(out / "replicas.csv", REPLICA_COLUMNS,
              ((r, v[r, -1].mean(), (v[r, -1] ** 2).mean(), np.abs(v[r]).max()) for r in range(R)))
    if cfg.simulate.get("save_fields", True):
        np.save(out / "fields.npy", v)
    artifacts = {name: _sha256(out / name) for name in ("moments.csv", "replicas.csv")}
    manifest = {
        "config": cfg.echo(), "seed": seed, "replicas": replicas, "provenance": f.provenance,
        "versions": _versions(), "normalization_sha256": normalization_hash(),
        "preflight": [c.to_dict() for c in checks], "artifacts": artifacts,
        "meta": {k: v for k, v in f.meta.items() if k != "kernel"},
        "created_unix": int(time.time()),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_run(directory: Path, threads: int = 1):
    """(config, Field) from a simulate output directory; re-simulates when no fields.npy."""
    man = json.loads((directory / "manifest.json").read_text())
    cfg = config.from_dict(man["config"])
    seed, replicas = int(man["seed"]), int(man["replicas"])
    fp = directory / "fields.npy"
    if fp.exists():
        f = sim.Field(np.load(fp), cfg.grid, cfg.params, man.get("provenance", "loaded"), seed,
                      tuple(range(replicas)), {})
    else:
        f = run_sampler(cfg, replicas, seed, threads)
    return cfg, f


# ---------------------------------------------------------------------------
# subcommands


def cmd_mlf_eval(a) -> int:
    v = mlf.eval_ml(a.beta, a.x, tol=a.tol)
    lo, hi = mlf.ml_bounds(a.beta, a.x)
    print(json.dumps({"beta": a.beta, "x": a.x, "value": v, "lower": lo, "upper": hi}))
    return EXIT_OK


def cmd_check(a) -> int:
    cfg = config.load(a.config)
    p, k = cfg.params, cfg.kernel
    try:
        checks = preflight(cfg, holder=bool(cfg.analysis.get("holder")))
    except AdmissibilityError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    hw = kernels.holder_windows(p, k)
    if not any(c.quantity == "hypothesis-2" for c in checks):
        checks.append(BoundCheck("hypothesis-2", hw.eta, hw.rho_max, hw.rho_max - hw.eta_floor, not hw.empty,
                                 "closed-form", p.regime, detail={"eta_floor": hw.eta_floor}))
    checks.append(BoundCheck("green-l1", p.order, float(p.d), p.order - p.d, p.order > p.d, "closed-form",
                             p.regime, detail={"condition": "alpha+gamma>d"}))
    if a.json:
        _emit(checks, True)
    else:
        print(f"{'check':<16} {'verdict':<8} {'margin':>12} route")
        for c in checks:
            m = "" if c.margin is None else f"{c.margin:.6g}"
            print(f"{c.quantity:<16} {str(c.verdict):<8} {m:>12} {c.route}")
    return EXIT_OK


def cmd_green(a) -> int:
    cfg = config.load(a.config)
    p, k = cfg.params, cfg.kernel
    checks = []
    if a.what == "l2":
        if a.t is None:
            raise config.ConfigError("--t is required")
        g = green.GreenSymbol(p, a.t)
        val, bound = green.green_l2(g), green.l2_bound(g)
        checks.append(BoundCheck("green-l2", val, bound, bound - val, val <= bound * (1 + 1e-6), "quadrature",
                                 p.regime, detail={"t": a.t}))
    elif a.what == "nt":
        if a.t is None or a.xi is None:
            raise config.ConfigError("--t and --xi are required")
        xi = [float(s) for s in a.xi.split(",")]
        val, bound = green.nt(p, a.t, xi), green.nt_bound(p, a.t, xi)
        checks.append(BoundCheck("nt", val, bound, bound - val, val <= bound, "quadrature", p.regime,
                                 detail={"t": a.t, "xi": xi}))
    else:
        preflight(cfg)
        if a.t is None:
            raise config.ConfigError("--t is required")
        if a.tprime is not None:
            checks.extend(green.check_time_increments(p, k, a.t, a.tprime))
        if a.h is not None:
            checks.append(green.check_space_increment(p, k, a.t, a.h))
        if not checks:
            raise config.ConfigError("give --tprime and/or --h")
    _emit(checks, a.json, Path(a.out) if a.out else None)
    return _status(checks)


def cmd_simulate(a) -> int:
    cfg = config.load(a.config)
    replicas = a.replicas if a.replicas is not None else cfg.replicas
    seed = a.seed if a.seed is not None else cfg.seed
    if replicas < 1:
        raise config.ConfigError("--replicas must be >= 1")
    if cfg.grid is None:
        raise config.ConfigError(f"params.d: simulation supports d <= 2, got {cfg.params.d}")
    checks = preflight(cfg, holder=bool(cfg.analysis.get("holder")))
    out = config.output_dir(cfg, a.out)
    threads = config.thread_count(a.threads)
    f = run_sampler(cfg, replicas, seed, threads)
    man = write_simulation(out, cfg, f, checks, replicas, seed)
    if a.json:
        print(json.dumps({"out": str(out), "replicas": replicas, "seed": seed,
                          "artifacts": man["artifacts"]}, sort_keys=True))
    return _status(checks)


def cmd_analyze(a) -> int:
    threads = config.thread_count(a.threads)
    dirs = [Path(d) for d in a.inp]
    out = Path(a.out) if a.out else config.output_dir(None)
    out.mkdir(parents=True, exist_ok=True)
    checks = []
    if a.what == "moments":
        loaded = [load_run(d, threads) for d in dirs]
        cfg0 = loaded[0][0]
        if len(loaded) == 1:
            rep = analysis.moment_report(loaded[0][1])
            reps = [rep]
        else:
            reps, chk = analysis.moment_growth([f for _, f in loaded], cfg0.kernel,
                                               band=cfg0.analysis["growth_band"])
            checks.append(chk)
        write_csv(out / "moments.csv", ("lam", "t", "sup_m2", "stderr", "pooled_m2"),
                  ((r.lam,) + row for r in reps for row in r.rows()))
        write_csv(out / "growth.csv", ("lam", "growth_rate", "growth_stderr", "fit_start", "fit_end", "replicas"),
                  ((r.lam, r.growth_rate, r.growth_stderr, r.fit_window[0], r.fit_window[1], r.replicas)
                   for r in reps))
    elif a.what == "holder":
        cfg, f = load_run(dirs[0], threads)
        preflight(cfg, holder=True)
        rows = []
        for axis in ("time", "space"):
            h = analysis.holder_fit(f, cfg.params, cfg.kernel, axis)
            checks.append(h.to_check())
            for lag, m in zip(h.lags, h.m2_increments):
                rows.append((axis, lag, m, h.fitted_slope, h.slope_stderr, h.theoretical_window[0],
                             h.theoretical_window[1]))
        write_csv(out / "holder.csv", ("axis", "lag", "m2_increment", "fitted_slope", "slope_stderr",
                                       "window_low", "window_high"), rows)
    elif a.what == "covariance":
        cfg, f = load_run(dirs[0], threads)
        steps = [int(s) for s in cfg.analysis["lag_steps"]]
        ti = cfg.grid.nt
        emp, se = analysis.empirical_covariance(f, ti, steps)
        c1 = analysis.covariance_check(f, cfg.params, cfg.kernel, ti, steps)
        c2 = analysis.stationarity_check(f, ti, steps)
        checks += [c1, c2]
        ref = c1.detail["quadrature"]
        write_csv(out / "covariance.csv", ("t", "lag", "empirical", "stderr", "quadrature", "z"),
                  ((cfg.grid.T, s * cfg.grid.dx, e, s_, r, abs(e - r) / s_)
                   for s, e, s_, r in zip(steps, emp, se, ref)))
    else:  # temporal
        cfg = load_run(dirs[0], threads)[0] if (dirs[0] / "manifest.json").exists() else config.load(dirs[0])
        tau = float(cfg.analysis["tau"])
        rep = analysis.temporal_asymptotics(cfg.params, cfg.kernel, tau, cfg.analysis["t_list"])
        checks.append(rep.check)
        write_csv(out / "temporal.csv", ("t", "tau", "covariance"),
                  [(t, tau, v) for t, v in zip(rep.t_list, rep.values)] + [("inf", tau, rep.limit)])
    _emit(checks, a.json, out)
    return _status(checks)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracspde", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, cfg_required=True):
        p.add_argument("--json", action="store_true", help="emit JSON records on stdout")
        if cfg_required:
            p.add_argument("--config", required=True, help="TOML or JSON run configuration")

    m = sub.add_parser("mlf", help="Mittag-Leffler evaluation")
    msub = m.add_subparsers(dest="mlf_cmd", required=True)
    e = msub.add_parser("eval")
    e.add_argument("--beta", type=float, required=True)
    e.add_argument("--x", type=float, required=True)
    e.add_argument("--tol", type=float, default=mlf.DEFAULT_TOL)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_mlf_eval)

    c = sub.add_parser("check", help="admissibility verdicts for a configuration")
    common(c)
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("green", help="Green-function bounds")
    g.add_argument("what", choices=("l2", "nt", "increments"))
    common(g)
    g.add_argument("--t", type=float)
    g.add_argument("--xi", help="comma-separated frequency vector")
    g.add_argument("--tprime", type=float)
    g.add_argument("--h", type=float)
    g.add_argument("--out")
    g.set_defaults(func=cmd_green)

    s = sub.add_parser("simulate", help="sample the mild solution")
    common(s)
    s.add_argument("--replicas", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="verdicts on simulated runs")
    an.add_argument("what", choices=("holder", "moments", "covariance", "temporal"))
    an.add_argument("--in", dest="inp", action="append", required=True,
                    help="run directory (repeat for a lambda sweep); for temporal also a config file")
    an.add_argument("--out")
    an.add_argument("--threads", type=int)
    an.add_argument("--json", action="store_true")
    an.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return a.func(a)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except (sim.BlowUpError, sim.NonContractionError, QuadratureError, mlf.MLConvergenceError,
            ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # remaining value errors come from admissibility-type preconditions in the modules
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
