"""Sampling the mild solution on a periodic grid.

All samplers work on batches of replicas; a :class:`Field` holds values of
shape (R, nt+1, n^d). Spectral arrays use the real-FFT half spectrum
(last axis n//2 + 1), so the physical fields are real by construction.

Replica r of every sampler is driven by the noise stream keyed by (seed, r),
which is the one :func:`noise.synthesize` produces, so different samplers can
be compared path by path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .green import fourier_green_radial
from .kernels import FracParams, SpectralKernel, check_hypothesis, dalang_exponent
from .noise import GridSpec, _generator, hermitian_normals, spectral_amplitude

BLOWUP = 1e12


class BlowUpError(ArithmeticError):
    """max |u| exceeded the guard; moment blow-up suspected."""


class NonContractionError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# coefficient and initial data


@dataclass(frozen=True)
class SigmaSpec:
    """sigma(u): kind in {constant, linear, saturating, custom}."""

    kind: str = "linear"
    value: float = 1.0          # c for constant, L for linear / saturating
    eps: float = 1.0            # saturation scale
    table_x: tuple = ()
    table_y: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "saturating", "custom"):
            raise ValueError(f"unknown sigma kind {self.kind!r}")
        if self.kind == "saturating" and not self.eps > 0:
            raise ValueError("saturating sigma needs eps > 0")
        if self.kind == "custom":
            x = np.asarray(self.table_x, float)
            if x.size < 2 or x.size != len(self.table_y) or np.any(np.diff(x) <= 0):
                raise ValueError("custom sigma needs matching increasing tables of length >= 2")
            self._verify_custom()

    def __call__(self, u):
        u = np.asarray(u)
        if self.kind == "constant":
            return np.full_like(u, self.value, dtype=float)
        if self.kind == "linear":
            return self.value * u
        if self.kind == "saturating":
            return self.value * u / (1.0 + self.eps * np.abs(u))
        # linear interpolation, extended with the end slopes
        x = np.asarray(self.table_x, float)
        y = np.asarray(self.table_y, float)
        lo = (y[1] - y[0]) / (x[1] - x[0])
        hi = (y[-1] - y[-2]) / (x[-1] - x[-2])
        out = np.interp(u, x, y)
        out = np.where(u < x[0], y[0] + lo * (u - x[0]), out)
        return np.where(u > x[-1], y[-1] + hi * (u - x[-1]), out)

    @property
    def lipschitz_constant(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind in ("linear", "saturating"):
            return abs(self.value)
        x = np.asarray(self.table_x, float)
        y = np.asarray(self.table_y, float)
        return float(np.max(np.abs(np.diff(y) / np.diff(x))))

    def _verify_custom(self, pairs: int = 10_000, seed: int = 0):
        x = np.asarray(self.table_x, float)
        span = x[-1] - x[0]
        rng = np.random.default_rng(seed)
        a = rng.uniform(x[0] - span, x[-1] + span, pairs)
        b = rng.uniform(x[0] - span, x[-1] + span, pairs)
        Ls = self.lipschitz_constant
        if np.any(np.abs(self(a) - self(b)) > Ls * np.abs(a - b) * (1 + 1e-12) + 1e-300):
            raise ValueError("custom sigma violates its Lipschitz constant")

    def to_dict(self):
        d = {"kind": self.kind, "value": self.value}
        if self.kind == "saturating":
            d["eps"] = self.eps
        if self.kind == "custom":
            d.update(table_x=list(self.table_x), table_y=list(self.table_y))
        return d


@dataclass(frozen=True)
class InitialCondition:
    """u0: kind in {zero, constant, tabulated}; bounded and nonnegative."""

    kind: str = "zero"
    value: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "tabulated"):
            raise ValueError(f"unknown initial condition {self.kind!r}")
        if self.kind == "constant" and not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError("constant initial value must be finite and >= 0")
        if self.kind == "tabulated":
            s = np.asarray(self.samples, float)
            if s.size == 0 or np.any(s < 0) or not np.all(np.isfinite(s)):
                raise ValueError("tabulated initial data must be finite and nonnegative")

    def on_grid(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(grid.size)
        if self.kind == "constant":
            return np.full(grid.size, float(self.value))
        s = np.asarray(self.samples, float).ravel()
        if s.size != grid.size:
            raise ValueError(f"tabulated initial data has {s.size} values, grid has {grid.size}")
        return s.copy()

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        return d


@dataclass(eq=False)
class Field:
    """Sampled realisations u(t_i, x_j); values has shape (R, nt+1, n^d)."""

    values: np.ndarray
    grid: GridSpec
    params: FracParams
    provenance: str
    seed: Optional[int] = None
    replicas: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.ndim == 2:
            self.values = self.values[None]
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def n_replicas(self) -> int:
        return self.values.shape[0]

    def at_time(self, i: int) -> np.ndarray:
        """(R, n^d) values at saved time index i."""
        return self.values[:, i]

    def spatial(self, i: int) -> np.ndarray:
        return self.values[:, i].reshape((self.n_replicas,) + self.grid.shape)


# ---------------------------------------------------------------------------
# spectral helpers


def _rfft(u, grid):
    axes = tuple(range(-grid.d, 0))
    return np.fft.rfftn(u.reshape(u.shape[:-1] + grid.shape), axes=axes) / grid.size


def _irfft(c, grid):
    axes = tuple(range(-grid.d, 0))
    u = np.fft.irfftn(c, s=grid.shape, axes=axes) * grid.size
    return u.reshape(u.shape[: u.ndim - grid.d] + (grid.size,))


def _half(z, grid):
    """Restrict full-spectrum arrays (..., n, ..., n) to the rfft half."""
    return z[..., : grid.n // 2 + 1]


def smoothed_initial(grid: GridSpec, params: FracParams, u0: InitialCondition) -> np.ndarray:
    """(G_t u0)(x) at the saved times, shape (nt+1, n^d)."""
    v = u0.on_grid(grid)
    c = _rfft(v, grid)
    r = grid.freq_radius(half=True)
    F = fourier_green_radial(params, grid.times()[:, None], r.ravel()[None, :]).reshape((grid.nt + 1,) + r.shape)
    out = _irfft(F * c[None], grid)
    # the zero mode is carried exactly, so constants are preserved bit-for-bit up to the FFT round trip
    if u0.kind in ("zero", "constant"):
        out[:] = v[0]
    return out


def _admissible(params, kernel):
    if kernel.d != params.d:
        raise ValueError("kernel and parameter dimensions differ")
    chk = check_hypothesis(kernel, dalang_exponent(params))
    if chk.verdict is not True:
        raise ValueError(f"Dalang-type condition not satisfied for kernel {kernel.describe()}")
    return chk


def _noise_normals(grid: GridSpec, seed: int, replicas: Sequence[int]):
    """Half-spectrum unit normals of the increments, shape (R, nt) + half grid shape."""
    return np.stack([_half(hermitian_normals(_generator(seed, r), grid.shape, grid.nt), grid) for r in replicas])


def _residual_normals(grid: GridSpec, seed: int, replicas: Sequence[int]):
    return np.stack([_half(hermitian_normals(_generator(seed, r, 1), grid.shape, grid.nt), grid)
                     for r in replicas])


# ---------------------------------------------------------------------------
# exact additive sampler

_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


def _step_nodes(dt: float):
    """Plain GL16 nodes on [0, dt] and nodes graded toward 0 (40 dyadic panels + 1)."""
    x, w = _GL16
    v = 0.5 * dt * (x + 1)
    wv = 0.5 * dt * w
    xg, wg = _GL8
    edges = dt * np.exp2(-np.arange(41, dtype=float))[::-1]
    edges = np.concatenate([[0.0], edges])
    a, b = edges[:-1], edges[1:]
    vg = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * xg[None, :]).ravel()
    wgv = (0.5 * (b - a)[:, None] * wg[None, :]).ravel()
    return v, wv, vg, wgv


def additive_covariances(params: FracParams, grid: GridSpec, radii: np.ndarray):
    """For each radius: (A, C) with, at unit noise intensity,

    C[i, i'] = Cov(X(t_i), X(t_i'))  and  A[i, j] = Cov(X(t_i), dB_j) / sqrt(dt),
    X(t) = int_0^t F(t - s) dB(s), i = 1..nt, j = 0..nt-1.
    Shapes (K, nt, nt).
    """
    nt, dt = grid.nt, grid.dt
    v, wv, vg, wg = _step_nodes(dt)
    K = radii.size
    shifts = np.arange(2 * nt + 1) * dt
    A = np.zeros((K, nt, nt))
    C = np.zeros((K, nt, nt))
    im = np.arange(nt)[:, None] - np.arange(nt)[None, :]  # i - i' (rows i, cols i')
    for k, r in enumerate(radii):
        Fv = fourier_green_radial(params, (shifts[:, None] + v[None, :]).ravel(), r).reshape(shifts.size, v.size)
        Fg = fourier_green_radial(params, (shifts[: nt + 1, None] + vg[None, :]).ravel(), r).reshape(nt + 1, vg.size)
        # I[m, l] = int_{l dt}^{(l+1) dt} F(m dt + u) F(u) du
        m = np.arange(nt)[:, None]
        l = np.arange(nt)[None, :]
        I = np.einsum("mlq,lq,q->ml", Fv[m + l], Fv[:nt], wv)
        I[:, 0] = (Fg[:nt] * Fg[0][None, :]) @ wg
        Kc = np.cumsum(I, axis=1)  # Kc[m, j-1] = sum_{l<j} I[m, l]
        # J(m) = int_{(m-1)dt}^{m dt} F, m = 1..nt
        J = np.empty(nt)
        J[0] = Fg[0] @ wg
        J[1:] = Fv[1:nt] @ wv
        ii = np.arange(nt)
        # times t_i with i = ii + 1; C[i, i'] for i >= i': lag m = i - i', j = i' (number of steps)
        lag = np.abs(im)
        jmin = np.minimum(ii[:, None], ii[None, :])  # (index of earlier time) - 1
        C[k] = Kc[lag, jmin]
        diff = ii[:, None] - ii[None, :]  # (i - 1) - j
        A[k] = np.where(diff >= 0, J[np.clip(diff, 0, nt - 1)], 0.0) / math.sqrt(dt)
    return A, C


def _sqrt_psd(M):
    lam, V = np.linalg.eigh(0.5 * (M + np.swapaxes(M, -1, -2)))
    lam = np.clip(lam, 0.0, None)
    return V * np.sqrt(lam)[..., None, :]


def sample_additive(grid: GridSpec, params: FracParams, kernel: SpectralKernel, seed: int,
                    replicas=1, batch: int = 256) -> Field:
    """Exact-in-law samples of U(t, x) = int_0^t int G_{t-s}(x-y) W(ds, dy) on the grid.

    Each frequency is sampled jointly with the noise increments of the same
    replica: X = A z + R^(1/2) z', with z the increment normals, so there is no
    time-stepping error and the field is coupled to the driving noise.
    """
    _admissible(params, kernel)
    reps = list(range(replicas)) if isinstance(replicas, int) else list(replicas)
    amp = spectral_amplitude(grid, kernel, half=True)
    r = grid.freq_radius(half=True)
    inv, A, Rh = _additive_factors(params, grid)
    out = np.empty((len(reps), grid.nt + 1, grid.size))
    out[:, 0] = 0.0
    hshape = r.shape
    for b0 in range(0, len(reps), batch):
        rb = reps[b0:b0 + batch]
        z = _noise_normals(grid, seed, rb).reshape(len(rb), grid.nt, -1)
        zr = _residual_normals(grid, seed, rb).reshape(len(rb), grid.nt, -1)
        X = _apply_per_frequency(A[inv], z) + _apply_per_frequency(Rh[inv], zr)
        X *= amp.ravel()[None, None, :]
        out[b0:b0 + len(rb), 1:] = _irfft(X.reshape((len(rb), grid.nt) + hshape), grid)
    return Field(out, grid, params, "additive-exact", seed, tuple(reps), {"kernel": kernel.describe()})


@lru_cache(maxsize=8)
def _additive_factors(params: FracParams, grid: GridSpec):
    """(radius index, A, residual square root) per unique frequency radius; cached per run."""
    r = grid.freq_radius(half=True)
    ur, inv = np.unique(r.ravel(), return_inverse=True)
    A, C = additive_covariances(params, grid, ur)
    Rh = _sqrt_psd(C - A @ np.swapaxes(A, 1, 2))
    for a in (A, Rh):
        a.setflags(write=False)
    return inv, A, Rh


def _apply_per_frequency(M, z):
    """y[r, i, k] = sum_j M[k, i, j] z[r, j, k] for complex z; M real of shape (K, nt, nt)."""
    R, nt, K = z.shape
    zz = np.ascontiguousarray(np.transpose(z, (2, 1, 0)))  # (K, nt, R) complex
    zr = zz.view(np.float64).reshape(K, nt, 2 * R)
    y = np.matmul(M, zr).view(np.complex128).reshape(K, nt, R)
    return np.transpose(y, (2, 1, 0))


# ---------------------------------------------------------------------------
# Walsh recursion and Picard iteration


def _kernel_weights(params, grid, r, scheme: str = "midpoint"):
    """W[l] = F(lag_l) for l = 1..nt with lag (l - 1/2) dt (midpoint) or l dt (left); index 0 unused."""
    l = np.arange(grid.nt + 1, dtype=float)
    lag = (l - 0.5) * grid.dt if scheme == "midpoint" else l * grid.dt
    if scheme not in ("midpoint", "left"):
        raise ValueError("scheme must be 'midpoint' or 'left'")
    lag[0] = 0.0
    W = fourier_green_radial(params, lag[:, None], r.ravel()[None, :])
    W[0] = 0.0
    return W


def walsh_recursion(grid: GridSpec, params: FracParams, kernel: SpectralKernel, sigma: SigmaSpec,
                    u0: InitialCondition, seed: int, replicas=1, scheme: str = "midpoint",
                    batch: int = 256, noise_normals=None) -> Field:
    """u(t_m) = (G u0)(t_m) + lambda sum_{j<m} G_{t_m - t_j} * (sigma(u(t_j)) dW_j), left-point sigma.

    ``noise_normals`` (R, nt, half) may replace the seeded stream (used by tests).
    """
    _admissible(params, kernel)
    reps = list(range(replicas)) if isinstance(replicas, int) else list(replicas)
    amp = spectral_amplitude(grid, kernel, half=True).ravel() * math.sqrt(grid.dt)
    r = grid.freq_radius(half=True)
    W = _kernel_weights(params, grid, r, scheme)
    base = smoothed_initial(grid, params, u0)
    lam = params.lam
    out = np.empty((len(reps), grid.nt + 1, grid.size))
    hshape = r.shape
    for b0 in range(0, len(reps), batch):
        rb = reps[b0:b0 + batch]
        if noise_normals is None:
            z = _noise_normals(grid, seed, rb).reshape(len(rb), grid.nt, -1)
        else:
            z = noise_normals[b0:b0 + len(rb)].reshape(len(rb), grid.nt, -1)
        dW = _irfft((z * amp).reshape((len(rb), grid.nt) + hshape), grid)  # (R, nt, N) physical increments
        u = np.empty((len(rb), grid.nt + 1, grid.size))
        u[:, 0] = base[0]
        H = np.empty((len(rb), grid.nt, amp.size), dtype=complex)
        for m in range(1, grid.nt + 1):
            H[:, m - 1] = _rfft(sigma(u[:, m - 1]) * dW[:, m - 1], grid).reshape(len(rb), -1)
            if lam != 0.0:
                acc = np.einsum("rjk,jk->rk", H[:, :m], W[m:0:-1])
                u[:, m] = base[m] + lam * _irfft(acc.reshape((len(rb),) + hshape), grid)
            else:
                u[:, m] = base[m]
            if np.max(np.abs(u[:, m])) > BLOWUP:
                raise BlowUpError(f"max |u| exceeded {BLOWUP:g} at step {m}: moment blow-up suspected")
        out[b0:b0 + len(rb)] = u
    return Field(out, grid, params, "walsh-recursion", seed, tuple(reps),
                 {"kernel": kernel.describe(), "sigma": sigma.to_dict(), "scheme": scheme})


def picard_iterate(grid: GridSpec, params: FracParams, kernel: SpectralKernel, sigma: SigmaSpec,
                   u0: InitialCondition, seed: int, replicas=1, k_max: int = 20, tol: float = 1e-8,
                   scheme: str = "midpoint", strict: bool = False):
    """Picard iterates of the discrete mild equation with common noise.

    Returns (Field, deltas) where deltas[n] = max over (t, x) of the replica mean
    of |u^(n+1) - u^(n)|^2. Stops at the first n with deltas[n] < tol.
    With ``strict`` a NonContractionError is raised when deltas fail to decrease
    three times in a row.
    """
    _admissible(params, kernel)
    reps = list(range(replicas)) if isinstance(replicas, int) else list(replicas)
    amp = spectral_amplitude(grid, kernel, half=True).ravel() * math.sqrt(grid.dt)
    r = grid.freq_radius(half=True)
    W = _kernel_weights(params, grid, r, scheme)
    nt = grid.nt
    # T[k, m, j] = W[m - j] for j < m (rows m = 1..nt, cols j = 0..nt-1)
    mm = np.arange(1, nt + 1)[:, None]
    jj = np.arange(nt)[None, :]
    lagidx = np.where(jj < mm, mm - jj, 0)
    T = np.transpose(W[lagidx], (2, 0, 1))  # (K, nt, nt)
    base = smoothed_initial(grid, params, u0)
    z = _noise_normals(grid, seed, reps).reshape(len(reps), nt, -1)
    hshape = r.shape
    dW = _irfft((z * amp).reshape((len(reps), nt) + hshape), grid)
    u = np.broadcast_to(base, (len(reps),) + base.shape).copy()
    deltas: list[float] = []
    rising = 0
    for n in range(k_max):
        H = _rfft(sigma(u[:, :-1]) * dW, grid).reshape(len(reps), nt, -1)
        acc = _apply_complex(T, H)
        new = np.broadcast_to(base, u.shape).copy()
        new[:, 1:] += params.lam * _irfft(acc.reshape((len(reps), nt) + hshape), grid)
        if np.max(np.abs(new)) > BLOWUP:
            raise BlowUpError("Picard iterate exceeded the blow-up guard")
        dlt = float(np.max(np.mean((new - u) ** 2, axis=0)))
        deltas.append(dlt)
        u = new
        if len(deltas) > 1 and deltas[-1] >= deltas[-2] and deltas[-1] > 0:
            rising += 1
            if strict and rising >= 3:
                raise NonContractionError(f"Picard deltas failed to decrease 3 times: {deltas}")
        else:
            rising = 0
        if dlt < tol:
            break
    f = Field(u, grid, params, f"picard-iterate {len(deltas)}", seed, tuple(reps),
              {"kernel": kernel.describe(), "sigma": sigma.to_dict(), "scheme": scheme})
    return f, deltas


def _apply_complex(T, H):
    """y[r, m, k] = sum_j T[k, m, j] H[r, j, k]."""
    return _apply_per_frequency(T, H)


# ---------------------------------------------------------------------------
# deterministic second moment of the scheme (linear sigma, constant u0)


def linear_second_moment(grid: GridSpec, params: FracParams, kernel: SpectralKernel, L: float,
                         u0: float, scheme: str = "midpoint") -> np.ndarray:
    """E u(t_m, x)^2 of the Walsh scheme with sigma(u) = L u and u0 constant.

    Independence of dW_j from the past makes all cross-time terms vanish, so the
    power spectrum P_m(k) = E|u_m^(k)|^2 obeys the closed recursion

        P_m = |F(t_m)|^2 P_0 + lambda^2 sum_{j<m} W_{m-j}^2 * FFT[(L^2 C_j Q)] / N,

    with C_j the two-point function of u_j and Q that of the increments.
    """
    if grid.d != params.d:
        raise ValueError("grid and parameter dimensions differ")
    N = grid.size
    r = grid.freq_radius(half=False)
    a2 = spectral_amplitude(grid, kernel, half=False) ** 2 * grid.dt
    axes = tuple(range(grid.d))
    Q = np.fft.ifftn(a2, axes=axes).real * N  # E dW(x) dW(x+y)
    W = _kernel_weights(params, grid, r, scheme).reshape((grid.nt + 1,) + r.shape)
    P = np.zeros((grid.nt + 1,) + r.shape)
    zero = (0,) * grid.d
    m2 = np.empty(grid.nt + 1)
    S = np.zeros((grid.nt,) + r.shape)
    for m in range(grid.nt + 1):
        if m > 0:
            C = np.fft.ifftn(P[m - 1], axes=axes).real * N
            S[m - 1] = np.fft.fftn(L * L * C * Q, axes=axes).real / N
            P[m] = params.lam**2 * np.einsum("j...,j...->...", W[m:0:-1] ** 2, S[:m])
        P[m][zero] += u0 * u0
        m2[m] = P[m].sum()
    return m2
