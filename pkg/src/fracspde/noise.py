"""Space-time Gaussian noise, white in time and homogeneous in space, on a periodic grid.

Normalisation (see NORMALIZATION.md): the domain is [-L, L)^d with n points
per axis, frequencies xi_k = k pi / L. The increment field over one time step is

    dW_j(x) = sum_k c_{j,k} exp(i xi_k . (x - x_0)),   E|c_{j,k}|^2 = dt rho(xi_k) / (2L)^d,

which is the lattice version of E[dW(phi) dW(psi)] = dt (2 pi)^-d int Fphi conj(Fpsi) rho.
Coefficients are stored in numpy FFT order, flattened over the d axes.
"""
from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import FractionalProduct, SpectralKernel, WhiteNoise, make_kernel

MAGIC = b"FSNOISE1"


@dataclass(frozen=True)
class GridSpec:
    """Periodic space grid on [-L, L)^d with n points per axis, and nt steps of size dt."""

    d: int = 1
    L: float = 16.0
    n: int = 256
    dt: float = 1.0 / 128
    nt: int = 128

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.d}")
        if self.n < 8 or (self.n & (self.n - 1)):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError("nt must be a positive integer")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def T(self) -> float:
        return self.nt * self.dt

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    def coords(self) -> np.ndarray:
        """Grid points of one axis."""
        return -self.L + self.dx * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        """Frequencies of one axis in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n) * (math.pi / self.L)

    def freq_mesh(self, half: bool = False):
        """Tuple of d frequency arrays on the full (or last-axis-halved) spectral grid."""
        k = self.wavenumbers()
        kl = np.fft.rfftfreq(self.n, d=1.0 / self.n) * (math.pi / self.L) if half else k
        if self.d == 1:
            return (kl,)
        return tuple(np.meshgrid(k, kl, indexing="ij"))

    def freq_radius(self, half: bool = False) -> np.ndarray:
        m = self.freq_mesh(half)
        return np.sqrt(sum(a * a for a in m))

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "n": self.n, "dt": self.dt, "nt": self.nt}


def spectral_amplitude(grid: GridSpec, kernel: SpectralKernel, half: bool = False) -> np.ndarray:
    """sqrt(rho(xi_k) / (2L)^d) on the grid (per unit time), zero mode removed when singular."""
    if kernel.d != grid.d:
        raise ValueError(f"kernel dimension {kernel.d} does not match grid dimension {grid.d}")
    if isinstance(kernel, WhiteNoise) and grid.d != 1:
        raise ValueError("white noise requires d = 1")
    mesh = grid.freq_mesh(half)
    if isinstance(kernel, FractionalProduct):
        dens = _fp_cell_density(grid, kernel, mesh)
    else:
        r = np.sqrt(sum(a * a for a in mesh))
        with np.errstate(divide="ignore"):
            dens = kernel.radial_density(r)
    zero = np.ones(mesh[0].shape, dtype=bool)
    for a in mesh:
        zero &= a == 0
    if kernel.singular_at_origin:
        dens = np.where(zero, 0.0, dens)
    if not np.all(np.isfinite(dens)):
        raise ValueError(f"kernel {kernel.tag!r} is singular at a nonzero grid frequency")
    return np.sqrt(dens / (2.0 * grid.L) ** grid.d)


def _fp_cell_density(grid, kernel: FractionalProduct, mesh):
    # |xi_i|^(1-2H_i) is singular on the coordinate axes; use its average over the
    # frequency cell there (factorised, exact), the point value elsewhere.
    h = math.pi / grid.L
    out = np.full(mesh[0].shape, kernel.coefficient)
    for a, H in zip(mesh, kernel.H):
        p = 1.0 - 2.0 * H
        with np.errstate(divide="ignore"):
            v = np.abs(a) ** p
        cell = (h / 2) ** p / (p + 1.0)  # mean of |s|^p over [-h/2, h/2]
        out = out * np.where(a == 0, cell, v)
    return out


def _generator(seed: int, replica: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica), int(stream)])))


def hermitian_normals(rng: np.random.Generator, shape: tuple, count: int) -> np.ndarray:
    """``count`` slices of unit-variance complex normals, Hermitian-symmetric bit-exactly."""
    z = (rng.standard_normal((count,) + shape) + 1j * rng.standard_normal((count,) + shape)) * math.sqrt(0.5)
    axes = tuple(range(1, len(shape) + 1))
    zr = np.conj(np.roll(np.flip(z, axis=axes), shift=1, axis=axes))
    return (z + zr) * math.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class NoiseSlab:
    """Spectral coefficients of the noise increments, shape (nt, n^d)."""

    increments: np.ndarray
    seed: int
    grid: GridSpec
    kernel: SpectralKernel
    replica: int = 0

    def __post_init__(self):
        self.increments.setflags(write=False)

    def slice_coeffs(self, j: int) -> np.ndarray:
        return self.increments[j].reshape(self.grid.shape)

    def physical(self) -> np.ndarray:
        """Increment field on the grid, shape (nt, n^d), real."""
        g = self.grid
        c = self.increments.reshape((g.nt,) + g.shape)
        axes = tuple(range(1, g.d + 1))
        x = np.fft.ifftn(c, axes=axes).real * g.size
        return x.reshape(g.nt, g.size)

    def dump(self, fh) -> None:
        """Binary form: magic, header length, JSON header, little-endian complex64 payload."""
        header = json.dumps({"grid": self.grid.to_dict(), "kernel": self.kernel.describe(),
                             "seed": self.seed, "replica": self.replica}, sort_keys=True).encode()
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(self.increments, dtype="<c8").tobytes())

    @classmethod
    def load(cls, fh) -> "NoiseSlab":
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("not a noise slab file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(hlen).decode())
        grid = GridSpec(**meta["grid"])
        kernel = make_kernel(meta["kernel"])
        data = np.frombuffer(fh.read(), dtype="<c8")
        if data.size != grid.nt * grid.size:
            raise ValueError("payload size does not match the header grid")
        return cls(data.reshape(grid.nt, grid.size).astype(np.complex128), meta["seed"], grid,
                   kernel, meta.get("replica", 0))

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.dump(buf)
        return buf.getvalue()


def synthesize(grid: GridSpec, kernel: SpectralKernel, seed: int, replica: int = 0) -> NoiseSlab:
    """One replica of the noise increments; slices are independent, stream keyed by (seed, replica)."""
    amp = spectral_amplitude(grid, kernel) * math.sqrt(grid.dt)
    z = hermitian_normals(_generator(seed, replica), grid.shape, grid.nt)
    c = (z * amp[None]).reshape(grid.nt, grid.size)
    return NoiseSlab(c, int(seed), grid, kernel, int(replica))


def synthesize_batch(grid: GridSpec, kernel: SpectralKernel, seed: int, replicas) -> np.ndarray:
    """Normalised Hermitian normals for several replicas, shape (R, nt) + grid.shape.

    Multiplying by the amplitude gives the same coefficients as :func:`synthesize`
    for each replica index.
    """
    return np.stack([hermitian_normals(_generator(seed, r), grid.shape, grid.nt) for r in replicas])
