"""Spatial covariance structures of the noise, described by their spectral measures.

A kernel is stored through the density rho of its spectral measure
mu(dxi) = rho(xi) dxi. Integrals of radial functions h(|xi|) against mu
reduce to one-dimensional integrals  int_0^inf h(r) m(r) dr  with the radial
mass density m(r) returned by :meth:`SpectralKernel.radial_mass`. For the
anisotropic fractional-product kernel the angular factor is a Dirichlet
integral, so the same reduction holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as G

from . import quad
from .records import BoundCheck


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^(d-1) (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / G(d / 2)


@dataclass(frozen=True)
class FracParams:
    """Equation parameters (beta, alpha, gamma, nu, lambda, d)."""

    beta: float
    alpha: float
    gamma: float = 0.0
    nu: float = 1.0
    lam: float = 1.0
    d: int = 1

    def __post_init__(self):
        # beta = 1 (the classical heat case) is admitted for comparisons against closed forms
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")

    @property
    def order(self) -> float:
        """alpha + gamma, the large-frequency order of the operator symbol."""
        return self.alpha + self.gamma

    @property
    def regime(self) -> str:
        if self.beta < 0.5:
            return "beta<1/2"
        if self.beta == 0.5:
            return "beta=1/2"
        return "beta>1/2"

    def symbol(self, r):
        """|xi|^alpha (1 + |xi|^2)^(gamma/2) at |xi| = r, without the factor nu t^beta."""
        r = np.asarray(r, dtype=float)
        return r**self.alpha * (1.0 + r * r) ** (0.5 * self.gamma)

    def replace(self, **kw) -> "FracParams":
        d = dict(beta=self.beta, alpha=self.alpha, gamma=self.gamma, nu=self.nu,
                 lam=self.lam, d=self.d)
        d.update(kw)
        return FracParams(**d)


# ---------------------------------------------------------------------------
# kernel catalogue


@dataclass(frozen=True)
class SpectralKernel:
    d: int = 1

    tag = "abstract"
    singular_at_origin = False
    isotropic = True

    def density(self, xi) -> np.ndarray:
        """rho(xi) for points ``xi`` of shape (..., d) (or (...,) when d = 1)."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            r = np.abs(xi)
        else:
            r = np.sqrt(np.sum(xi * xi, axis=-1))
        return self.radial_density(r)

    def radial_density(self, r) -> np.ndarray:
        raise NotImplementedError

    def radial_mass(self, r) -> np.ndarray:
        """m(r) with int h(|xi|) mu(dxi) = int_0^inf h(r) m(r) dr."""
        r = np.asarray(r, dtype=float)
        return sphere_area(self.d) * r ** (self.d - 1) * self.radial_density(r)

    def effective_delta(self) -> Optional[float]:
        """Exponent e with m(r) ~ r^(d - 1 - e) at infinity, if the kernel has one."""
        return None

    def params_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def describe(self) -> dict:
        return {"type": self.tag, **self.params_dict()}


@dataclass(frozen=True)
class RieszDelta(SpectralKernel):
    delta: float = 0.5

    tag = "riesz"
    singular_at_origin = True

    def __post_init__(self):
        if not (0.0 < self.delta < self.d):
            raise ValueError(f"Riesz kernel needs 0 < delta < d, got delta={self.delta}, d={self.d}")

    def radial_density(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return r ** (-self.delta)

    def effective_delta(self):
        return self.delta


@dataclass(frozen=True)
class BesselTau(SpectralKernel):
    tau: float = 1.0

    tag = "bessel"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"Bessel kernel needs tau > 0, got {self.tau}")

    def radial_density(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r) ** (-0.5 * self.tau)

    def effective_delta(self):
        return self.tau


@dataclass(frozen=True)
class FractionalProduct(SpectralKernel):
    H: tuple = (0.75,)

    tag = "fractional-product"
    singular_at_origin = True
    isotropic = False

    def __post_init__(self):
        H = tuple(float(h) for h in self.H)
        object.__setattr__(self, "H", H)
        if len(H) != self.d:
            raise ValueError(f"need one Hurst index per dimension, got {len(H)} for d={self.d}")
        if not all(0.5 < h < 1.0 for h in H):
            raise ValueError(f"every H_i must lie in (1/2, 1), got {H}")

    @property
    def coefficient(self) -> float:
        return float(np.prod([h * (2 * h - 1) for h in self.H]))

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., None]
        H = np.asarray(self.H)
        with np.errstate(divide="ignore"):
            return self.coefficient * np.prod(np.abs(xi) ** (1.0 - 2.0 * H), axis=-1)

    def radial_density(self, r):
        if self.d != 1:
            raise ValueError("fractional-product kernel is anisotropic; use density(xi)")
        return self.density(np.asarray(r, dtype=float))

    def angular_factor(self) -> float:
        # int_{S^(d-1)} prod |w_i|^(a_i - 1) dsigma = 2 prod Gamma(a_i/2) / Gamma(sum a_i / 2)
        a = [2.0 - 2.0 * h for h in self.H]
        return 2.0 * float(np.prod([G(ai / 2) for ai in a])) / G(sum(a) / 2)

    def radial_mass(self, r):
        r = np.asarray(r, dtype=float)
        p = self.d - 1 + sum(1.0 - 2.0 * h for h in self.H)
        with np.errstate(divide="ignore"):
            return self.coefficient * self.angular_factor() * r**p

    def effective_delta(self):
        # m(r) ~ r^(d - 1 - sum(2H_i - 1))
        return sum(2.0 * h - 1.0 for h in self.H)


@dataclass(frozen=True)
class WhiteNoise(SpectralKernel):
    tag = "white"

    def __post_init__(self):
        if self.d != 1:
            raise ValueError("white noise in space is only admitted for d = 1")

    def radial_density(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def effective_delta(self):
        return 0.0


@dataclass(frozen=True)
class FiniteMeasure(SpectralKernel):
    """Smooth noise: Gaussian-shaped spectral density of the given total mass."""

    total_mass: float = 1.0

    tag = "finite"

    def __post_init__(self):
        if not self.total_mass > 0:
            raise ValueError(f"total mass must be > 0, got {self.total_mass}")

    def radial_density(self, r):
        r = np.asarray(r, dtype=float)
        return self.total_mass * (2 * math.pi) ** (-self.d / 2) * np.exp(-0.5 * r * r)


KERNEL_TYPES = {cls.tag: cls for cls in (RieszDelta, BesselTau, FractionalProduct, WhiteNoise, FiniteMeasure)}


def make_kernel(spec: dict) -> SpectralKernel:
    """Build a kernel from a mapping such as {"type": "riesz", "delta": 0.5, "d": 1}."""
    spec = dict(spec)
    try:
        cls = KERNEL_TYPES[spec.pop("type")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing kernel type in {spec!r}") from exc
    allowed = set(cls.__dataclass_fields__)
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown keys for kernel {cls.tag!r}: {sorted(unknown)}")
    if "H" in spec:
        spec["H"] = tuple(spec["H"])
    return cls(**spec)


# ---------------------------------------------------------------------------
# operations


def spectral_density(k: SpectralKernel, xi) -> float:
    """Density of mu at a single point xi (scalar for d = 1)."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi_arr.size != k.d:
        raise ValueError(f"xi must have {k.d} components")
    if k.singular_at_origin:
        if isinstance(k, FractionalProduct):
            if np.any(xi_arr == 0):
                raise ValueError("density is singular on the coordinate hyperplanes")
        elif np.all(xi_arr == 0):
            raise ValueError("density is singular at xi = 0")
    return float(k.density(xi_arr if k.d > 1 else xi_arr[0]))


def dalang_exponent(p: FracParams) -> float:
    """Integrability exponent for the Dalang-type condition, by beta regime."""
    if p.beta < 0.5:
        return p.order
    if p.beta == 0.5:
        return p.order / 2.0
    return p.order / (2.0 * p.beta)


def _closed_form_margin(k: SpectralKernel, exponent: float) -> Optional[float]:
    """Margin of  int (1+|xi|^2)^-exponent mu(dxi) < inf  when it has a closed form.

    Positive margin <=> finite. The margin is measured in the exponent balance
    2*exponent + delta_eff - d.
    """
    if isinstance(k, FiniteMeasure):
        return math.inf
    e = k.effective_delta()
    if e is None:
        return None
    return 2.0 * exponent + e - k.d


def closed_form_inequality(k: SpectralKernel, p: FracParams) -> tuple[str, float]:
    """The kernel's admissibility inequality written the way the examples state it.

    Returns (text, margin) with margin > 0 iff the condition holds.
    """
    rho = dalang_exponent(p)
    s = p.order
    lhs_op = {"beta<1/2": (2 * s, "2(alpha+gamma)"), "beta=1/2": (s, "(alpha+gamma)"),
              "beta>1/2": (s / p.beta, "(alpha+gamma)/beta")}[p.regime]
    if isinstance(k, RieszDelta):
        return f"{lhs_op[1]}+delta>d", lhs_op[0] + k.delta - k.d
    if isinstance(k, BesselTau):
        return f"{lhs_op[1]}+tau>d", lhs_op[0] + k.tau - k.d
    if isinstance(k, FractionalProduct):
        return f"sum(2H_i-1)>d-{lhs_op[1]}", k.effective_delta() - (k.d - lhs_op[0])
    if isinstance(k, WhiteNoise):
        return f"{lhs_op[1]}>1", 2 * rho - 1
    return "finite measure", math.inf


def integrate_against(k: SpectralKernel, h, **kw) -> quad.RadialResult:
    """int h(|xi|) mu(dxi) by dyadic radial quadrature with tail analysis."""
    return quad.radial(lambda r: h(r) * k.radial_mass(r), **kw)


def check_hypothesis(k: SpectralKernel, exponent: float, route: str = "auto",
                     quantity: str = "hypothesis-1") -> BoundCheck:
    """Decide finiteness of  int (1/(1+|xi|^2))^exponent mu(dxi).

    ``route``: "auto" (closed form when available, else quadrature),
    "closed-form" or "quadrature".
    """
    if not exponent > 0:
        raise ValueError(f"exponent must be > 0, got {exponent}")
    margin = _closed_form_margin(k, exponent)
    if route == "auto":
        route = "closed-form" if margin is not None else "quadrature"
    if route == "closed-form":
        if margin is None:
            raise ValueError(f"no closed form for kernel {k.tag!r}")
        # the fractional-product criterion has no quadrature needed; finite measures are trivially fine
        return BoundCheck(quantity=quantity, value=None, bound=None,
                          margin=None if math.isinf(margin) else margin,
                          verdict=margin > 0, route="closed-form",
                          detail={"kernel": k.describe(), "exponent": exponent})
    res = integrate_against(k, lambda r: (1.0 + r * r) ** (-exponent))
    detail = {"kernel": k.describe(), "exponent": exponent, "reason": res.reason,
              "tail_power": res.exponent_hi, "origin_power": res.exponent_lo}
    if res.converged is None:
        return BoundCheck(quantity=quantity, value=None, verdict=None, route="quadrature",
                          detail={**detail, "status": "undecidable numerically"})
    return BoundCheck(quantity=quantity, value=res.value if res.converged else math.inf,
                      verdict=bool(res.converged), route="quadrature",
                      margin=margin if margin is not None and not math.isinf(margin) else None,
                      detail=detail)


def check_tempered(k: SpectralKernel, max_m: int = 10) -> BoundCheck:
    """Temperedness: smallest integer m <= max_m with a finite integral, plus near-origin mass."""
    found = None
    last = None
    for m in range(1, max_m + 1):
        last = check_hypothesis(k, float(m), route="quadrature", quantity="tempered")
        if last.verdict:
            found = m
            break
    mass = near_origin_mass(k)
    ok = found is not None and mass > 0
    return BoundCheck(quantity="tempered", value=last.value if found else None, bound=None,
                      verdict=ok if (found is not None or last.verdict is False) else None,
                      route="quadrature",
                      detail={"kernel": k.describe(), "m": found, "near_origin_mass": mass})


def near_origin_mass(k: SpectralKernel, radius: float = 1.0) -> float:
    """mu({|xi| < radius})."""
    res = quad.radial(lambda r: np.where(r < radius, k.radial_mass(r), 0.0), k_hi=0,
                      scale=radius / 2, tail_tol=1e-15)
    return res.value


def riesz_equivalent_delta(k: SpectralKernel) -> Optional[float]:
    """delta with mu(dxi) comparable to |xi|^-delta dxi, when the kernel has one."""
    if isinstance(k, RieszDelta):
        return k.delta
    if isinstance(k, BesselTau):
        return k.tau if k.tau < k.d else None
    if isinstance(k, WhiteNoise):
        return 0.0
    return None


# ---------------------------------------------------------------------------
# Hypothesis-2 windows


def hypothesis2_floor(k: SpectralKernel) -> float:
    """Infimum of the exponents eta with int (1+|xi|^2)^-eta mu(dxi) < inf."""
    if isinstance(k, FiniteMeasure):
        return 0.0
    e = k.effective_delta()
    return max(0.0, (k.d - e) / 2.0)


@dataclass(frozen=True)
class HolderWindows:
    """Concrete exponents for the increment estimates under the midpoint convention."""

    rho_max: float          # dalang exponent: eta must stay below it
    eta_floor: float        # eta must stay above it for the integral to converge
    eta: float              # midpoint choice
    rho: float              # spatial increment exponent (midpoint of (0, rho_max - eta), capped at 1)
    time_exponent: float    # guaranteed temporal Holder exponent
    space_exponent: float   # guaranteed spatial Holder exponent, rho_max - eta
    space_sharp: float      # rho_max - eta_floor, the limit as eta decreases
    empty: bool = field(default=False)


def holder_windows(p: FracParams, k: SpectralKernel) -> HolderWindows:
    rmax = dalang_exponent(p)
    lo = hypothesis2_floor(k)
    empty = not lo < rmax
    eta = 0.5 * (lo + rmax)
    rho = min(0.5 * (rmax - eta), 1.0)
    if p.beta < 0.5:
        tx = min(p.beta, 0.5 - p.beta)
    elif p.beta == 0.5:
        tx = 0.25
    elif p.beta < 1.0:
        tx = p.beta - 0.5
    else:
        # beta = 1 lies outside the three-case table; use the parabolic-scaling index
        # ((alpha+gamma) - (d-delta)) / (2(alpha+gamma)), which gives 1/4 for the heat case
        tx = max(rmax - lo, 0.0) / p.order
    return HolderWindows(rho_max=rmax, eta_floor=lo, eta=eta, rho=rho, time_exponent=tx,
                         space_exponent=min(rmax - eta, 1.0), space_sharp=min(rmax - lo, 1.0),
                         empty=empty)
