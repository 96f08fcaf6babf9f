"""Radial weight kernels, their epsilon-rescalings, and the second-moment constant.

sigma = int_{R^d} eta(|z|) z_1^2 dz, computed in closed form where available and
by adaptive radial quadrature otherwise, using
    int eta(|z|) z_1^2 dz = (S_{d-1}/d) * int_0^R eta(r) r^{d+1} dr,
with S_{d-1} the surface area of the unit sphere in R^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class Kernel:
    """Nonincreasing radial profile with compact support [0, R], scaled by `scale`."""

    kind: str
    support_radius: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.support_radius <= 0 or self.scale <= 0:
            raise ValueError("support radius and scale must be positive")
        if self.kind not in ("indicator", "truncated_linear", "smooth_bump"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        R = self.support_radius
        if self.kind == "indicator":
            vals = (s < R).astype(float)
        elif self.kind == "truncated_linear":
            vals = np.maximum(R - s, 0.0)
        else:  # smooth_bump
            t2 = np.minimum((s / R) ** 2, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                vals = np.where(t2 < 1.0, np.exp(1.0 - 1.0 / (1.0 - t2)), 0.0)
        return self.scale * vals

    @classmethod
    def indicator(cls, R: float = 1.0, scale: float = 1.0) -> "Kernel":
        return cls("indicator", R, scale)

    @classmethod
    def truncated_linear(cls, R: float = 2.0, scale: float = 1.0) -> "Kernel":
        """With R=2 this satisfies eta(1) >= 1 and eta(2) = 0."""
        return cls("truncated_linear", R, scale)

    @classmethod
    def smooth_bump(cls, R: float = 1.0, scale: float = 1.0) -> "Kernel":
        return cls("smooth_bump", R, scale)

    @classmethod
    def by_name(cls, name: str, radius: float = 1.0, scale: float = 1.0) -> "Kernel":
        name = name.replace("-", "_")
        return cls(name, radius, scale)


def eval_rescaled(kernel: Kernel, eps: float, s, d: int):
    """eta_eps(s) = eps^{-d} * eta(s / eps); zero for s >= R*eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return kernel(np.asarray(s, dtype=float) / eps) / eps**d


@dataclass(frozen=True)
class SigmaEta:
    value: float
    d: int
    method: str  # "closed-form" | "quadrature"

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("sigma must be positive")


def sigma_eta(kernel: Kernel, d: int, force_quadrature: bool = False) -> SigmaEta:
    """Second moment int eta(|z|) z_1^2 dz."""
    if d < 1:
        raise ValueError("d must be >= 1")
    R = kernel.support_radius
    c = sphere_area(d) / d
    if not force_quadrature:
        if kernel.kind == "indicator":
            return SigmaEta(kernel.scale * c * R ** (d + 2) / (d + 2), d, "closed-form")
        if kernel.kind == "truncated_linear":
            val = kernel.scale * c * R ** (d + 3) / ((d + 2) * (d + 3))
            return SigmaEta(val, d, "closed-form")
    val, err = quad(lambda r: float(kernel(r)) * r ** (d + 1), 0.0, R, epsabs=0.0, epsrel=1e-12, limit=200)
    return SigmaEta(c * val, d, "quadrature")


def second_moment_full(kernel: Kernel, d: int) -> float:
    """int eta(|z|) |z|^2 dz, by quadrature; equals d * sigma_eta (isotropy)."""
    R = kernel.support_radius
    val, _ = quad(lambda r: float(kernel(r)) * r ** (d + 1), 0.0, R, epsabs=0.0, epsrel=1e-12, limit=200)
    return sphere_area(d) * val
