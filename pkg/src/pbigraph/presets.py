"""Analytic test functions with certified homogeneous Neumann boundary data.

Cosine products cos(k_0 pi t_0) * ... * cos(k_{d-1} pi t_{d-1}), with t the
box-normalized coordinate, have vanishing normal derivative on every face of
the box for integer frequencies, and carry closed forms for the gradient, the
Laplacian, and the density-weighted Laplacian

    Lap_rho phi = (sigma / (2 rho)) div(rho^2 grad phi)
                = sigma * (grad rho . grad phi + (rho / 2) Lap phi),

the second line being the product-rule expansion used in the code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoxDomain, Density


@dataclass(frozen=True)
class AnalyticPreset:
    """Closed-form function on a box; neumann=True certifies d(phi)/dn = 0."""

    name: str
    domain: BoxDomain
    freqs: tuple
    neumann: bool = True

    def _t(self, pts: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(pts) - self.domain.lo) / self.domain.side_lengths

    def value(self, pts: np.ndarray) -> np.ndarray:
        t = self._t(pts)
        out = np.ones(t.shape[0])
        for k, fk in enumerate(self.freqs):
            out *= np.cos(fk * np.pi * t[:, k])
        return out

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        t = self._t(pts)
        cos = [np.cos(fk * np.pi * t[:, k]) for k, fk in enumerate(self.freqs)]
        sin = [np.sin(fk * np.pi * t[:, k]) for k, fk in enumerate(self.freqs)]
        g = np.empty_like(t)
        for k, fk in enumerate(self.freqs):
            term = -fk * np.pi / self.domain.side_lengths[k] * sin[k]
            for m in range(len(self.freqs)):
                if m != k:
                    term = term * cos[m]
            g[:, k] = term
        return g

    def laplacian(self, pts: np.ndarray) -> np.ndarray:
        coef = sum((fk * np.pi / Lk) ** 2
                   for fk, Lk in zip(self.freqs, self.domain.side_lengths))
        return -coef * self.value(pts)

    def weighted_laplacian(self, pts: np.ndarray, density: Density, sigma: float) -> np.ndarray:
        """Lap_rho phi = (sigma/(2 rho)) div(rho^2 grad phi), via the product rule."""
        if not density.has_closed_form:
            raise ValueError("density without closed-form gradient cannot certify the reference")
        rho = density(pts)
        grad_rho = density.gradient(pts)
        grad_phi = self.gradient(pts)
        dot = np.einsum("ij,ij->i", grad_rho, grad_phi)
        return sigma * (dot + 0.5 * rho * self.laplacian(pts))


def cosine_product(domain: BoxDomain, freqs) -> AnalyticPreset:
    freqs = tuple(int(f) for f in freqs)
    if len(freqs) != domain.d or any(f < 0 for f in freqs):
        raise ValueError("need one nonnegative integer frequency per axis")
    name = "cos_" + "x".join(map(str, freqs))
    return AnalyticPreset(name, domain, freqs)


def by_name(name: str, domain: BoxDomain) -> AnalyticPreset:
    """Preset lookup for config files, e.g. "cos_1x1"."""
    if not name.startswith("cos_"):
        raise ValueError(f"unknown preset {name!r}")
    freqs = tuple(int(p) for p in name[4:].split("x"))
    return cosine_product(domain, freqs)
