"""Weighted nonlocal Laplacian on grid functions and consistency diagnostics.

    Lap_eps u(x) = (1/eps^2) int_Omega eta_eps(|x-y|) (u(y) - u(x)) rho(y) dy

discretized by the midpoint rule on the cells of the grid carrying u.  The
quadrature sum is a discrete convolution, evaluated with FFTs; zero padding
outside the grid matches the integral being taken over Omega only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .geometry import BoxDomain, Density, PointCloud
from .kernels import Kernel, SigmaEta, eval_rescaled
from .presets import AnalyticPreset


class ResolutionError(ValueError):
    """Kernel support not resolved by enough grid cells."""


class DegenerateInputError(ValueError):
    """Operation undefined for (near-)constant input."""


@dataclass
class GridFunction:
    """Cell-centered values on a uniform tensor grid over a box."""

    domain: BoxDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.domain.d:
            raise ValueError("values rank must match the domain dimension")
        if any(s < 3 for s in self.values.shape):
            raise ValueError("need at least 3 cells per axis")

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return self.domain.side_lengths / np.asarray(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_centers(self, k: int) -> np.ndarray:
        return self.domain.lo[k] + (np.arange(self.shape[k]) + 0.5) * self.spacing[k]

    def centers(self) -> np.ndarray:
        """(num_cells, d) array of cell centers in C order."""
        mesh = np.meshgrid(*[self.axis_centers(k) for k in range(self.domain.d)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def boundary_distance(self) -> np.ndarray:
        """Distance of each cell center to the box boundary, same shape as values."""
        dists = None
        for k in range(self.domain.d):
            c = self.axis_centers(k)
            dk = np.minimum(c - self.domain.lo[k], self.domain.hi[k] - c)
            shape = [1] * self.domain.d
            shape[k] = -1
            dk = dk.reshape(shape)
            dists = dk if dists is None else np.minimum(dists, dk)
        return np.broadcast_to(dists, self.shape).copy()

    def to_csv(self, path) -> None:
        idx = np.indices(self.shape).reshape(self.domain.d, -1).T
        rows = np.column_stack([idx, self.values.ravel()])
        header = ",".join(f"i{k}" for k in range(self.domain.d)) + ",value"
        fmt = ["%d"] * self.domain.d + ["%.17g"]
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt=fmt)

    def to_binary(self, path) -> None:
        self.values.astype("<f8").tofile(path)

    @classmethod
    def from_binary(cls, path, domain: BoxDomain, shape) -> "GridFunction":
        flat = np.fromfile(path, dtype="<f8")
        return cls(domain, flat.reshape(shape))

    @classmethod
    def from_callable(cls, domain: BoxDomain, shape, func) -> "GridFunction":
        shape = tuple(shape)
        gf = cls(domain, np.zeros(shape))
        gf.values = np.asarray(func(gf.centers())).reshape(shape)
        return gf


@dataclass
class NonlocalConfig:
    kernel: Kernel
    eps: float
    density: Density
    sigma: SigmaEta

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.eps >= float(np.min(self.density.domain.side_lengths)) / 2:
            raise ValueError("eps must be below half the smallest side length")


def _kernel_stamp(u: GridFunction, cfg: NonlocalConfig) -> np.ndarray:
    """eta_eps at lattice offsets times the cell volume; odd-sized, center = offset 0."""
    h = u.spacing
    support = cfg.kernel.support_radius * cfg.eps
    half = np.ceil(support / h).astype(int)
    if np.any(support / h < 4):
        raise ResolutionError(
            f"kernel support {support:.4g} resolved by fewer than 4 cells (h={h})")
    axes = [np.arange(-m, m + 1) * hk for m, hk in zip(half, h)]
    mesh = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum(m**2 for m in mesh))
    d = u.domain.d
    return np.asarray(eval_rescaled(cfg.kernel, cfg.eps, dist, d)) * u.cell_volume


def _rho_grid(u: GridFunction, cfg: NonlocalConfig) -> np.ndarray:
    return cfg.density(u.centers()).reshape(u.shape)


def nonlocal_laplacian(u: GridFunction, cfg: NonlocalConfig) -> GridFunction:
    """Midpoint-rule weighted nonlocal Laplacian of u, integrating over Omega only."""
    K = _kernel_stamp(u, cfg)
    rho = _rho_grid(u, cfg)
    conv_urho = fftconvolve(u.values * rho, K, mode="same")
    conv_rho = fftconvolve(rho, K, mode="same")
    vals = (conv_urho - u.values * conv_rho) / cfg.eps**2
    return GridFunction(u.domain, vals)


def nonlocal_poisson_residual(u: GridFunction, h_rhs: GridFunction, cfg: NonlocalConfig) -> GridFunction:
    """r = -Lap_eps u - h for the nonlocal Poisson equation -Lap_eps u = h."""
    if u.shape != h_rhs.shape:
        raise ValueError("shape mismatch between u and the right-hand side")
    lap = nonlocal_laplacian(u, cfg)
    return GridFunction(u.domain, -lap.values - h_rhs.values)


def pair_energy(u: GridFunction, cfg: NonlocalConfig, p: float) -> float:
    """int int eta_eps(|x-y|) |u(y)-u(x)|^p dy dx by the midpoint rule.

    Loops over lattice offsets (one shifted-array pass each), which keeps the
    cost near (support cells) * (grid cells).
    """
    h = u.spacing
    support = cfg.kernel.support_radius * cfg.eps
    half = np.ceil(support / h).astype(int)
    d = u.domain.d
    vals = u.values
    cell2 = u.cell_volume**2
    total = 0.0
    for off in itertools.product(*[range(-m, m + 1) for m in half]):
        if off <= (0,) * d:  # use symmetry; z and -z contribute equally
            continue
        dist = float(np.sqrt(sum((o * hk) ** 2 for o, hk in zip(off, h))))
        w = float(eval_rescaled(cfg.kernel, cfg.eps, dist, d))
        if w == 0.0:
            continue
        src = tuple(slice(max(0, -o), min(s, s - o)) for o, s in zip(off, vals.shape))
        dst = tuple(slice(max(0, o), min(s, s + o)) for o, s in zip(off, vals.shape))
        diff = vals[dst] - vals[src]
        total += 2.0 * w * float(np.sum(np.abs(diff) ** p)) * cell2
    return total


def nonlocal_poincare_ratio(u: GridFunction, cfg: NonlocalConfig, p: float) -> float:
    """int |u - mean(u)|^p dx over eps^{-p} int int eta_eps |u(y)-u(x)|^p dy dx."""
    if p < 1:
        raise ValueError("p must be >= 1")
    den = pair_energy(u, cfg, p) / cfg.eps**p
    if den <= 0:
        raise DegenerateInputError("nonlocal energy vanishes (constant input)")
    mean = float(np.mean(u.values))  # uniform cells: plain mean is the volume average
    num = float(np.sum(np.abs(u.values - mean) ** p)) * u.cell_volume
    return num / den


def consistency_error(preset: AnalyticPreset, cfg: NonlocalConfig, shape,
                      interior_margin: float) -> tuple:
    """(sup_interior, sup_global) of |Lap_eps phi - Lap_rho phi| on the grid."""
    if not preset.neumann:
        raise ValueError("preset must certify the homogeneous Neumann property")
    if interior_margin < 2 * cfg.eps:
        raise ValueError("interior margin must be at least 2*eps")
    u = GridFunction.from_callable(preset.domain, shape, preset.value)
    approx = nonlocal_laplacian(u, cfg).values
    ref = preset.weighted_laplacian(u.centers(), cfg.density, cfg.sigma.value).reshape(u.shape)
    err = np.abs(approx - ref)
    interior = u.boundary_distance() >= interior_margin
    if not np.any(interior):
        raise ValueError("interior margin leaves no grid points")
    return float(err[interior].max()), float(err.max())


def graph_consistency_error(cloud: PointCloud, preset: AnalyticPreset, density: Density,
                            kernel: Kernel, eps: float, sigma: SigmaEta,
                            interior_margin: float) -> tuple:
    """(sup_interior, sup_global) of |Lap_graph phi(x_i) - Lap_rho phi(x_i)| over samples."""
    from .graph_ops import laplacian_at_points

    if not preset.neumann:
        raise ValueError("preset must certify the homogeneous Neumann property")
    pts = cloud.positions
    values = preset.value(pts)
    approx = laplacian_at_points(cloud, kernel, eps, values)
    ref = preset.weighted_laplacian(pts, density, sigma.value)
    err = np.abs(approx - ref)
    bd = np.minimum(pts - cloud.domain.lo, cloud.domain.hi - pts).min(axis=1)
    interior = bd >= interior_margin
    sup_interior = float(err[interior].max()) if np.any(interior) else float("nan")
    return sup_interior, float(err.max())
