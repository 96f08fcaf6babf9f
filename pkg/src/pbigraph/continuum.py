"""Flux-form weighted Laplacian with Neumann ghost cells and the grid p-biharmonic solve.

    Lap_rho u = (sigma / (2 rho)) div(rho^2 grad u)

on a cell-centered grid, with face densities the arithmetic mean of adjacent
cells and zero flux through boundary faces.  The flux form makes the operator
exactly self-adjoint in the rho-weighted inner product <u, v> = sum u v rho h^d,
mirroring the exact self-adjointness of the graph Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BoxDomain, Density
from .graph_ops import _sign_power
from .nonlocal_ops import GridFunction
from .presets import AnalyticPreset
from .solver import SolveConfig, SolveReport, minimize


@dataclass
class WeightedFDOperator:
    domain: BoxDomain
    shape: tuple
    rho_cells: np.ndarray = field(repr=False)
    rho_faces: list = field(repr=False)  # per axis, shape with +1 along that axis
    sigma: float = 1.0

    @property
    def spacing(self) -> np.ndarray:
        return self.domain.side_lengths / np.asarray(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the rho-inner product, flattened."""
        return (self.rho_cells * self.cell_volume).ravel()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Flux-form stencil on flat or shaped input; returns the same layout."""
        flat = u.ndim == 1
        v = u.reshape(self.shape)
        h = self.spacing
        out = np.zeros_like(v)
        d = len(self.shape)
        for k in range(d):
            rf = self.rho_faces[k]
            dv = np.diff(v, axis=k)  # u_{i+1} - u_i at interior faces
            inner = tuple(slice(1, -1) if m == k else slice(None) for m in range(d))
            flux = np.zeros_like(rf)
            flux[inner] = rf[inner] ** 2 * dv  # boundary faces stay at zero flux
            out += np.diff(flux, axis=k) / h[k] ** 2
        out *= self.sigma / (2.0 * self.rho_cells)
        return out.ravel() if flat else out


def build_fd_operator(domain: BoxDomain, shape, density: Density, sigma: float) -> WeightedFDOperator:
    shape = tuple(shape)
    if any(s < 3 for s in shape):
        raise ValueError("need at least 3 cells per axis")
    probe = GridFunction(domain, np.zeros(shape))
    rho_cells = density(probe.centers()).reshape(shape)
    rho_faces = []
    for k in range(len(shape)):
        pad_lo = tuple(slice(0, 1) if m == k else slice(None) for m in range(len(shape)))
        pad_hi = tuple(slice(-1, None) if m == k else slice(None) for m in range(len(shape)))
        mid = 0.5 * (np.delete(rho_cells, 0, axis=k) + np.delete(rho_cells, -1, axis=k))
        rho_faces.append(np.concatenate([rho_cells[pad_lo], mid, rho_cells[pad_hi]], axis=k))
    return WeightedFDOperator(domain, shape, rho_cells, rho_faces, sigma)


def weighted_laplacian_fd(u: GridFunction, op: WeightedFDOperator) -> GridFunction:
    if u.shape != op.shape:
        raise ValueError("grid shape mismatch")
    return GridFunction(u.domain, op.apply(u.values))


@dataclass
class ManufacturedProblem:
    u_star: AnalyticPreset
    f: GridFunction
    p: float
    lam: float
    density: Density
    closed_form_factor: float | None = None  # f = factor * u_star when available

    def f_at(self, pts: np.ndarray) -> np.ndarray:
        """Forcing sampled at arbitrary points; needs the closed form."""
        if self.closed_form_factor is None:
            raise ValueError("no closed form; sample from the grid instead")
        return self.closed_form_factor * self.u_star.value(pts)


def _restrict(fine: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean restriction of cell-centered data by an integer factor."""
    shape = fine.shape
    new = []
    for s in shape:
        assert s % factor == 0
        new.extend([s // factor, factor])
    return fine.reshape(new).mean(axis=tuple(range(1, 2 * len(shape), 2)))


def manufactured_forcing(u_star: AnalyticPreset, p: float, lam: float,
                         op: WeightedFDOperator, density: Density,
                         fine_factor: int = 4) -> ManufacturedProblem:
    """f = u* + (1/lam) Lap_rho(|Lap_rho u*|^{p-2} Lap_rho u*), so u* solves the problem.

    Closed form for p = 2, uniform density, cosine-product u*; otherwise the
    outer operator is evaluated on a fine_factor-times finer grid (with the
    closed-form inner Laplacian) and restricted by block means.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not u_star.neumann:
        raise ValueError("u_star must certify the Neumann property")
    domain, shape, sigma = op.domain, op.shape, op.sigma
    if p == 2 and density.kind == "uniform":
        coef = sum((fk * np.pi / Lk) ** 2
                   for fk, Lk in zip(u_star.freqs, domain.side_lengths))
        lap_factor = -sigma * coef / (2.0 * domain.volume)  # Lap_rho u* = lap_factor * u*
        factor = 1.0 + lap_factor**2 / lam
        f = GridFunction.from_callable(domain, shape, lambda pts: factor * u_star.value(pts))
        return ManufacturedProblem(u_star, f, p, lam, density, factor)
    fine_shape = tuple(fine_factor * s for s in shape)
    fine_op = build_fd_operator(domain, fine_shape, density, sigma)
    fine_grid = GridFunction(domain, np.zeros(fine_shape))
    pts = fine_grid.centers()
    inner = u_star.weighted_laplacian(pts, density, sigma).reshape(fine_shape)
    outer = fine_op.apply(_sign_power(inner, p))
    f_vals = u_star.value(pts).reshape(fine_shape) + outer / lam
    return ManufacturedProblem(u_star, GridFunction(domain, _restrict(f_vals, fine_factor)),
                               p, lam, density, None)


def continuum_p_biharmonic_solve(f: GridFunction, p: float, lam: float,
                                 op: WeightedFDOperator, cfg: SolveConfig | None = None):
    """Minimize (1/p)<|Lap_rho u|^p,1>_rho + (lam/2)<|u-f|^2,1>_rho; returns (GridFunction, report)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if f.shape != op.shape:
        raise ValueError("grid shape mismatch")
    if cfg is None:
        cfg = SolveConfig(p=p, lam=lam)
    else:
        cfg = SolveConfig(p=p, lam=lam, tol=cfg.tol, max_iter=cfg.max_iter,
                          method=cfg.method, tau=cfg.tau,
                          continuation_steps=cfg.continuation_steps,
                          keep_energy_trace=cfg.keep_energy_trace)
    u_flat, report = minimize(op.apply, f.values.ravel(), cfg, op.weights, probe=False)
    return GridFunction(f.domain, u_flat.reshape(op.shape)), report


def lp_norm(u: GridFunction, op: WeightedFDOperator, p: float = 2.0) -> float:
    """rho-weighted L^p norm of a grid function."""
    return float(np.sum(op.weights * np.abs(u.values.ravel()) ** p) ** (1.0 / p))
