"""Approximate transportation maps and discrete-to-continuum error metrics.

The exact semi-discrete optimal transport map is replaced by the Voronoi
(nearest sample point) assignment of grid cells; the transport-aware metric is
therefore reported as a plug-in upper bound, never as the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Density, PointCloud
from .nonlocal_ops import GridFunction


@dataclass(frozen=True)
class DeltaN:
    """Transport-rate scale (ln n)^{1/d} / n^{1/d}."""

    n: int
    d: int

    @property
    def value(self) -> float:
        if self.n < 2:
            raise ValueError("delta_n needs n >= 2")
        return float((np.log(self.n) / self.n) ** (1.0 / self.d))


def delta_n(n: int, d: int) -> float:
    return DeltaN(n, d).value


@dataclass
class VoronoiMap:
    cloud: PointCloud
    grid: GridFunction = field(repr=False)  # metadata carrier (values unused)
    assignment: np.ndarray = field(repr=False)  # flat cell index -> point id

    def pullback(self, vertex_values: np.ndarray) -> np.ndarray:
        """Vertex function composed with the assignment, shaped like the grid."""
        return np.asarray(vertex_values)[self.assignment].reshape(self.grid.shape)

    def displacements(self) -> np.ndarray:
        centers = self.grid.centers()
        return np.linalg.norm(centers - self.cloud.positions[self.assignment], axis=1)

    def sup_displacement(self) -> float:
        return float(self.displacements().max())


def voronoi_map(cloud: PointCloud, grid: GridFunction) -> VoronoiMap:
    """Exact nearest-point assignment of cell centers, ties broken by lowest id."""
    centers = grid.centers()
    tree = cKDTree(cloud.positions)
    dist, idx = tree.query(centers, k=1)
    if cloud.n > 1:
        # enforce the lowest-id tie-break the tree does not guarantee
        kk = min(4, cloud.n)
        dists, idxs = tree.query(centers, k=kk)
        tied = np.abs(dists - dists[:, :1]) == 0.0
        masked = np.where(tied, idxs, cloud.n)
        idx = masked.min(axis=1)
    return VoronoiMap(cloud, grid, idx.astype(np.int64))


def lp_error(vertex_values: np.ndarray, vmap: VoronoiMap, u_ref: GridFunction,
             p: float, density: Density) -> float:
    """rho-weighted L^p distance between the pulled-back vertex function and u_ref."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if u_ref.shape != vmap.grid.shape:
        raise ValueError("reference grid shape mismatch")
    pulled = vmap.pullback(vertex_values)
    rho = density(u_ref.centers()).reshape(u_ref.shape)
    integrand = np.abs(pulled - u_ref.values) ** p * rho
    return float((np.sum(integrand) * u_ref.cell_volume) ** (1.0 / p))


def tlp_distance(vertex_values: np.ndarray, vmap: VoronoiMap, u_ref: GridFunction,
                 p: float, density: Density) -> float:
    """Plug-in transport-metric upper bound: adds |x - T(x)|^p to the value discrepancy."""
    if p < 1:
        raise ValueError("p must be >= 1")
    pulled = vmap.pullback(vertex_values)
    rho = density(u_ref.centers()).reshape(u_ref.shape)
    disp = vmap.displacements().reshape(u_ref.shape)
    integrand = (disp**p + np.abs(pulled - u_ref.values) ** p) * rho
    return float((np.sum(integrand) * u_ref.cell_volume) ** (1.0 / p))
