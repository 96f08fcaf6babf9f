"""Box domains, sampling densities, point clouds, and fixed-radius neighbor search.

Distances are strict: a pair (i, j) is neighboring iff dist(x_i, x_j) < radius.
A point is never its own neighbor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MAX_CONSECUTIVE_REJECTS = 10_000


class InvalidDensityError(ValueError):
    """Rejection sampling exceeded the consecutive-reject cap."""


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if not np.all(hi > lo):
            raise ValueError("hi must exceed lo componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def side_lengths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.side_lengths))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    @classmethod
    def unit(cls, d: int = 2) -> "BoxDomain":
        return cls(np.zeros(d), np.ones(d))


@dataclass(frozen=True)
class Density:
    """Probability density on a box with positive lower/upper bounds.

    kinds: "uniform", "cosine" (1 + a*cos(2*pi*(x_0-lo_0)/L_0), normalized),
    "tabulated" (cell-centered values on a uniform grid, nearest-cell lookup).
    """

    domain: BoxDomain
    kind: str
    params: tuple = ()
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "cosine", "tabulated"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "cosine":
            (a,) = self.params
            if not 0 <= abs(a) < 1:
                raise ValueError("cosine perturbation amplitude must be in (-1, 1)")
        if self.kind == "tabulated":
            if self.table is None or np.any(self.table <= 0):
                raise ValueError("tabulated density needs strictly positive values")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vol = self.domain.volume
        if self.kind == "uniform":
            return np.full(pts.shape[0], 1.0 / vol)
        if self.kind == "cosine":
            (a,) = self.params
            t = (pts[:, 0] - self.domain.lo[0]) / self.domain.side_lengths[0]
            # cos integrates to zero over the full period, so 1/vol normalizes.
            return (1.0 + a * np.cos(2 * np.pi * t)) / vol
        # tabulated: nearest cell center
        tab = self.table
        shape = np.asarray(tab.shape)
        rel = (pts - self.domain.lo) / self.domain.side_lengths
        idx = np.clip((rel * shape).astype(int), 0, shape - 1)
        return tab[tuple(idx.T)]

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Closed-form gradient; only for uniform and cosine kinds."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "uniform":
            return np.zeros_like(pts)
        if self.kind == "cosine":
            (a,) = self.params
            L0 = self.domain.side_lengths[0]
            t = (pts[:, 0] - self.domain.lo[0]) / L0
            g = np.zeros_like(pts)
            g[:, 0] = -a * (2 * np.pi / L0) * np.sin(2 * np.pi * t) / self.domain.volume
            return g
        raise ValueError("tabulated density has no closed-form gradient")

    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("uniform", "cosine")

    @property
    def rho_min(self) -> float:
        if self.kind == "uniform":
            return 1.0 / self.domain.volume
        if self.kind == "cosine":
            return (1.0 - abs(self.params[0])) / self.domain.volume
        return float(self.table.min())

    @property
    def rho_max(self) -> float:
        if self.kind == "uniform":
            return 1.0 / self.domain.volume
        if self.kind == "cosine":
            return (1.0 + abs(self.params[0])) / self.domain.volume
        return float(self.table.max())

    def check_normalized(self, cells_per_axis: int = 256, tol: float = 1e-6) -> bool:
        """Midpoint-rule check that the density integrates to one."""
        dom = self.domain
        axes = [
            dom.lo[k] + (np.arange(cells_per_axis) + 0.5) * dom.side_lengths[k] / cells_per_axis
            for k in range(dom.d)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        h = np.prod(dom.side_lengths / cells_per_axis)
        return abs(float(np.sum(self(pts)) * h) - 1.0) <= tol

    @classmethod
    def uniform(cls, domain: BoxDomain) -> "Density":
        return cls(domain, "uniform")

    @classmethod
    def cosine(cls, domain: BoxDomain, amplitude: float = 0.5) -> "Density":
        return cls(domain, "cosine", (amplitude,))

    @classmethod
    def tabulated(cls, domain: BoxDomain, table: np.ndarray) -> "Density":
        return cls(domain, "tabulated", (), np.asarray(table, dtype=float))


@dataclass(frozen=True)
class PointCloud:
    positions: np.ndarray
    domain: BoxDomain
    seed: int

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[0] < 1 or pos.shape[1] != self.domain.d:
            raise ValueError("positions must be a nonempty (n, d) array")
        if not np.all(self.domain.contains(pos)):
            raise ValueError("every position must lie in the closed domain")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def to_csv(self, path) -> None:
        header = ",".join(f"x{k}" for k in range(self.d))
        np.savetxt(path, self.positions, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, domain: BoxDomain, seed: int = -1) -> "PointCloud":
        pos = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(pos, domain, seed)

    def to_binary(self, path) -> None:
        # little-endian float64, row-major
        self.positions.astype("<f8").tofile(path)

    @classmethod
    def from_binary(cls, path, domain: BoxDomain, seed: int = -1) -> "PointCloud":
        flat = np.fromfile(path, dtype="<f8")
        return cls(flat.reshape(-1, domain.d), domain, seed)


def sample_point_cloud(domain: BoxDomain, density: Density, n: int, seed: int) -> PointCloud:
    """Draw n i.i.d. samples from density by rejection against the rho_max envelope.

    Deterministic for a fixed seed. Raises InvalidDensityError if the sampler
    sees MAX_CONSECUTIVE_REJECTS rejections in a row.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if density.rho_min <= 0:
        raise InvalidDensityError("density lower bound must be positive")
    rng = np.random.default_rng(seed)
    out = np.empty((n, domain.d))
    filled = 0
    consecutive_rejects = 0
    envelope = density.rho_max
    while filled < n:
        m = min(4 * (n - filled) + 64, 1 << 20)
        cand = domain.lo + rng.random((m, domain.d)) * domain.side_lengths
        accept = rng.random(m) * envelope < density(cand)
        if not np.any(accept):
            consecutive_rejects += m
            if consecutive_rejects >= MAX_CONSECUTIVE_REJECTS:
                raise InvalidDensityError("rejection sampling failed; density inconsistent with bounds")
            continue
        consecutive_rejects = 0
        got = cand[accept][: n - filled]
        out[filled : filled + got.shape[0]] = got
        filled += got.shape[0]
    return PointCloud(out, domain, seed)


@dataclass
class NeighborIndex:
    """Uniform cell list with cell_size = radius; queries scan 3^d adjacent cells."""

    cloud: PointCloud
    radius: float
    cell_size: float
    buckets: dict = field(repr=False)
    cell_of_point: np.ndarray = field(repr=False)

    def _candidate_ids(self, cell: tuple) -> np.ndarray:
        cands = []
        for off in itertools.product((-1, 0, 1), repeat=self.cloud.d):
            ids = self.buckets.get(tuple(c + o for c, o in zip(cell, off)))
            if ids is not None:
                cands.append(ids)
        if not cands:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(cands)

    def query(self, x: np.ndarray) -> np.ndarray:
        """Ids of cloud points with dist(x, x_j) < radius, sorted, duplicate-free."""
        x = np.asarray(x, dtype=float)
        cell = tuple(int(np.floor((x[k] - self.cloud.domain.lo[k]) / self.cell_size)) for k in range(self.cloud.d))
        cand = self._candidate_ids(cell)
        if cand.size == 0:
            return cand
        diff = self.cloud.positions[cand] - x
        close = np.einsum("ij,ij->i", diff, diff) < self.radius**2
        return np.sort(cand[close])

    def neighbors(self, i: int) -> np.ndarray:
        """Neighbor ids of point i, excluding i itself."""
        ids = self.query(self.cloud.positions[i])
        return ids[ids != i]

    def bucket_blocks(self):
        """Yield (ids_a, ids_b) candidate blocks covering each unordered pair once.

        ids_a == ids_b marks an intra-bucket block (use the upper triangle).
        """
        d = self.cloud.d
        offsets = [off for off in itertools.product((-1, 0, 1), repeat=d) if off > (0,) * d]
        for cell, ids_a in self.buckets.items():
            yield ids_a, ids_a
            for off in offsets:
                ids_b = self.buckets.get(tuple(c + o for c, o in zip(cell, off)))
                if ids_b is not None:
                    yield ids_a, ids_b

    def pair_chunks(self, chunk: int = 512):
        """Yield (ii, jj, dist) chunks; i != j pairs with dist < radius, each once.

        Deterministic iteration order; distances use plain coordinate
        differences so results match a brute-force oracle bit-for-bit.
        """
        pos = self.cloud.positions
        r2 = self.radius**2
        for ids_a, ids_b in self.bucket_blocks():
            intra = ids_a is ids_b
            pb = pos[ids_b]
            for s in range(0, ids_a.size, chunk):
                sub = ids_a[s : s + chunk]
                diff = pos[sub][:, None, :] - pb[None, :, :]
                d2 = np.einsum("ijk,ijk->ij", diff, diff)
                mask = d2 < r2
                if intra:
                    # upper triangle of the full intra-bucket matrix
                    local_rows = np.arange(s, s + sub.size)[:, None]
                    mask &= local_rows < np.arange(ids_b.size)[None, :]
                rows, cols = np.nonzero(mask)
                if rows.size:
                    yield sub[rows], ids_b[cols], np.sqrt(d2[rows, cols])

    def pairs(self, chunk: int = 512):
        """All pairs (i, j) at once; see pair_chunks. Returns (ii, jj, dist)."""
        parts = list(self.pair_chunks(chunk))
        if not parts:
            e = np.empty(0)
            return e.astype(np.int64), e.astype(np.int64), e
        return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def build_neighbor_index(cloud: PointCloud, radius: float) -> NeighborIndex:
    if radius <= 0:
        raise ValueError("radius must be positive")
    cells = np.floor((cloud.positions - cloud.domain.lo) / radius).astype(np.int64)
    buckets: dict = {}
    # group point ids by cell coordinate
    order = np.lexsort(cells.T[::-1])
    sorted_cells = cells[order]
    change = np.any(np.diff(sorted_cells, axis=0) != 0, axis=1)
    starts = np.concatenate(([0], np.nonzero(change)[0] + 1, [cloud.n]))
    for a, b in zip(starts[:-1], starts[1:]):
        buckets[tuple(sorted_cells[a])] = order[a:b]
    return NeighborIndex(cloud, radius, radius, buckets, cells)
