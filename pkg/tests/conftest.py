import json
from pathlib import Path

import numpy as np
import pytest

from pbigraph import BoxDomain, Density, PointCloud, sample_point_cloud

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def unit_domain():
    return BoxDomain.unit(2)


@pytest.fixture(scope="session")
def uniform_density(unit_domain):
    return Density.uniform(unit_domain)


@pytest.fixture(scope="session")
def pilot():
    """Committed thresholds produced by scripts/run_pilot.py."""
    with open(FIXTURES / "pilot.json") as fh:
        return json.load(fh)


def brute_force_pairs(positions: np.ndarray, radius: float, chunk: int = 2000):
    """O(n^2) oracle: unordered (i, j, dist) pairs with dist < radius."""
    n = positions.shape[0]
    out_i, out_j, out_d = [], [], []
    for s in range(0, n, chunk):
        block = positions[s : s + chunk]
        diff = block[:, None, :] - positions[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        rows = np.arange(s, s + block.shape[0])[:, None]
        mask = (d2 < radius**2) & (rows < np.arange(n)[None, :])
        r, c = np.nonzero(mask)
        out_i.append(rows.ravel()[r])
        out_j.append(c)
        out_d.append(np.sqrt(d2[r, c]))
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_d)


def random_cloud(n: int, seed: int, domain=None, density=None) -> PointCloud:
    domain = domain or BoxDomain.unit(2)
    density = density or Density.uniform(domain)
    return sample_point_cloud(domain, density, n, seed)
