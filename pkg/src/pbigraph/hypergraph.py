"""Oriented hypergraphs and their gradient / adjoint / divergence calculus.

A hyperarc is a pair (out, in) of nonempty disjoint vertex sets.  The
epsilon-neighborhood construction makes one arc per vertex: out = {x_i},
in = neighbors of x_i within eps; vertices with no neighbors produce no arc.

    grad f(a)   = sum_{v in a_in} f(v) - (|a_in|/|a_out|) sum_{v in a_out} f(v)
    adjoint G(v) = sum_{a: v in a_in} G(a) - sum_{a: v in a_out} (|a_in|/|a_out|) G(a)
    div = -adjoint,  and  div(|grad f|^{p-2} grad f) reproduces the (unscaled,
    unit-weight) graph p-biharmonic operator on the epsilon construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import PointCloud, build_neighbor_index
from .graph_ops import _sign_power


@dataclass
class OrientedHypergraph:
    n: int
    arcs: list  # list of (out_ids, in_ids) integer arrays
    b_out: sp.csr_matrix = field(repr=False)  # (num_arcs, n) 0/1 incidence
    b_in: sp.csr_matrix = field(repr=False)
    out_sizes: np.ndarray = field(repr=False)
    in_sizes: np.ndarray = field(repr=False)
    dropped: np.ndarray = field(default=None, repr=False)  # vertices with no arc
    arc_vertex: np.ndarray = field(default=None, repr=False)  # eps-construction only

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @property
    def ratio(self) -> np.ndarray:
        return self.in_sizes / self.out_sizes

    def dump(self, path) -> None:
        """One line per hyperarc: `out_ids | in_ids`."""
        with open(path, "w") as fh:
            for out_ids, in_ids in self.arcs:
                fh.write(" ".join(map(str, out_ids)) + " | " + " ".join(map(str, in_ids)) + "\n")


def from_arcs(n: int, arcs) -> OrientedHypergraph:
    """Build a hypergraph from explicit (out, in) id collections."""
    clean = []
    rows_out, cols_out, rows_in, cols_in = [], [], [], []
    for k, (out_ids, in_ids) in enumerate(arcs):
        out_ids = np.unique(np.asarray(out_ids, dtype=np.int64))
        in_ids = np.unique(np.asarray(in_ids, dtype=np.int64))
        if out_ids.size == 0 or in_ids.size == 0:
            raise ValueError("hyperarc out/in sets must be nonempty")
        if np.intersect1d(out_ids, in_ids).size:
            raise ValueError("hyperarc out/in sets must be disjoint")
        clean.append((out_ids, in_ids))
        rows_out.extend([k] * out_ids.size)
        cols_out.extend(out_ids.tolist())
        rows_in.extend([k] * in_ids.size)
        cols_in.extend(in_ids.tolist())
    m = len(clean)
    b_out = sp.csr_matrix((np.ones(len(rows_out)), (rows_out, cols_out)), shape=(m, n))
    b_in = sp.csr_matrix((np.ones(len(rows_in)), (rows_in, cols_in)), shape=(m, n))
    out_sizes = np.array([a[0].size for a in clean], dtype=float)
    in_sizes = np.array([a[1].size for a in clean], dtype=float)
    covered = np.zeros(n, dtype=bool)
    for out_ids, in_ids in clean:
        covered[out_ids] = True
        covered[in_ids] = True
    return OrientedHypergraph(n, clean, b_out, b_in, out_sizes, in_sizes,
                              dropped=np.nonzero(~covered)[0])


def build_hypergraph(cloud: PointCloud, eps: float) -> OrientedHypergraph:
    """One hyperarc per vertex with in = eps-ball neighbors; isolated vertices dropped."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    index = build_neighbor_index(cloud, eps)
    arcs = []
    arc_vertex = []
    for i in range(cloud.n):
        nbrs = index.neighbors(i)
        if nbrs.size == 0:
            continue
        arcs.append((np.array([i]), nbrs))
        arc_vertex.append(i)
    H = from_arcs(cloud.n, arcs)
    H.arc_vertex = np.array(arc_vertex, dtype=np.int64)
    H.dropped = np.setdiff1d(np.arange(cloud.n), H.arc_vertex)
    return H


def hyper_gradient(H: OrientedHypergraph, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (H.n,):
        raise ValueError(f"expected length-{H.n} vertex function")
    return H.b_in @ f - H.ratio * (H.b_out @ f)


def hyper_adjoint(H: OrientedHypergraph, G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.shape != (H.num_arcs,):
        raise ValueError(f"expected length-{H.num_arcs} arc function")
    return H.b_in.T @ G - H.b_out.T @ (H.ratio * G)


def hyper_divergence(H: OrientedHypergraph, G: np.ndarray) -> np.ndarray:
    return -hyper_adjoint(H, G)


def hyper_p_laplacian(H: OrientedHypergraph, f: np.ndarray, p: float,
                      scale: float = 1.0) -> np.ndarray:
    """div(|grad f|^{p-2} grad f), optionally with grad and div rescaled by `scale`.

    With scale = 1/(n eps^2) on the eps-neighborhood construction this is the
    (unit-weight) graph p-biharmonic operator with the paper-matching scaling.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    g = scale * hyper_gradient(H, f)
    return scale * hyper_divergence(H, _sign_power(g, p))
