"""Convex minimization engine shared by the graph, hypergraph, and grid energies.

Minimizes  E(u) = (1/p) <|L u|^p, 1>_w + (lam/2) <|u - f|^2, 1>_w  for a linear
operator L that is self-adjoint in the w-weighted inner product.  The gradient
in that inner product is weight-free:

    g = L(|L u|^{p-2} L u) + lam (u - f).

Methods: Barzilai-Borwein gradient descent with monotone Armijo backtracking
(any p > 1; for p < 2 a (s^2 + tau^2)^{p/2} surrogate with tau continuation),
and conjugate gradients on (L^2 + lam I) u = lam f for the linear p = 2 case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph_ops import WeightedGraph, graph_laplacian, _sign_power
from .hypergraph import OrientedHypergraph, hyper_gradient, hyper_divergence


class SelfAdjointnessError(ValueError):
    """Operator failed the randomized self-adjointness probe."""


@dataclass
class SolveConfig:
    p: float = 2.0
    lam: float = 1.0
    tol: float = 1e-8
    max_iter: int = 5000
    method: str = "auto"  # auto | gradient-bb | cg-p2
    tau: float = 1e-3
    continuation_steps: int = 6
    keep_energy_trace: bool = True

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError("p must exceed 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.method not in ("auto", "gradient-bb", "cg-p2"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "cg-p2" and self.p != 2:
            raise ValueError("cg-p2 requires p = 2")


@dataclass
class SolveReport:
    iterations: int
    energy_trace: list
    final_grad_norm: float
    status: str  # converged | max-iter | stalled

    def to_json(self, include_trace: bool = True) -> str:
        payload = {
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "status": self.status,
        }
        if include_trace:
            payload["energy_trace"] = list(self.energy_trace)
        return json.dumps(payload)


def _wdot(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(w * a * b))


def _wnorm(w: np.ndarray, a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * a * a)))


def probe_self_adjoint(apply_L, size: int, weights: np.ndarray,
                       tol: float = 1e-10, trials: int = 3, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        v = rng.standard_normal(size)
        z = rng.standard_normal(size)
        lhs = _wdot(weights, apply_L(v), z)
        rhs = _wdot(weights, v, apply_L(z))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        if abs(lhs - rhs) > tol * scale:
            raise SelfAdjointnessError(
                f"<Lv,z>_w = {lhs:.6e} but <v,Lz>_w = {rhs:.6e}")


def _energy_and_grad(apply_L, u, f, p, lam, weights, tau):
    Lu = apply_L(u)
    if tau > 0:
        m2 = Lu**2 + tau**2
        energy = float(np.sum(weights * m2 ** (p / 2.0))) / p
        inner = m2 ** (p / 2.0 - 1.0) * Lu
    else:
        energy = float(np.sum(weights * np.abs(Lu) ** p)) / p
        inner = _sign_power(Lu, p)
    diff = u - f
    energy += 0.5 * lam * float(np.sum(weights * diff**2))
    grad = apply_L(inner) + lam * diff
    return energy, grad


def _energy_only(apply_L, u, f, p, lam, weights, tau):
    Lu = apply_L(u)
    if tau > 0:
        reg = float(np.sum(weights * (Lu**2 + tau**2) ** (p / 2.0))) / p
    else:
        reg = float(np.sum(weights * np.abs(Lu) ** p)) / p
    return reg + 0.5 * lam * float(np.sum(weights * (u - f) ** 2))


def _bb_descent(apply_L, f, p, lam, weights, tau, tol, max_iter, u0, trace):
    """Monotone BB gradient descent for one fixed tau."""
    u = u0.copy()
    energy, grad = _energy_and_grad(apply_L, u, f, p, lam, weights, tau)
    trace.append(energy)
    gnorm = _wnorm(weights, grad)
    step = 1.0 / max(lam, 1e-12)
    prev_u = prev_g = None
    it = 0
    while gnorm > tol and it < max_iter:
        if prev_u is not None:
            du = u - prev_u
            dg = grad - prev_g
            denom = _wdot(weights, du, dg)
            if denom > 0:
                step = _wdot(weights, du, du) / denom
            # else keep the previous (accepted) step
        step = min(max(step, 1e-14), 1e14)
        # Armijo backtracking on the energy
        alpha = step
        accepted = False
        for _ in range(60):
            cand = u - alpha * grad
            cand_energy = _energy_only(apply_L, cand, f, p, lam, weights, tau)
            if np.isfinite(cand_energy) and cand_energy <= energy - 1e-4 * alpha * gnorm**2:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return u, it, gnorm, "stalled"
        prev_u, prev_g = u, grad
        u = cand
        energy, grad = _energy_and_grad(apply_L, u, f, p, lam, weights, tau)
        trace.append(energy)
        gnorm = _wnorm(weights, grad)
        step = alpha
        it += 1
    status = "converged" if gnorm <= tol else "max-iter"
    return u, it, gnorm, status


def minimize(apply_L, f: np.ndarray, cfg: SolveConfig, weights: np.ndarray,
             u0: np.ndarray | None = None, probe: bool = True):
    """Minimize the p-power energy; returns (u, SolveReport)."""
    f = np.asarray(f, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), f.shape)
    if probe:
        probe_self_adjoint(apply_L, f.size, weights)
    if cfg.method == "cg-p2" or (cfg.method == "auto" and cfg.p == 2):
        return cg_solve_p2(apply_L, f, cfg.lam, weights, tol=cfg.tol,
                           max_iter=cfg.max_iter, u0=u0)
    u = f.copy() if u0 is None else np.asarray(u0, dtype=float).copy()
    trace: list = []
    total_iters = 0
    if cfg.p < 2 and cfg.tau > 0:
        taus = [cfg.tau * 0.5**k for k in range(cfg.continuation_steps + 1)]
    else:
        taus = [0.0]
    status = "converged"
    gnorm = 0.0
    for k, tau in enumerate(taus):
        final_stage = k == len(taus) - 1
        # early continuation stages only need a rough solve
        stage_tol = cfg.tol if final_stage else 10 * cfg.tol
        u, it, gnorm, status = _bb_descent(apply_L, f, cfg.p, cfg.lam, weights,
                                           tau, stage_tol, cfg.max_iter, u, trace)
        total_iters += it
        if status == "stalled":
            break
    report = SolveReport(total_iters, trace if cfg.keep_energy_trace else [],
                         gnorm, status)
    return u, report


def cg_solve_p2(apply_L, f: np.ndarray, lam: float, weights: np.ndarray,
                tol: float = 1e-10, max_iter: int = 10000,
                u0: np.ndarray | None = None):
    """Conjugate gradients on (L^2 + lam I) u = lam f in the w-inner product."""
    if lam <= 0:
        raise ValueError("lam must be positive for the p = 2 linear system")
    f = np.asarray(f, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), f.shape)

    def apply_A(v):
        return apply_L(apply_L(v)) + lam * v

    b = lam * f
    u = f.copy() if u0 is None else np.asarray(u0, dtype=float).copy()
    r = b - apply_A(u)
    d = r.copy()
    rs = _wdot(weights, r, r)
    bnorm = _wnorm(weights, b)
    target = tol * max(bnorm, 1e-300)
    it = 0
    status = "max-iter"
    while it < max_iter:
        if np.sqrt(rs) <= target:
            status = "converged"
            break
        Ad = apply_A(d)
        alpha = rs / _wdot(weights, d, Ad)
        u = u + alpha * d
        r = r - alpha * Ad
        rs_new = _wdot(weights, r, r)
        d = r + (rs_new / rs) * d
        rs = rs_new
        it += 1
    if np.sqrt(rs) <= target:
        status = "converged"
    report = SolveReport(it, [], float(np.sqrt(rs)), status)
    return u, report


def solve_graph_p_biharmonic(G: WeightedGraph, f: np.ndarray, cfg: SolveConfig,
                             u0: np.ndarray | None = None):
    """Solve the p-biharmonic equation on the weighted graph (weights 1/n)."""
    if cfg.lam <= 0:
        raise ValueError("lam must be positive for unique solvability")
    weights = np.full(G.n, 1.0 / G.n)
    return minimize(lambda v: graph_laplacian(G, v), f, cfg, weights,
                    u0=u0, probe=False)


def solve_hypergraph_p_laplacian(H: OrientedHypergraph, f: np.ndarray,
                                 cfg: SolveConfig, eps: float,
                                 u0: np.ndarray | None = None):
    """Solve the (rescaled) hypergraph p-Laplacian equation.

    Uses the arc-side calculus: the vertex operator v -> scale * grad_H v read
    back through the arc<->vertex bijection of the eps-neighborhood
    construction, which coincides with the unit-weight graph Laplacian.
    """
    if H.arc_vertex is None:
        raise ValueError("hypergraph solve needs the eps-neighborhood construction")
    if cfg.lam <= 0:
        raise ValueError("lam must be positive for unique solvability")
    scale = 1.0 / (H.n * eps**2)

    def apply_L(v):
        out = np.zeros(H.n)
        out[H.arc_vertex] = scale * hyper_gradient(H, v)
        return out

    weights = np.full(H.n, 1.0 / H.n)
    return minimize(apply_L, f, cfg, weights, u0=u0, probe=False)
