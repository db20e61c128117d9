"""Shared convex solver for sums of Schatten norms of linear images.

Several norms in this package are defined as infima over decompositions,
always of the shape

    minimize_v  || L1(v) ||_p  +  || L2(v0 - v) ||_p

with L1, L2 linear maps from an array of matrices into a single (stacked)
matrix.  The objective is convex but nonsmooth; we run Nesterov-accelerated
gradient descent on a smoothed surrogate (singular values s replaced by
sqrt(s^2 + mu^2)) over a decreasing smoothing schedule, with multiple
starts, and report the best *exact* objective value seen.  Because the
problem is a minimization, every iterate is feasible, so the reported
value is always a valid upper bound on the true infimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ConvexCfg:
    """Budget and determinism knobs for the split-norm solver."""

    restarts: int = 16
    iters: int = 500
    seed: int = 0
    stages: int = 4
    mu0: float = 1e-1
    tol: float = 1e-6


@dataclass
class SolveResult:
    value: float
    minimizer: np.ndarray
    status: str  # "converged" | "budget-exhausted"


def _smooth_value_grad(y: np.ndarray, p: float, mu: float):
    """Smoothed Schatten p-norm, its gradient, and the exact norm.

    All three come from one SVD.  The gradient is with respect to the
    real inner product Re tr(x* y) on complex matrices.
    """
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    exact = float(np.sum(s**p) ** (1.0 / p)) if s.size else 0.0
    phi = (s * s + mu * mu) ** (0.5 * p)
    total = float(np.sum(phi))
    if total <= 0.0:
        return 0.0, np.zeros_like(y), exact
    val = total ** (1.0 / p)
    ds = total ** (1.0 / p - 1.0) * s * (s * s + mu * mu) ** (0.5 * p - 1.0)
    grad = (u * ds) @ vh
    return val, grad, exact


def _op_norm_sq(fwd, adj, shape, rng, iters: int = 30) -> float:
    """Power-iteration estimate of ||L||^2 for a linear map L given as
    (forward, adjoint) callables on arrays of the given shape."""
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    lam = 1.0
    for _ in range(iters):
        w = adj(fwd(v))
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 1.0
        lam = nrm / max(float(np.linalg.norm(v)), 1e-300)
        v = w / nrm
    return max(lam, 1e-12)


def minimize_split_schatten(
    fwd1,
    adj1,
    fwd2,
    adj2,
    v0: np.ndarray,
    p: float,
    cfg: ConvexCfg | None = None,
    extra_starts=(),
) -> SolveResult:
    """Minimize ``||L1(v)||_p + ||L2(v0 - v)||_p`` over v.

    ``fwd1``/``adj1`` and ``fwd2``/``adj2`` are the forward maps and their
    adjoints with respect to the real trace inner product.  ``extra_starts``
    may supply additional initial points (same shape as ``v0``).
    """
    if cfg is None:
        cfg = ConvexCfg()
    if not np.isfinite(p) or p < 1.0:
        raise ValueError(f"solver requires a finite exponent p >= 1, got {p}")
    rng = np.random.default_rng(cfg.seed)
    v0 = np.asarray(v0, dtype=np.complex128)

    def exact_objective(v):
        n1 = np.linalg.svd(fwd1(v), compute_uv=False)
        n2 = np.linalg.svd(fwd2(v0 - v), compute_uv=False)
        a = float(np.sum(n1**p) ** (1.0 / p)) if n1.size else 0.0
        b = float(np.sum(n2**p) ** (1.0 / p)) if n2.size else 0.0
        return a + b

    # Lipschitz scale of the smoothed gradient is (||L1||^2 + ||L2||^2)/mu.
    lip_base = _op_norm_sq(fwd1, adj1, v0.shape, rng) + _op_norm_sq(
        fwd2, adj2, v0.shape, rng
    )

    scale = max(exact_objective(v0), exact_objective(np.zeros_like(v0)), 1e-12)

    starts = [v0.copy(), np.zeros_like(v0), 0.5 * v0]
    starts.extend(np.asarray(s, dtype=np.complex128) for s in extra_starts)
    amp = float(np.linalg.norm(v0)) / max(np.sqrt(v0.size), 1.0)
    while len(starts) < max(cfg.restarts, 3):
        starts.append(
            amp * (rng.standard_normal(v0.shape) + 1j * rng.standard_normal(v0.shape))
        )

    best_val = np.inf
    best_v = v0.copy()
    improved_late = False

    iters_per_stage = max(cfg.iters // cfg.stages, 10)
    for start in starts:
        x = start.copy()
        for stage in range(cfg.stages):
            mu = cfg.mu0 * scale * 10.0 ** (-stage)
            step = mu / lip_base
            x_prev = x.copy()
            y = x.copy()
            for k in range(iters_per_stage):
                _, g1, e1 = _smooth_value_grad(fwd1(y), p, mu)
                _, g2, e2 = _smooth_value_grad(fwd2(v0 - y), p, mu)
                exact = e1 + e2
                if exact < best_val - cfg.tol * scale:
                    improved_late = stage == cfg.stages - 1 and k > iters_per_stage // 2
                if exact < best_val:
                    best_val = exact
                    best_v = y.copy()
                grad = adj1(g1) - adj2(g2)
                x_new = y - step * grad
                y = x_new + (k / (k + 3.0)) * (x_new - x_prev)
                x_prev = x
                x = x_new
        final = exact_objective(x)
        if final < best_val:
            best_val = final
            best_v = x.copy()

    status = "budget-exhausted" if improved_late else "converged"
    return SolveResult(value=best_val, minimizer=best_v, status=status)
