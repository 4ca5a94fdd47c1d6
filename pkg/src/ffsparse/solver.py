"""Convex recovery programs for block-sparse signals over fusion frames.

All programs minimize the mixed (2,1)-norm.  The subspace-membership
constraint is eliminated by working in coefficient space (x_j = U_j c_j with
orthonormal U_j), where the norm of a coefficient block equals the norm of
its ambient block, so group basis pursuit on the coefficient matrix solves
the constrained program exactly.

The solvers are ADMM-style operator splittings whose proximal step is block
soft-thresholding: block j is scaled by max(0, 1 - tau / ||c_j||_2).  The
equality-constrained program alternates that prox with an exact affine
projection; the noisy program replaces the affine projection with the
projection onto the residual ball.  The contract is the returned minimizer,
not the iteration.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .blocks import BlockVector, norm_l21
from .frames import incoherence, lambda_max
from .measurement import MeasurementEnsemble

__all__ = [
    "SolverConfig",
    "SolveReport",
    "solve_l1_equality",
    "solve_l1_noisy",
    "solve_block_baseline",
    "orthogonal_closed_form",
    "solve_l0_oracle",
    "relative_error",
]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.  Tolerances are relative residual thresholds."""

    max_iter: int = 50000
    tol_primal: float = 1e-9
    tol_dual: float = 1e-9
    penalty: float = 1.0
    success_rel_err: float = 1e-4

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ValueError("tolerances must be positive")
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")


@dataclass
class SolveReport:
    """Outcome of one solve; ``rel_err_vs_truth`` is filled by callers that
    know the ground truth."""

    x_hat: BlockVector
    objective: float
    constraint_residual: float
    iterations: int
    converged: bool
    rel_err_vs_truth: Optional[float] = None
    wall_time: float = 0.0


def relative_error(x_hat: BlockVector, x_true: BlockVector) -> float:
    """||x_hat - x||_2 / ||x||_2, falling back to ||x_hat||_2 for x = 0."""
    diff = float(np.linalg.norm(x_hat.blocks - x_true.blocks))
    denom = float(np.linalg.norm(x_true.blocks))
    return diff / denom if denom > 0 else float(np.linalg.norm(x_hat.blocks))


def _block_soft_threshold(v: np.ndarray, block_len: int, tau: float) -> np.ndarray:
    """Prox of tau * ||.||_{2,1} on a flat vector split into blocks."""
    blocks = v.reshape(-1, block_len)
    norms = np.linalg.norm(blocks, axis=1)
    factor = np.maximum(0.0, 1.0 - tau / np.where(norms > 0, norms, 1.0))
    factor[norms == 0] = 0.0
    return (blocks * factor[:, None]).ravel()


# residual balancing is checked only every so often: per-iteration switching
# can lock the iteration into a penalty limit cycle
_BALANCE_EVERY = 50


def _balance_penalty(rho, r_norm, s_norm):
    """Residual balancing: double/halve rho when one residual dominates 10x.
    Dual variables are stored scaled, so they are rescaled with rho."""
    if r_norm > 10.0 * s_norm and rho < 1e8:
        return 2.0 * rho, 0.5
    if s_norm > 10.0 * r_norm and rho > 1e-8:
        return 0.5 * rho, 2.0
    return rho, 1.0


def _group_bp_equality(matrix: np.ndarray, b: np.ndarray, block_len: int, cfg: SolverConfig):
    """min sum_j ||c_j||_2  s.t.  matrix @ c = b, via ADMM with an exact
    affine projection.  Returns (c, iterations, converged)."""
    n = matrix.shape[1]
    pinv = np.linalg.pinv(matrix)
    rho = cfg.penalty
    floor = 1e-15 * math.sqrt(n)

    c = pinv @ b  # least-norm feasible start
    z = _block_soft_threshold(c, block_len, 1.0 / rho)
    u = c - z

    converged = False
    iters = 0
    for it in range(1, cfg.max_iter + 1):
        iters = it
        v = z - u
        c = v - pinv @ (matrix @ v - b)
        z_old = z
        z = _block_soft_threshold(c + u, block_len, 1.0 / rho)
        u = u + c - z

        r_norm = float(np.linalg.norm(c - z))
        s_norm = rho * float(np.linalg.norm(z - z_old))
        eps_pri = floor + cfg.tol_primal * max(float(np.linalg.norm(c)), float(np.linalg.norm(z)))
        eps_dual = floor + cfg.tol_dual * rho * float(np.linalg.norm(u))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

        if it % _BALANCE_EVERY == 0:
            rho, u_factor = _balance_penalty(rho, r_norm, s_norm)
            if u_factor != 1.0:
                u = u * u_factor
    return c, iters, converged


def _group_bp_ball(matrix: np.ndarray, b: np.ndarray, radius: float, block_len: int,
                   cfg: SolverConfig):
    """min sum_j ||c_j||_2  s.t.  ||matrix @ c - b||_2 <= radius.

    Splitting with copies z = c and w = matrix @ c; the w-step projects onto
    the radius-ball around b (a point when radius = 0).
    """
    n_rows, n_cols = matrix.shape
    rho = cfg.penalty
    floor = 1e-15 * math.sqrt(n_cols + n_rows)

    # (I + M^T M) solve, factoring whichever Gram is smaller
    if n_cols <= n_rows:
        chol = scipy.linalg.cho_factor(np.eye(n_cols) + matrix.T @ matrix)

        def solve_normal(rhs):
            return scipy.linalg.cho_solve(chol, rhs)
    else:
        chol = scipy.linalg.cho_factor(np.eye(n_rows) + matrix @ matrix.T)

        def solve_normal(rhs):
            return rhs - matrix.T @ scipy.linalg.cho_solve(chol, matrix @ rhs)

    def project_ball(v):
        dv = v - b
        norm = float(np.linalg.norm(dv))
        if norm <= radius:
            return v
        return b + dv * (radius / norm) if norm > 0 else b.copy()

    c = solve_normal(matrix.T @ b)  # ridge start
    z = _block_soft_threshold(c, block_len, 1.0 / rho)
    w = project_ball(matrix @ c)
    uz = np.zeros(n_cols)
    uw = np.zeros(n_rows)

    converged = False
    iters = 0
    for it in range(1, cfg.max_iter + 1):
        iters = it
        rhs = (z - uz) + matrix.T @ (w - uw)
        c = solve_normal(rhs)
        mc = matrix @ c
        z_old, w_old = z, w
        z = _block_soft_threshold(c + uz, block_len, 1.0 / rho)
        w = project_ball(mc + uw)
        uz = uz + c - z
        uw = uw + mc - w

        r_norm = math.hypot(float(np.linalg.norm(c - z)), float(np.linalg.norm(mc - w)))
        s_norm = rho * float(np.linalg.norm((z_old - z) + matrix.T @ (w_old - w)))
        ax = math.hypot(float(np.linalg.norm(c)), float(np.linalg.norm(mc)))
        bz = math.hypot(float(np.linalg.norm(z)), float(np.linalg.norm(w)))
        eps_pri = floor + cfg.tol_primal * max(ax, bz)
        eps_dual = floor + cfg.tol_dual * rho * float(np.linalg.norm(uz + matrix.T @ uw))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

        if it % _BALANCE_EVERY == 0:
            rho, u_factor = _balance_penalty(rho, r_norm, s_norm)
            if u_factor != 1.0:
                uz = uz * u_factor
                uw = uw * u_factor
    return c, iters, converged


def _check_measurements(ensemble: MeasurementEnsemble, y: BlockVector) -> None:
    d = ensemble.frame.dim_ambient
    if y.n_blocks != ensemble.m or y.block_len != d:
        raise ValueError(
            f"measurements of shape ({y.n_blocks}, {y.block_len}) do not match "
            f"ensemble (m={ensemble.m}, d={d})"
        )
    if y.n_blocks == 0 or y.block_len == 0:
        raise ValueError("zero-dimension measurements")


def solve_l1_equality(ensemble: MeasurementEnsemble, y: BlockVector,
                      config: Optional[SolverConfig] = None) -> SolveReport:
    """Minimize the (2,1)-norm subject to exact agreement with the projected
    measurements, over signals with blocks in their subspaces."""
    cfg = config or SolverConfig()
    _check_measurements(ensemble, y)
    t0 = time.perf_counter()
    matrix = ensemble.coefficient_matrix()
    b = y.to_flat()
    c, iters, converged = _group_bp_equality(matrix, b, ensemble.frame.dim_subspace, cfg)
    x_hat = ensemble.frame.expand(
        BlockVector(c.reshape(ensemble.n, ensemble.frame.dim_subspace), "coefficient")
    )
    residual = float(np.linalg.norm(matrix @ c - b))
    return SolveReport(
        x_hat=x_hat,
        objective=norm_l21(x_hat),
        constraint_residual=residual,
        iterations=iters,
        converged=converged,
        wall_time=time.perf_counter() - t0,
    )


def solve_l1_noisy(ensemble: MeasurementEnsemble, y: BlockVector, eta: float,
                   config: Optional[SolverConfig] = None) -> SolveReport:
    """Minimize the (2,1)-norm subject to the measurement residual staying
    within the noise ball of radius eta * sqrt(m) (in the ensemble's scale)."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    cfg = config or SolverConfig()
    _check_measurements(ensemble, y)
    t0 = time.perf_counter()
    matrix = ensemble.coefficient_matrix()
    b = y.to_flat()
    radius = eta * math.sqrt(ensemble.m) * ensemble.scale
    c, iters, converged = _group_bp_ball(matrix, b, radius, ensemble.frame.dim_subspace, cfg)
    x_hat = ensemble.frame.expand(
        BlockVector(c.reshape(ensemble.n, ensemble.frame.dim_subspace), "coefficient")
    )
    residual = max(0.0, float(np.linalg.norm(matrix @ c - b)) - radius)
    return SolveReport(
        x_hat=x_hat,
        objective=norm_l21(x_hat),
        constraint_residual=residual,
        iterations=iters,
        converged=converged,
        wall_time=time.perf_counter() - t0,
    )


def solve_block_baseline(ensemble: MeasurementEnsemble, y: BlockVector,
                         config: Optional[SolverConfig] = None) -> SolveReport:
    """Block-sparsity baseline: same objective and measurements but blocks
    range over all of R^d, with no subspace knowledge."""
    cfg = config or SolverConfig()
    _check_measurements(ensemble, y)
    t0 = time.perf_counter()
    d = ensemble.frame.dim_ambient
    matrix = ensemble.blockwise_matrix()
    b = y.to_flat()
    c, iters, converged = _group_bp_equality(matrix, b, d, cfg)
    x_hat = BlockVector(c.reshape(ensemble.n, d), "ambient")
    residual = float(np.linalg.norm(matrix @ c - b))
    return SolveReport(
        x_hat=x_hat,
        objective=norm_l21(x_hat),
        constraint_residual=residual,
        iterations=iters,
        converged=converged,
        wall_time=time.perf_counter() - t0,
    )


def orthogonal_closed_form(ensemble: MeasurementEnsemble, y: BlockVector) -> BlockVector:
    """Exact one-measurement reconstruction for mutually orthogonal
    subspaces: block i is recovered as P_i y / a_i.

    Requires a single measurement block, zero incoherence, and no zero
    coefficients in the measurement row.
    """
    frame = ensemble.frame
    if ensemble.m != 1:
        raise ValueError("closed form needs exactly one measurement block")
    if lambda_max(incoherence(frame)) > 1e-10:
        raise ValueError("closed form requires mutually orthogonal subspaces")
    coeffs = ensemble.matrix[0] * ensemble.scale
    if (coeffs == 0.0).any():
        raise ValueError("closed form requires all measurement coefficients nonzero")
    if y.n_blocks != 1 or y.block_len != frame.dim_ambient:
        raise ValueError("measurement must be a single ambient block")
    projected = np.stack([frame.projector(j) @ y.block(0) for j in range(frame.n_subspaces)])
    return BlockVector(projected / coeffs[:, None], "ambient")


_ORACLE_MAX_N = 12
_ORACLE_MAX_S = 3
_ORACLE_RESIDUAL = 1e-8


def solve_l0_oracle(ensemble: MeasurementEnsemble, y: BlockVector,
                    max_s: int) -> Optional[BlockVector]:
    """Exhaustive sparsest-solution search for tiny instances (test oracle).

    Enumerates supports of size 0..max_s in lexicographic order, solves the
    least-squares fit in coefficient space on each, and returns the first
    consistent solution (residual <= 1e-8) of minimal support size.  Returns
    None when no support fits.
    """
    if ensemble.n > _ORACLE_MAX_N or max_s > _ORACLE_MAX_S:
        raise ValueError(
            f"enumeration guard: need N <= {_ORACLE_MAX_N} and max_s <= {_ORACLE_MAX_S}"
        )
    _check_measurements(ensemble, y)
    matrix = ensemble.coefficient_matrix()
    b = y.to_flat()
    n, k = ensemble.n, ensemble.frame.dim_subspace

    if float(np.linalg.norm(b)) <= _ORACLE_RESIDUAL:
        return BlockVector.zeros(n, ensemble.frame.dim_ambient)

    for size in range(1, min(max_s, n) + 1):
        for combo in itertools.combinations(range(n), size):
            cols = np.concatenate([np.arange(j * k, (j + 1) * k) for j in combo])
            sub = matrix[:, cols]
            fit, *_ = np.linalg.lstsq(sub, b, rcond=None)
            if float(np.linalg.norm(sub @ fit - b)) <= _ORACLE_RESIDUAL:
                c = np.zeros(n * k)
                c[cols] = fit
                return ensemble.frame.expand(BlockVector(c.reshape(n, k), "coefficient"))
    return None
