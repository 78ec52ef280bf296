"""Costate extraction from NLP multipliers and Pontryagin-condition residuals.

The quadrature-weight transformation of the discrete multipliers is:

    costate      lam(t_j) = -nu_j / w_j
    path covector mu(t_j) = (2/T) eta_j / w_j

where nu_j and eta_j are the defect and path multiplier blocks at node j.
The signs follow from the NLP Lagrangian convention f + lam^T c with
defect rows written as D X - (T/2) f; they are pinned by the analytic
anchor problem (min integral of u^2, xdot = u, x(0)=0, x(T)=b), whose
continuous costate is -2b/T.  The extra 2/T on the path covector absorbs
the horizon factor that the defect rows carry but the path rows do not,
so both duals come out in physical time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import Grid
from .ocp import OcpProblem, PendulumParams
from .sqp import NlpSolution
from .transcribe import (RowLayout, Trajectory, _node_cost_gradient,
                         _node_jacobians, _node_path_jacobian)


class MappingError(RuntimeError):
    """Multiplier vector cannot be mapped onto the given grid/problem."""


@dataclass
class DualTrajectory:
    """Nodal costates and path covectors in physical time."""

    costates: np.ndarray        # (n_nodes, nx)
    path_covectors: np.ndarray  # (n_nodes, nh)
    boundary: np.ndarray        # raw boundary-condition multipliers


@dataclass
class NcReport:
    """Numerical residuals of the first-order necessary conditions."""

    stationarity_u: float
    stationarity_x5: Optional[float]
    adjoint: np.ndarray            # per-state max residual
    terminal_costates: np.ndarray  # |lam_i(T)|
    complementarity_ok: bool
    hamiltonian: np.ndarray        # trace along the nodes


def extract_duals(sol: NlpSolution, grid: Grid, problem: OcpProblem) -> DualTrajectory:
    """Map the raw NLP multipliers into costate and covector trajectories.

    Valid row layout is reconstructed from (grid, problem); a multiplier
    vector of any other length cannot be interpreted and raises
    MappingError.  Extraction is meaningful for converged solutions but is
    performed regardless of status so diagnostic reports never crash.
    """
    rows = RowLayout(n_nodes=grid.n_nodes, nx=problem.nx, nh=problem.nh,
                     n_terminal=len(problem.terminal))
    if len(sol.multipliers) != rows.n_rows:
        raise MappingError(
            f"expected {rows.n_rows} multipliers for this grid/problem, "
            f"got {len(sol.multipliers)}"
        )
    w = grid.weights
    nu = sol.multipliers[rows.defect].reshape(grid.n_nodes, problem.nx)
    costates = -nu / w[:, None]
    if problem.nh > 0:
        eta = sol.multipliers[rows.path].reshape(grid.n_nodes, problem.nh)
        path_cov = (2.0 / problem.T) * eta / w[:, None]
    else:
        path_cov = np.zeros((grid.n_nodes, 0))
    return DualTrajectory(costates=costates, path_covectors=path_cov,
                          boundary=sol.multipliers[rows.boundary].copy())


# ---------------------------------------------------------------------------
# Pendulum-specific conditions
# ---------------------------------------------------------------------------

def hamiltonian(x, x5, u, lam, mu, t, p: PendulumParams) -> float:
    """Lagrangian of the control Hamiltonian for the constrained pendulum.

    Running cost plus costates against the dynamics plus the path covector
    against the length constraint.
    """
    x1, x2, x3, x4 = x
    l1, l2, l3, l4 = lam
    ex = x1 - p.L * math.sin(t + p.alpha)
    ey = x3 - p.L * math.cos(t + p.alpha)
    return (p.c * u**2 + p.d * (ex**2 + ey**2)
            + l1 * x2
            + l2 * (-x5 * x1 - p.a * x2 + u * x3)
            + l3 * x4
            + l4 * (-x5 * x3 - p.a * x4 - p.g - u * x1)
            + mu * (x1**2 + x3**2 - p.L**2))


def pendulum_adjoint_rhs(x, x5, u, lam, mu, t, p: PendulumParams) -> np.ndarray:
    """Right-hand sides of -lam_dot for the pendulum, one per state:

        -lam1' = 2d(x1 - L sin(t+a)) - lam2 x5 - lam4 u + 2 mu x1
        -lam2' = lam1 - a lam2
        -lam3' = 2d(x3 - L cos(t+a)) + lam2 u - lam4 x5 + 2 mu x3
        -lam4' = lam3 - a lam4
    """
    x1, _x2, x3, _x4 = x
    l1, l2, l3, l4 = lam
    return np.array([
        2 * p.d * (x1 - p.L * math.sin(t + p.alpha)) - l2 * x5 - l4 * u + 2 * mu * x1,
        l1 - p.a * l2,
        2 * p.d * (x3 - p.L * math.cos(t + p.alpha)) + l2 * u - l4 * x5 + 2 * mu * x3,
        l3 - p.a * l4,
    ])


def residual_stationarity_u(traj: Trajectory, duals: DualTrajectory,
                            p: PendulumParams) -> np.ndarray:
    """Per-node residual of the regular-control condition
    u = (lam4 x1 - lam2 x3) / (2c)."""
    x1 = traj.states[:, 0]
    x3 = traj.states[:, 2]
    l2 = duals.costates[:, 1]
    l4 = duals.costates[:, 3]
    return traj.controls[:, 0] - (l4 * x1 - l2 * x3) / (2.0 * p.c)


def residual_stationarity_x5(traj: Trajectory, duals: DualTrajectory) -> np.ndarray:
    """Per-node residual of the singular-channel condition
    lam2 x1 + lam4 x3 = 0."""
    return (duals.costates[:, 1] * traj.states[:, 0]
            + duals.costates[:, 3] * traj.states[:, 2])


# ---------------------------------------------------------------------------
# Generic conditions (any problem with derivative callbacks)
# ---------------------------------------------------------------------------

def residual_adjoint(traj: Trajectory, duals: DualTrajectory, grid: Grid,
                     problem: OcpProblem) -> np.ndarray:
    """Per-node, per-state adjoint residual lam_dot + dH/dx.

    The costate derivative is taken spectrally: the grid differentiation
    matrix scaled by 2/T.  dH/dx is assembled from the problem's
    derivative callbacks; for the pendulum instance this reproduces the
    four closed-form adjoint right-hand sides term by term.
    """
    n_nodes = grid.n_nodes
    lam_dot = (2.0 / problem.T) * (grid.diff_matrix @ duals.costates)
    res = np.empty((n_nodes, problem.nx))
    for j in range(n_nodes):
        x, z, u, t = traj.states[j], traj.algebraic[j], traj.controls[j], traj.times[j]
        gx = _node_cost_gradient(problem, x, z, u, t)[: problem.nx]
        fx = _node_jacobians(problem, x, z, u, t)[:, : problem.nx]
        dHdx = gx + fx.T @ duals.costates[j]
        if problem.nh > 0:
            hx = _node_path_jacobian(problem, x, z, u, t)[:, : problem.nx]
            dHdx = dHdx + hx.T @ duals.path_covectors[j]
        res[j] = lam_dot[j] + dHdx
    return res


def residual_stationarity_control(traj: Trajectory, duals: DualTrajectory,
                                  problem: OcpProblem) -> np.ndarray:
    """Per-node, per-control residual dH/du for problems without a
    closed-form control law."""
    n_nodes = len(traj.times)
    res = np.empty((n_nodes, problem.nu))
    for j in range(n_nodes):
        x, z, u, t = traj.states[j], traj.algebraic[j], traj.controls[j], traj.times[j]
        nx, na = problem.nx, problem.na
        gu = _node_cost_gradient(problem, x, z, u, t)[nx + na:]
        fu = _node_jacobians(problem, x, z, u, t)[:, nx + na:]
        res[j] = gu + fu.T @ duals.costates[j]
        if problem.nh > 0:
            hu = _node_path_jacobian(problem, x, z, u, t)[:, nx + na:]
            res[j] += hu.T @ duals.path_covectors[j]
    return res


# ---------------------------------------------------------------------------
# Verdict helpers
# ---------------------------------------------------------------------------

def check_transversality(duals: DualTrajectory, tol: float):
    """Terminal costate norms against a free-endpoint transversality bound.

    Returns (passed, |lam_i(T)| per state).
    """
    norms = np.abs(duals.costates[-1])
    return bool(np.all(norms <= tol)), norms


def check_complementarity(h_values, mu_values, h_lower, h_upper, tol,
                          activation_tol: float = 1e-9):
    """Per-node complementarity verdicts for one path constraint channel.

    Equality constraints (coincident bounds) impose no sign and pass
    vacuously.  At the upper bound the covector must not be significantly
    negative, at the lower bound not significantly positive, and strictly
    inside the band it must vanish to within ``tol``.
    """
    h = np.asarray(h_values, dtype=float)
    mu = np.asarray(mu_values, dtype=float)
    lo, hi = float(h_lower), float(h_upper)
    if lo == hi:
        return np.ones_like(h, dtype=bool)
    verdict = np.empty_like(h, dtype=bool)
    at_upper = np.abs(h - hi) <= activation_tol
    at_lower = np.abs(h - lo) <= activation_tol
    interior = ~(at_upper | at_lower)
    verdict[at_upper] = mu[at_upper] >= -tol
    verdict[at_lower] = mu[at_lower] <= tol
    verdict[interior] = np.abs(mu[interior]) <= tol
    return verdict
