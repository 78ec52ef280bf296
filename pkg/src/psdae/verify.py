"""Independent verification and validation of collocation solutions.

The battery follows flight-software practice: the solved control is
interpolated into a continuous signal, the initial state is propagated
through an adaptive integrator that shares nothing with the collocation
machinery, and the propagated trajectory is compared against the nodal
solution and the algebraic constraint.  Nodal collocation residuals are
deliberately never used as evidence: they are enforced by construction
and say nothing about dynamic feasibility between nodes.

On top of feasibility, the battery evaluates every first-order necessary
condition through the extracted duals, and cross-checks the optimal cost
against an independently solved minimal-coordinate formulation of the
same physics.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import covector
from .basis import DomainError, Grid
from .covector import DualTrajectory, NcReport
from .integrate import (IvpSetup, MaxStepsError, StepUnderflowError,
                        control_signal, propagate)
from .ocp import (EvaluationError, OcpProblem, PendulumParams,
                  lift_reduced_state, reduced_pendulum_problem)
from .sqp import NlpSolution, SolverConfig, solve
from .transcribe import NlpProblem, Trajectory, transcribe


@dataclass(frozen=True)
class VvConfig:
    """Thresholds and knobs of the verification battery.

    The two 1e-4 feasibility bands are absolute in problem units.  The
    necessary-condition tolerances are relative to the natural scale of
    each condition.
    """

    state_deviation_tol: float = 1e-4
    path_residual_tol: float = 1e-4
    nc_rel_tol: float = 1e-2
    oracle_cost_rtol: float = 1e-3
    oracle_state_tol: float = 1e-3
    dense_samples: int = 200
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    include_oracle: bool = True
    oracle_max_iter: int = 1500


@dataclass
class VvReport:
    solver_status: str = ""
    objective: float = float("nan")
    propagation_ok: bool = False
    state_deviation: Optional[np.ndarray] = None  # per-channel max
    max_state_deviation: float = float("inf")
    max_path_residual: Optional[float] = None
    nc: Optional[NcReport] = None
    oracle_status: Optional[str] = None
    oracle_cost: Optional[float] = None
    oracle_cost_gap: Optional[float] = None
    oracle_state_gap: Optional[float] = None
    passes: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def all_passed(self) -> bool:
        return bool(self.passes) and all(self.passes.values())

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, float) and not np.isfinite(v):
                return repr(v)
            return v

        out = {
            "solver_status": self.solver_status,
            "objective": clean(self.objective),
            "propagation_ok": self.propagation_ok,
            "state_deviation": clean(self.state_deviation),
            "max_state_deviation": clean(self.max_state_deviation),
            "max_path_residual": clean(self.max_path_residual),
            "oracle_status": self.oracle_status,
            "oracle_cost": clean(self.oracle_cost),
            "oracle_cost_gap": clean(self.oracle_cost_gap),
            "oracle_state_gap": clean(self.oracle_state_gap),
            "passes": {k: bool(v) for k, v in self.passes.items()},
            "thresholds": {k: clean(v) for k, v in self.thresholds.items()},
        }
        if self.nc is not None:
            out["necessary_conditions"] = {
                "stationarity_u": clean(self.nc.stationarity_u),
                "stationarity_x5": clean(self.nc.stationarity_x5),
                "adjoint": clean(self.nc.adjoint),
                "terminal_costates": clean(self.nc.terminal_costates),
                "complementarity_ok": bool(self.nc.complementarity_ok),
                "hamiltonian": clean(self.nc.hamiltonian),
            }
        return out


def _propagated(traj: Trajectory, problem: OcpProblem, grid: Grid, cfg: VvConfig):
    """Propagate the initial state under the interpolated control signal.

    Returns (node-time states, dense times, dense states) or None when the
    propagation itself breaks down (recorded as a test failure upstream).
    """
    signal = control_signal(traj, grid, problem.T)

    def rhs(t, x):
        u, z = signal(t)
        return problem.dynamics(x, z, u, t)

    dense = np.linspace(0.0, problem.T, max(cfg.dense_samples, 2))
    samples = np.unique(np.concatenate([traj.times, dense]))
    try:
        res = propagate(IvpSetup(rhs=rhs, t0=0.0, tf=problem.T,
                                 x0=problem.initial_state,
                                 rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                 sample_times=samples))
    except (MaxStepsError, StepUnderflowError, EvaluationError,
            DomainError, FloatingPointError):
        return None
    node_idx = np.searchsorted(res.times, traj.times)
    dense_idx = np.searchsorted(res.times, dense)
    return res.states[node_idx], res.times[dense_idx], res.states[dense_idx]


def verify_feasibility(traj: Trajectory, problem: OcpProblem, grid: Grid,
                       cfg: VvConfig = VvConfig()) -> VvReport:
    """Propagation-based feasibility test; returns a partial report.

    The state band compares propagated and nodal states at node times; the
    path band evaluates the algebraic constraint along the propagated
    trajectory at the dense sample times.
    """
    report = VvReport()
    report.thresholds["state_deviation"] = cfg.state_deviation_tol
    prop = _propagated(traj, problem, grid, cfg)
    if prop is None:
        report.propagation_ok = False
        report.passes["state_deviation"] = False
        if problem.nh > 0:
            report.thresholds["path_residual"] = cfg.path_residual_tol
            report.passes["path_residual"] = False
        return report

    node_states, dense_t, dense_x = prop
    report.propagation_ok = True
    dev = np.abs(node_states - traj.states)
    report.state_deviation = dev.max(axis=0)
    report.max_state_deviation = float(dev.max())
    report.passes["state_deviation"] = report.max_state_deviation <= cfg.state_deviation_tol

    if problem.nh > 0:
        signal = control_signal(traj, grid, problem.T)
        resid = np.empty((len(dense_t), problem.nh))
        for i, t in enumerate(dense_t):
            u, z = signal(t)
            h = np.atleast_1d(problem.path(dense_x[i], z, u, t))
            resid[i] = h - problem.h_lower
        report.max_path_residual = float(np.abs(resid).max())
        report.thresholds["path_residual"] = cfg.path_residual_tol
        report.passes["path_residual"] = report.max_path_residual <= cfg.path_residual_tol
    return report


def hamiltonian_trace(traj: Trajectory, duals: DualTrajectory,
                      problem: OcpProblem) -> np.ndarray:
    """Running cost plus duals against dynamics and path values, per node."""
    n = len(traj.times)
    out = np.empty(n)
    for j in range(n):
        x, z, u, t = traj.states[j], traj.algebraic[j], traj.controls[j], traj.times[j]
        val = problem.running_cost(x, z, u, t) + duals.costates[j] @ problem.dynamics(x, z, u, t)
        if problem.nh > 0:
            val += duals.path_covectors[j] @ np.atleast_1d(problem.path(x, z, u, t))
        out[j] = val
    return out


def evaluate_nc(traj: Trajectory, duals: DualTrajectory, grid: Grid,
                problem: OcpProblem, cfg: VvConfig = VvConfig()):
    """Necessary-condition residuals with pass verdicts.

    Returns (NcReport, passes, thresholds).  The adjoint residual is
    tested over all nodes except the initial one: the initial state is
    fixed, so the duals at that node absorb the free initial-condition
    multipliers and are reported without being tested.
    """
    passes, thresholds = {}, {}
    pend: Optional[PendulumParams] = problem.params if problem.name == "pendulum" else None

    lam = duals.costates
    lam_scale = float(np.abs(lam).max()) if lam.size else 0.0

    # Control stationarity.
    if pend is not None:
        r_u = covector.residual_stationarity_u(traj, duals, pend)
        u_scale = max(float(np.abs(traj.controls).max()), 1e-12)
        stationarity_u = float(np.abs(r_u).max())
        thresholds["stationarity_u"] = cfg.nc_rel_tol * u_scale
        passes["stationarity_u"] = stationarity_u <= thresholds["stationarity_u"]
        r_x5 = covector.residual_stationarity_x5(traj, duals)
        x5_scale = max(float(np.abs(lam[:, 1] * traj.states[:, 0]).max()), 1e-12)
        stationarity_x5 = float(np.abs(r_x5).max())
        thresholds["stationarity_x5"] = cfg.nc_rel_tol * x5_scale
        passes["stationarity_x5"] = stationarity_x5 <= thresholds["stationarity_x5"]
    else:
        r_u = covector.residual_stationarity_control(traj, duals, problem)
        u_scale = max(float(np.abs(r_u - r_u.mean(axis=0)).max()), lam_scale, 1e-12)
        stationarity_u = float(np.abs(r_u).max())
        thresholds["stationarity_u"] = cfg.nc_rel_tol * u_scale
        passes["stationarity_u"] = stationarity_u <= thresholds["stationarity_u"]
        stationarity_x5 = None

    # Adjoint equations, initial node reported but not tested.
    r_adj = covector.residual_adjoint(traj, duals, grid, problem)
    adjoint = np.abs(r_adj[1:]).max(axis=0)
    thresholds["adjoint"] = cfg.nc_rel_tol * max(lam_scale, 1e-12)
    passes["adjoint"] = bool(np.all(adjoint <= thresholds["adjoint"]))

    # Terminal transversality applies only with a free terminal state.
    terminal = np.abs(lam[-1])
    if len(problem.terminal) == 0:
        thresholds["transversality"] = cfg.nc_rel_tol * max(lam_scale, 1e-12)
        ok, _ = covector.check_transversality(duals, thresholds["transversality"])
        passes["transversality"] = ok

    # Complementarity (vacuous for the equality constraints used here).
    comp_ok = True
    if problem.nh > 0:
        for k in range(problem.nh):
            h_vals = np.array([
                np.atleast_1d(problem.path(traj.states[j], traj.algebraic[j],
                                           traj.controls[j], traj.times[j]))[k]
                for j in range(len(traj.times))
            ])
            verdicts = covector.check_complementarity(
                h_vals, duals.path_covectors[:, k],
                problem.h_lower[k], problem.h_upper[k], cfg.nc_rel_tol)
            comp_ok = comp_ok and bool(np.all(verdicts))
        passes["complementarity"] = comp_ok

    nc = NcReport(
        stationarity_u=stationarity_u,
        stationarity_x5=stationarity_x5,
        adjoint=adjoint,
        terminal_costates=terminal,
        complementarity_ok=comp_ok,
        hamiltonian=hamiltonian_trace(traj, duals, problem),
    )
    return nc, passes, thresholds


def run_oracle(p: PendulumParams, grid: Grid, max_iter: int = 1500):
    """Solve the minimal-coordinate pendulum and lift it onto the circle.

    Returns (solution, lifted Trajectory).  The solve starts from the
    tracking target (angle = t + alpha, unit rate), which is problem data,
    so the oracle stays independent of any solution it is compared
    against.  The lifted trajectory satisfies the length constraint
    identically by construction.
    """
    problem = reduced_pendulum_problem(p)
    nlp = transcribe(problem, grid)
    V = np.zeros((grid.n_nodes, 3))
    V[:, 0] = nlp.times + p.alpha
    V[:, 1] = 1.0
    sol = solve(nlp, V.ravel(), SolverConfig(max_iter=max_iter))
    reduced = nlp.trajectory(sol.primal)

    n = grid.n_nodes
    states = np.empty((n, 4))
    algebraic = np.empty((n, 1))
    for j in range(n):
        states[j], algebraic[j, 0] = lift_reduced_state(
            reduced.states[j, 0], reduced.states[j, 1], p)
    lifted = Trajectory(times=reduced.times.copy(), states=states,
                        algebraic=algebraic, controls=reduced.controls.copy())
    return sol, lifted


def full_report(sol: NlpSolution, nlp: NlpProblem, duals: Optional[DualTrajectory],
                cfg: VvConfig = VvConfig()) -> VvReport:
    """Aggregate feasibility, necessary conditions and the cost oracle.

    Never raises on a bad solution: a failed propagation or an unconverged
    solve turns into failed entries of the report instead.
    """
    problem, grid = nlp.problem, nlp.grid
    traj = nlp.trajectory(sol.primal)

    report = verify_feasibility(traj, problem, grid, cfg)
    report.solver_status = sol.status
    report.objective = float(sol.objective)
    report.passes["solver_converged"] = sol.success

    if duals is not None:
        try:
            nc, nc_passes, nc_thresholds = evaluate_nc(traj, duals, grid, problem, cfg)
            report.nc = nc
            report.passes.update(nc_passes)
            report.thresholds.update(nc_thresholds)
        except (EvaluationError, FloatingPointError):
            report.passes["necessary_conditions"] = False

    if cfg.include_oracle and problem.name == "pendulum":
        report.thresholds["oracle_cost"] = cfg.oracle_cost_rtol
        report.thresholds["oracle_states"] = cfg.oracle_state_tol
        try:
            osol, lifted = run_oracle(problem.params, grid, cfg.oracle_max_iter)
        except (EvaluationError, FloatingPointError) as exc:
            report.oracle_status = f"oracle failed: {exc}"
            report.passes["oracle_cost"] = False
            report.passes["oracle_states"] = False
            return report
        report.oracle_status = osol.status
        report.oracle_cost = float(osol.objective)
        report.oracle_cost_gap = abs(sol.objective - osol.objective) / max(
            abs(osol.objective), 1e-300)
        gap = np.abs(lifted.states[:, [0, 2]] - traj.states[:, [0, 2]])
        report.oracle_state_gap = float(gap.max())
        report.passes["oracle_cost"] = (osol.success
                                        and report.oracle_cost_gap <= cfg.oracle_cost_rtol)
        report.passes["oracle_states"] = (osol.success
                                          and report.oracle_state_gap <= cfg.oracle_state_tol)
    return report
