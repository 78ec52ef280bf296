"""Dense equality-constrained SQP with an l1 merit line search.

Each iteration solves the regularized KKT system

    [[H + dx*I, A^T], [A, -dc*I]] [p; dlam] = [-grad_L; -c]

where H is a damped BFGS approximation of the Lagrangian Hessian.  The
right-hand side carries the Lagrangian gradient at the current multiplier
estimate, so the multiplier solve returns an increment and the iteration's
fixed point is an exact KKT point even though dc stays on (a plain
[-grad_f; -c] right-hand side stalls at ||c|| ~ dc*||lam||, which would
never reach the feasibility tolerance).  The dual regularization is always
active because pseudospectral transcriptions of constrained problems carry
structurally dependent rows.

Sign convention throughout: Lagrangian = f + lam^T c, so stationary
multipliers satisfy grad_f + A^T lam = 0.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .transcribe import NlpProblem
from .ocp import EvaluationError


class SingularKktError(RuntimeError):
    """KKT matrix could not be factorized even at maximum regularization."""


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 500
    tol_stationarity: float = 1e-8
    tol_feasibility: float = 1e-9
    delta_x: float = 1e-8
    delta_c: float = 1e-8
    merit_growth: float = 2.0
    backtrack: float = 0.5
    min_step: float = 1e-12
    verbose: bool = False
    record_history: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for name in ("tol_stationarity", "tol_feasibility", "delta_x", "delta_c", "min_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class NlpSolution:
    primal: np.ndarray
    multipliers: np.ndarray
    objective: float
    iterations: int
    status: str
    stationarity: float
    feasibility: float
    history: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == "success"


def kkt_solve(H, A, grad, c, delta_x, delta_c):
    """Solve the regularized saddle system; returns (step, multipliers).

    Uses dense LU with partial pivoting plus one pass of iterative
    refinement.  The solve is accepted when the backward error
    ||K s - r|| / (||K|| ||s|| + ||r||) is at most 1e-10; otherwise both
    regularizations are escalated by factors of 10 up to 1e-2 before
    giving up.
    """
    H = np.asarray(H, dtype=float)
    A = np.asarray(A, dtype=float)
    grad = np.asarray(grad, dtype=float)
    c = np.asarray(c, dtype=float)
    n, m = len(grad), len(c)
    rhs = np.concatenate([-grad, -c])
    dx, dc = delta_x, delta_c
    while True:
        K = np.zeros((n + m, n + m))
        K[:n, :n] = H + dx * np.eye(n)
        if m:
            K[:n, n:] = A.T
            K[n:, :n] = A
            K[n:, n:] = -dc * np.eye(m)
        try:
            sol = np.linalg.solve(K, rhs)
            sol += np.linalg.solve(K, rhs - K @ sol)
        except np.linalg.LinAlgError:
            sol = None
        if sol is not None and np.all(np.isfinite(sol)):
            norm_K = np.max(np.sum(np.abs(K), axis=1))
            backward = (np.max(np.abs(K @ sol - rhs))
                        / (norm_K * np.max(np.abs(sol)) + np.max(np.abs(rhs)) + 1e-300))
            if backward <= 1e-10:
                return sol[:n], sol[n:]
        if dx >= 1e-2 or dc >= 1e-2:
            raise SingularKktError("KKT factorization failed at maximum regularization")
        dx, dc = dx * 10.0, dc * 10.0


def _l1(c: np.ndarray) -> float:
    return float(np.sum(np.abs(c))) if c.size else 0.0


def _inf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def solve(nlp: NlpProblem, start: np.ndarray, cfg: SolverConfig = SolverConfig()) -> NlpSolution:
    """Run the SQP iteration from ``start``; always returns the best iterate.

    Status is one of ``success``, ``max_iterations``, ``line_search_failure``,
    ``singular_kkt`` or ``stalled``.  Success guarantees
    ||c||_inf <= tol_feasibility and ||grad_L||_inf <= tol_stationarity at
    the reported multipliers.
    """
    x = np.asarray(start, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise EvaluationError("non-finite start vector")
    n, m = nlp.n_vars, nlp.n_cons
    lam = np.zeros(m)
    H = np.eye(n)
    rho = 1.0
    first_update = True

    f = nlp.objective(x)
    g = nlp.gradient(x)
    c = np.atleast_1d(nlp.constraints(x)) if m else np.zeros(0)
    A = nlp.jacobian(x).reshape(m, n) if m else np.zeros((0, n))

    best = (np.inf, np.inf)
    best_state = (x.copy(), lam.copy(), f, _inf(g), _inf(c))
    history = []
    status = "max_iterations"
    it = 0

    def consider_best(feas, fval, stat):
        nonlocal best, best_state
        if (feas < best[0] - 1e-12) or (feas <= best[0] + 1e-12 and fval < best[1]):
            best = (feas, fval)
            best_state = (x.copy(), lam.copy(), fval, stat, feas)

    for it in range(1, cfg.max_iter + 1):
        grad_L = g + (A.T @ lam if m else 0.0)
        stat = _inf(grad_L)
        feas = _inf(c)
        consider_best(feas, f, stat)
        if cfg.record_history:
            history.append({"iter": it, "objective": f, "feasibility": feas,
                            "stationarity": stat, "rho": rho})
        if cfg.verbose:
            print(f"[sqp] it={it:4d} f={f: .8e} |c|={feas:.3e} "
                  f"|gL|={stat:.3e} rho={rho:.2e}", file=sys.stderr)
        if feas <= cfg.tol_feasibility and stat <= cfg.tol_stationarity:
            status = "success"
            break

        # The right-hand side carries the Lagrangian gradient at the current
        # multipliers, so dlam is an increment and the iteration's fixed
        # point satisfies c = 0 exactly; a plain [-grad_f; -c] system would
        # stall at ||c|| ~ delta_c * ||lam|| and never reach the feasibility
        # tolerance with the dual regularization always on.
        try:
            p, dlam = kkt_solve(H, A, grad_L, c, cfg.delta_x, cfg.delta_c)
        except SingularKktError:
            status = "singular_kkt"
            break
        lam_new = lam + dlam

        if _inf(p) <= 1e-15 * max(1.0, _inf(x)):
            status = "stalled"
            break

        # The merit penalty must dominate the multiplier estimate for the
        # step to be a descent direction of the l1 merit function.
        target = 1.01 * _inf(lam_new) + 1e-6
        if rho < target:
            rho = max(cfg.merit_growth * rho, target)
        elif rho > 100.0 * target:  # release a stale penalty once duals settle
            rho = 10.0 * target

        phi0 = f + rho * _l1(c)
        dir_deriv = float(g @ p) - rho * _l1(c)
        slack = 1e-13 * (1.0 + abs(phi0))  # merit comparisons are round-off limited

        def merit_at(x_t):
            try:
                f_t = nlp.objective(x_t)
                c_t = np.atleast_1d(nlp.constraints(x_t)) if m else np.zeros(0)
            except EvaluationError:
                return None
            if not (np.isfinite(f_t) and np.all(np.isfinite(c_t))):
                return None
            return f_t, c_t, f_t + rho * _l1(c_t)

        alpha = 1.0
        accepted = False
        trial = None
        while alpha >= cfg.min_step:
            x_t = x + alpha * p
            trial = merit_at(x_t)
            if trial is not None and trial[2] <= phi0 + 1e-4 * alpha * dir_deriv + slack:
                accepted = True
                break
            if alpha == 1.0 and trial is not None:
                # Second-order correction: a constraint-restoration step at
                # the full trial point counters the curvature-induced merit
                # increase that otherwise forces tiny step sizes near the
                # constraint manifold (Maratos effect).
                try:
                    d, _ = kkt_solve(H, A, np.zeros(n), trial[1], cfg.delta_x, cfg.delta_c)
                except SingularKktError:
                    d = None
                if d is not None:
                    soc = merit_at(x + p + d)
                    if soc is not None and soc[2] <= phi0 + 1e-4 * dir_deriv + slack:
                        x_t = x + p + d
                        trial = soc
                        accepted = True
                        break
            alpha *= cfg.backtrack
        if not accepted:
            status = "line_search_failure"
            break
        f_t, c_t = trial[0], trial[1]
        if cfg.verbose:
            print(f"[sqp]           step alpha={alpha:.3e}", file=sys.stderr)
        if cfg.record_history:
            history[-1]["alpha"] = alpha
            history[-1]["merit_before"] = phi0
            history[-1]["merit_after"] = trial[2]

        g_t = nlp.gradient(x_t)
        A_t = nlp.jacobian(x_t).reshape(m, n) if m else A

        # Damped BFGS on the Lagrangian, with the curvature pair evaluated
        # at the new multipliers on both ends.
        s = x_t - x
        y = (g_t + (A_t.T @ lam_new if m else 0.0)) - (g + (A.T @ lam_new if m else 0.0))
        if _inf(s) <= 1e-13 * max(1.0, _inf(x)):
            pass  # step carries no curvature information; keep H
        else:
            if first_update:
                sy_raw = float(s @ y)
                yy = float(y @ y)
                if np.isfinite(sy_raw) and sy_raw > 0 and np.isfinite(yy) and yy > 0:
                    H = (yy / sy_raw) * np.eye(n)  # Shanno-Phua sizing
                first_update = False
            Hs = H @ s
            sHs = float(s @ Hs)
            sy = float(s @ y)
            if not np.isfinite(sHs) or sHs <= 0.0:
                H = np.eye(n)
            else:
                if sy < 0.2 * sHs:  # Powell damping keeps H positive definite
                    theta = 0.8 * sHs / (sHs - sy)
                    y = theta * y + (1.0 - theta) * Hs
                    sy = float(s @ y)
                if sy <= 1e-14 * sHs or not np.isfinite(sy):
                    H = np.eye(n)
                else:
                    H = H - np.outer(Hs, Hs) / sHs + np.outer(y, y) / sy
                    H = 0.5 * (H + H.T)

        x, f, g, c, A, lam = x_t, f_t, g_t, c_t, A_t, lam_new

    grad_L = g + (A.T @ lam if m else 0.0)
    consider_best(_inf(c), f, _inf(grad_L))

    if status == "success":
        primal, mult, fval, stat, feas = x, lam, f, _inf(grad_L), _inf(c)
    else:
        primal, mult, fval, stat, feas = best_state
    return NlpSolution(primal=primal, multipliers=mult, objective=fval,
                       iterations=it, status=status, stationarity=stat,
                       feasibility=feas, history=history)
