"""Optimal control problem models.

A problem is a set of pointwise callables over (x, z, u, t): differential
dynamics, algebraic/path constraints, and a running cost, together with a
fixed horizon and boundary data.  The algebraic variable z is a
control-like decision channel with no differential equation of its own;
for the constrained pendulum it carries the internal rod force.

Three concrete instances live here:

* the Cartesian pendulum with its length constraint (four differential
  states, one algebraic variable, one control, one equality path
  constraint),
* the same physics in minimal coordinates (angle and angular rate, no
  constraint), used as an independent cost oracle,
* a scalar linear-quadratic regression problem with a known closed-form
  optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class EvaluationError(RuntimeError):
    """A problem function hit a non-finite value.

    ``node`` identifies the collocation node when the failure occurs
    inside a transcribed evaluation, else None.
    """

    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


class InconsistentStateError(ValueError):
    """State does not satisfy the constraint level(s) a formula assumes."""


@dataclass(frozen=True)
class PendulumParams:
    """Physical and cost parameters of the constrained pendulum problem.

    a : tangential damping (1/s)
    c : control-effort weight
    d : tracking weight
    g : gravitational acceleration (m/s^2)
    L : rod length (m)
    alpha : phase lead of the tracking target (rad)
    T : horizon (s)
    """

    a: float = 0.5
    c: float = 1.0
    d: float = 100.0
    g: float = 4.0
    L: float = 2.0
    alpha: float = 0.0
    T: float = 2.2

    def __post_init__(self):
        if self.L <= 0 or self.c <= 0 or self.d < 0 or self.T <= 0:
            raise ValueError("require L > 0, c > 0, d >= 0, T > 0")


@dataclass(frozen=True)
class OcpProblem:
    """Fixed-horizon optimal control problem evaluated one node at a time.

    ``dynamics(x, z, u, t)`` returns xdot in R^nx.
    ``path(x, z, u, t)`` returns R^nh path-constraint values with bounds
    ``h_lower <= h <= h_upper`` (equal bounds mean an equality).
    ``running_cost(x, z, u, t)`` is the integrand of the cost functional.
    ``terminal`` lists (state index, value) pairs pinned at t = T.

    The *_jac / cost_grad callables are optional analytic derivatives;
    when absent the transcription falls back to finite differences.
      dynamics_jac -> (df/dx, df/dz, df/du)
      path_jac     -> (dh/dx, dh/dz, dh/du)
      cost_grad    -> (dl/dx, dl/dz, dl/du)
    """

    name: str
    nx: int
    na: int
    nu: int
    nh: int
    T: float
    dynamics: Callable
    running_cost: Callable
    initial_state: np.ndarray
    path: Optional[Callable] = None
    h_lower: Optional[np.ndarray] = None
    h_upper: Optional[np.ndarray] = None
    terminal: Sequence[tuple[int, float]] = field(default_factory=tuple)
    dynamics_jac: Optional[Callable] = None
    path_jac: Optional[Callable] = None
    cost_grad: Optional[Callable] = None
    params: object = None  # physical parameter bundle of the concrete instance

    def __post_init__(self):
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=float))
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        if len(self.initial_state) != self.nx:
            raise ValueError("initial_state length does not match nx")
        if self.nh > 0:
            hl = np.asarray(self.h_lower, dtype=float)
            hu = np.asarray(self.h_upper, dtype=float)
            if np.any(hl > hu):
                raise ValueError("path lower bounds exceed upper bounds")
            object.__setattr__(self, "h_lower", hl)
            object.__setattr__(self, "h_upper", hu)
            h0 = np.atleast_1d(self.path(self.initial_state, np.zeros(self.na), np.zeros(self.nu), 0.0))
            eq = hl == hu
            if np.any(np.abs(h0[eq] - hl[eq]) > 1e-12):
                raise ValueError("initial state violates an equality path constraint at t=0")

    @property
    def n_boundary(self) -> int:
        return self.nx + len(self.terminal)


# ---------------------------------------------------------------------------
# Constrained Cartesian pendulum
# ---------------------------------------------------------------------------

def pendulum_dynamics(x, x5: float, u: float, t: float, p: PendulumParams) -> np.ndarray:
    """Right-hand side of the first-order pendulum system.

    States are (x1, x2, x3, x4) = (x, xdot, y, ydot); x5 is the rod-force
    multiplier acting along the position vector:

        x1' = x2
        x2' = -x5 x1 - a x2 + u x3
        x3' = x4
        x4' = -x5 x3 - a x4 - g - u x1
    """
    x = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(x)) and math.isfinite(x5) and math.isfinite(u)):
        raise EvaluationError("non-finite input to pendulum dynamics")
    x1, x2, x3, x4 = x
    return np.array([
        x2,
        -x5 * x1 - p.a * x2 + u * x3,
        x4,
        -x5 * x3 - p.a * x4 - p.g - u * x1,
    ])


def pendulum_path(x, p: PendulumParams) -> float:
    """Rod-length constraint residual x1^2 + x3^2 - L^2."""
    return x[0] ** 2 + x[2] ** 2 - p.L**2


def pendulum_cost(x, u: float, t: float, p: PendulumParams) -> float:
    """Quadratic running cost: control effort plus tracking error.

    The target runs around the circle with a phase lead of alpha:
    (L sin(t + alpha), L cos(t + alpha)).
    """
    ex = x[0] - p.L * math.sin(t + p.alpha)
    ey = x[2] - p.L * math.cos(t + p.alpha)
    return p.c * u**2 + p.d * (ex**2 + ey**2)


def consistent_multiplier(x, p: PendulumParams) -> float:
    """Rod force that keeps the twice-differentiated length constraint at zero.

    Valid only on states satisfying the constraint and its first time
    derivative (tangency x1 x2 + x3 x4 = 0); differentiating
    x1^2 + x3^2 - L^2 twice along the dynamics and solving for x5 gives

        x5 = (x2^2 + x4^2 - g x3) / L^2.
    """
    x = np.asarray(x, dtype=float)
    if abs(pendulum_path(x, p)) > 1e-9 or abs(x[0] * x[1] + x[2] * x[3]) > 1e-9:
        raise InconsistentStateError(
            "state violates the length constraint or its tangency condition"
        )
    return (x[1] ** 2 + x[3] ** 2 - p.g * x[2]) / p.L**2


def pendulum_initial_state(p: PendulumParams) -> np.ndarray:
    """Bob at rest on top of the circle: (x, xdot, y, ydot) = (0, 0, L, 0).

    This is the unique rest point at x = 0 that satisfies the length
    constraint together with its first and second time derivatives
    (tangency holds, and x5(0) = -g/L closes the force balance).
    """
    return np.array([0.0, 0.0, p.L, 0.0])


def pendulum_problem(p: PendulumParams) -> OcpProblem:
    """The constrained pendulum as an OcpProblem with analytic derivatives."""

    def dyn(x, z, u, t):
        return pendulum_dynamics(x, z[0], u[0], t, p)

    def path(x, z, u, t):
        return np.array([pendulum_path(x, p)])

    def cost(x, z, u, t):
        return pendulum_cost(x, u[0], t, p)

    def dyn_jac(x, z, u, t):
        x1, x2, x3, x4 = x
        fx = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [-z[0], -p.a, u[0], 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-u[0], 0.0, -z[0], -p.a],
        ])
        fz = np.array([[0.0], [-x1], [0.0], [-x3]])
        fu = np.array([[0.0], [x3], [0.0], [-x1]])
        return fx, fz, fu

    def path_jac(x, z, u, t):
        hx = np.array([[2.0 * x[0], 0.0, 2.0 * x[2], 0.0]])
        return hx, np.zeros((1, 1)), np.zeros((1, 1))

    def cost_grad(x, z, u, t):
        gx = np.array([
            2.0 * p.d * (x[0] - p.L * math.sin(t + p.alpha)),
            0.0,
            2.0 * p.d * (x[2] - p.L * math.cos(t + p.alpha)),
            0.0,
        ])
        return gx, np.zeros(1), np.array([2.0 * p.c * u[0]])

    return OcpProblem(
        name="pendulum",
        nx=4, na=1, nu=1, nh=1,
        T=p.T,
        dynamics=dyn,
        path=path,
        h_lower=np.zeros(1),
        h_upper=np.zeros(1),
        running_cost=cost,
        initial_state=pendulum_initial_state(p),
        dynamics_jac=dyn_jac,
        path_jac=path_jac,
        cost_grad=cost_grad,
        params=p,
    )


# ---------------------------------------------------------------------------
# Minimal-coordinate (angle) form: the cost oracle
# ---------------------------------------------------------------------------

def reduced_pendulum(phi: float, phidot: float, u: float, t: float,
                     p: PendulumParams) -> tuple[float, float]:
    """Angle form of the pendulum: returns (phi_ddot, running cost).

    With x = L sin(phi), y = L cos(phi), projecting the Cartesian force
    balance onto the unit tangent (cos(phi), -sin(phi)) eliminates the rod
    force and leaves

        phi_ddot = -a phidot + u + (g/L) sin(phi).

    Expanding the tracking error on the circle collapses the two quadratic
    target terms into a single cosine of the phase error:

        cost = c u^2 + 2 d L^2 (1 - cos(phi - t - alpha)).
    """
    phidd = -p.a * phidot + u + (p.g / p.L) * math.sin(phi)
    cost = p.c * u**2 + 2.0 * p.d * p.L**2 * (1.0 - math.cos(phi - t - p.alpha))
    return phidd, cost


def lift_reduced_state(phi: float, phidot: float, p: PendulumParams) -> tuple[np.ndarray, float]:
    """Map an angle-form state onto the Cartesian circle.

    Returns the four Cartesian states and the rod force
    x5 = phidot^2 - (g/L) cos(phi) that keeps the lifted motion on the
    constraint manifold.
    """
    s, c = math.sin(phi), math.cos(phi)
    x = np.array([p.L * s, p.L * phidot * c, p.L * c, -p.L * phidot * s])
    x5 = phidot**2 - (p.g / p.L) * c
    return x, x5


def reduced_pendulum_problem(p: PendulumParams) -> OcpProblem:
    """Minimal-coordinate pendulum as an unconstrained OcpProblem."""

    def dyn(x, z, u, t):
        phidd, _ = reduced_pendulum(x[0], x[1], u[0], t, p)
        return np.array([x[1], phidd])

    def cost(x, z, u, t):
        _, c = reduced_pendulum(x[0], x[1], u[0], t, p)
        return c

    def dyn_jac(x, z, u, t):
        fx = np.array([[0.0, 1.0], [(p.g / p.L) * math.cos(x[0]), -p.a]])
        return fx, np.zeros((2, 0)), np.array([[0.0], [1.0]])

    def cost_grad(x, z, u, t):
        gx = np.array([2.0 * p.d * p.L**2 * math.sin(x[0] - t - p.alpha), 0.0])
        return gx, np.zeros(0), np.array([2.0 * p.c * u[0]])

    return OcpProblem(
        name="reduced-pendulum",
        nx=2, na=0, nu=1, nh=0,
        T=p.T,
        dynamics=dyn,
        running_cost=cost,
        initial_state=np.zeros(2),
        dynamics_jac=dyn_jac,
        cost_grad=cost_grad,
        params=p,
    )


# ---------------------------------------------------------------------------
# Linear-quadratic regression problem
# ---------------------------------------------------------------------------

def lq_problem(T: float = 1.0, b: float = 1.0) -> OcpProblem:
    """min integral of u^2 subject to xdot = u, x(0) = 0, x(T) = b.

    Closed form: u* = b/T constant, J* = b^2/T, costate = -2b/T.
    Used as an analytic anchor for the solver and the covector mapping.
    """
    return OcpProblem(
        name="lq",
        nx=1, na=0, nu=1, nh=0,
        T=T,
        dynamics=lambda x, z, u, t: np.array([u[0]]),
        running_cost=lambda x, z, u, t: u[0] ** 2,
        initial_state=np.zeros(1),
        terminal=((0, b),),
        dynamics_jac=lambda x, z, u, t: (np.zeros((1, 1)), np.zeros((1, 0)), np.ones((1, 1))),
        cost_grad=lambda x, z, u, t: (np.zeros(1), np.zeros(0), np.array([2.0 * u[0]])),
    )
