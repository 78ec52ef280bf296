"""LGL pseudospectral transcription of an OcpProblem into a dense NLP.

Decision vector: nodal values of every channel, node-major, each node
holding [x, z, u].  Constraints, in order:

* defect rows  D X - (T/2) f(X_j, Z_j, U_j, t_j) = 0 at every node,
* path rows    h(X_j, Z_j, U_j, t_j) - h_eq = 0 at every node,
* boundary rows: X_0 - x(0), then any pinned terminal states.

Collocating the defects at all N+1 nodes (including the node carrying the
initial condition) leaves a mildly redundant row set; the solver's dual
regularization is responsible for tolerating it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import Grid
from .ocp import EvaluationError, OcpProblem


class ConfigurationError(ValueError):
    """Problem and grid cannot be combined as requested."""


@dataclass(frozen=True)
class ChannelScaling:
    """Affine change of variables per channel: physical = offset + gain * scaled."""

    offset: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        if np.any(self.gain == 0.0):
            raise ConfigurationError("scaling gains must be nonzero")

    @classmethod
    def identity(cls, n_channels: int) -> "ChannelScaling":
        return cls(offset=np.zeros(n_channels), gain=np.ones(n_channels))

    def to_physical(self, V: np.ndarray) -> np.ndarray:
        return self.offset[None, :] + self.gain[None, :] * V

    def to_scaled(self, V: np.ndarray) -> np.ndarray:
        return (V - self.offset[None, :]) / self.gain[None, :]


@dataclass(frozen=True)
class VariableLayout:
    """Maps (node, channel) to a flat decision-vector index and back."""

    n_nodes: int
    nx: int
    na: int
    nu: int

    @property
    def n_channels(self) -> int:
        return self.nx + self.na + self.nu

    @property
    def n_vars(self) -> int:
        return self.n_nodes * self.n_channels

    def flat_index(self, node: int, channel: int) -> int:
        return node * self.n_channels + channel

    def unflatten(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float).reshape(self.n_nodes, self.n_channels)

    def flatten(self, V: np.ndarray) -> np.ndarray:
        return np.asarray(V, dtype=float).reshape(-1)

    def split(self, V: np.ndarray):
        """Node-major matrix -> (X, Z, U) views."""
        return V[:, : self.nx], V[:, self.nx : self.nx + self.na], V[:, self.nx + self.na :]


@dataclass(frozen=True)
class RowLayout:
    """Slices and tags for the stacked constraint vector."""

    n_nodes: int
    nx: int
    nh: int
    n_terminal: int

    @property
    def defect(self) -> slice:
        return slice(0, self.n_nodes * self.nx)

    @property
    def path(self) -> slice:
        base = self.n_nodes * self.nx
        return slice(base, base + self.n_nodes * self.nh)

    @property
    def boundary(self) -> slice:
        base = self.n_nodes * (self.nx + self.nh)
        return slice(base, base + self.nx + self.n_terminal)

    @property
    def n_rows(self) -> int:
        return self.boundary.stop

    def tag(self, row: int) -> str:
        """Human-readable identity of a constraint row."""
        if row < self.defect.stop:
            return f"defect(node={row // self.nx}, state={row % self.nx})"
        if row < self.path.stop:
            r = row - self.path.start
            return f"path(node={r // self.nh}, k={r % self.nh})"
        r = row - self.boundary.start
        return f"boundary({'initial' if r < self.nx else 'terminal'}, {r})"


@dataclass
class Trajectory:
    """Nodal solution in physical units."""

    times: np.ndarray
    states: np.ndarray
    algebraic: np.ndarray
    controls: np.ndarray


@dataclass
class NlpProblem:
    """Dense equality-constrained NLP with layout metadata."""

    n_vars: int
    n_cons: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    layout: Optional[VariableLayout] = None
    rows: Optional[RowLayout] = None
    times: Optional[np.ndarray] = None
    problem: Optional[OcpProblem] = None
    grid: Optional[Grid] = None
    scaling: Optional[ChannelScaling] = None

    def trajectory(self, v: np.ndarray) -> Trajectory:
        """Unpack a decision vector into a physical-units Trajectory."""
        V = self.scaling.to_physical(self.layout.unflatten(v))
        X, Z, U = self.layout.split(V)
        return Trajectory(times=self.times.copy(), states=X.copy(),
                          algebraic=Z.copy(), controls=U.copy())


FD_STEP = 1e-6


def _fd_steps(v: np.ndarray) -> np.ndarray:
    return np.maximum(FD_STEP, FD_STEP * np.abs(v))


def fd_gradient(fun: Callable, v: np.ndarray) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    v = np.asarray(v, dtype=float)
    h = _fd_steps(v)
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h[i]
        g[i] = (fun(v + e) - fun(v - e)) / (2 * h[i])
    return g


def fd_jacobian(fun: Callable, v: np.ndarray) -> np.ndarray:
    """Central finite-difference Jacobian of a vector function."""
    v = np.asarray(v, dtype=float)
    h = _fd_steps(v)
    cols = []
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h[i]
        cols.append((np.atleast_1d(fun(v + e)) - np.atleast_1d(fun(v - e))) / (2 * h[i]))
    return np.column_stack(cols)


def make_nlp(objective, constraints, n_vars, n_cons,
             gradient=None, jacobian=None) -> NlpProblem:
    """Wrap plain callables into an NlpProblem, defaulting to FD derivatives."""
    return NlpProblem(
        n_vars=n_vars,
        n_cons=n_cons,
        objective=objective,
        constraints=constraints,
        gradient=gradient or (lambda v: fd_gradient(objective, v)),
        jacobian=jacobian or (lambda v: fd_jacobian(constraints, v)),
    )


def _node_jacobians(problem: OcpProblem, x, z, u, t):
    """Per-node derivative blocks, analytic when the problem provides them."""
    if problem.dynamics_jac is not None:
        fx, fz, fu = problem.dynamics_jac(x, z, u, t)
    else:
        def f_of(w):
            return problem.dynamics(w[: problem.nx],
                                    w[problem.nx : problem.nx + problem.na],
                                    w[problem.nx + problem.na :], t)
        J = fd_jacobian(f_of, np.concatenate([x, z, u]))
        fx = J[:, : problem.nx]
        fz = J[:, problem.nx : problem.nx + problem.na]
        fu = J[:, problem.nx + problem.na :]
    return np.hstack([fx, fz, fu])


def _node_path_jacobian(problem: OcpProblem, x, z, u, t):
    if problem.path_jac is not None:
        hx, hz, hu = problem.path_jac(x, z, u, t)
        return np.hstack([hx, hz, hu])
    def h_of(w):
        return problem.path(w[: problem.nx],
                            w[problem.nx : problem.nx + problem.na],
                            w[problem.nx + problem.na :], t)
    return fd_jacobian(h_of, np.concatenate([x, z, u]))


def _node_cost_gradient(problem: OcpProblem, x, z, u, t):
    if problem.cost_grad is not None:
        gx, gz, gu = problem.cost_grad(x, z, u, t)
        return np.concatenate([gx, gz, gu])
    def l_of(w):
        return problem.running_cost(w[: problem.nx],
                                    w[problem.nx : problem.nx + problem.na],
                                    w[problem.nx + problem.na :], t)
    return fd_gradient(l_of, np.concatenate([x, z, u]))


def transcribe(problem: OcpProblem, grid: Grid,
               scaling: Optional[ChannelScaling] = None) -> NlpProblem:
    """Collocate ``problem`` on ``grid`` and return the resulting NLP.

    The objective is the LGL quadrature of the running cost scaled by T/2;
    the physical node times are t_j = T (tau_j + 1) / 2.
    """
    if grid.order < 2:
        raise ConfigurationError("transcription needs a grid of degree >= 2")
    if problem.nh > 0 and np.any(problem.h_lower != problem.h_upper):
        raise ConfigurationError(
            "only equality path constraints are transcribed (h_lower must equal h_upper)"
        )

    n_nodes = grid.n_nodes
    layout = VariableLayout(n_nodes=n_nodes, nx=problem.nx, na=problem.na, nu=problem.nu)
    rows = RowLayout(n_nodes=n_nodes, nx=problem.nx, nh=problem.nh,
                     n_terminal=len(problem.terminal))
    if scaling is None:
        scaling = ChannelScaling.identity(layout.n_channels)
    elif len(scaling.gain) != layout.n_channels:
        raise ConfigurationError("scaling size does not match channel count")

    T = problem.T
    times = T * (grid.nodes + 1.0) / 2.0
    D = grid.diff_matrix
    w = grid.weights
    h_eq = problem.h_lower if problem.nh > 0 else None
    nx, na, nu = problem.nx, problem.na, problem.nu
    nc = layout.n_channels

    def _physical(v):
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise EvaluationError("non-finite decision vector")
        V = scaling.to_physical(layout.unflatten(v))
        return layout.split(V)

    def objective(v):
        X, Z, U = _physical(v)
        total = 0.0
        for j in range(n_nodes):
            lj = problem.running_cost(X[j], Z[j], U[j], times[j])
            if not np.isfinite(lj):
                raise EvaluationError("non-finite running cost", node=j)
            total += w[j] * lj
        return (T / 2.0) * total

    def constraints(v):
        X, Z, U = _physical(v)
        F = np.empty((n_nodes, nx))
        for j in range(n_nodes):
            fj = problem.dynamics(X[j], Z[j], U[j], times[j])
            if not np.all(np.isfinite(fj)):
                raise EvaluationError("non-finite dynamics value", node=j)
            F[j] = fj
        out = np.empty(rows.n_rows)
        out[rows.defect] = (D @ X - (T / 2.0) * F).ravel()
        if problem.nh > 0:
            H = np.empty((n_nodes, problem.nh))
            for j in range(n_nodes):
                hj = np.atleast_1d(problem.path(X[j], Z[j], U[j], times[j]))
                if not np.all(np.isfinite(hj)):
                    raise EvaluationError("non-finite path value", node=j)
                H[j] = hj
            out[rows.path] = (H - h_eq[None, :]).ravel()
        bnd = [X[0] - problem.initial_state]
        bnd += [np.array([X[-1][i] - val]) for i, val in problem.terminal]
        out[rows.boundary] = np.concatenate(bnd)
        return out

    def gradient(v):
        X, Z, U = _physical(v)
        G = np.zeros((n_nodes, nc))
        for j in range(n_nodes):
            G[j] = (T / 2.0) * w[j] * _node_cost_gradient(problem, X[j], Z[j], U[j], times[j])
        return (G * scaling.gain[None, :]).ravel()

    def jacobian(v):
        X, Z, U = _physical(v)
        J = np.zeros((rows.n_rows, layout.n_vars))
        # Structural D blocks: defect row (j, i) couples to column (k, x_i).
        for i in range(nx):
            r_idx = rows.defect.start + np.arange(n_nodes) * nx + i
            c_idx = np.arange(n_nodes) * nc + i
            J[np.ix_(r_idx, c_idx)] = D * scaling.gain[i]
        # Per-node dynamics / path blocks.
        for j in range(n_nodes):
            blk = _node_jacobians(problem, X[j], Z[j], U[j], times[j])
            r = rows.defect.start + j * nx
            c = j * nc
            J[r : r + nx, c : c + nc] -= (T / 2.0) * blk * scaling.gain[None, :]
            if problem.nh > 0:
                hblk = _node_path_jacobian(problem, X[j], Z[j], U[j], times[j])
                rp = rows.path.start + j * problem.nh
                J[rp : rp + problem.nh, c : c + nc] = hblk * scaling.gain[None, :]
        # Boundary rows.
        for i in range(nx):
            J[rows.boundary.start + i, i] = scaling.gain[i]
        for k, (i, _val) in enumerate(problem.terminal):
            J[rows.boundary.start + nx + k, (n_nodes - 1) * nc + i] = scaling.gain[i]
        return J

    return NlpProblem(
        n_vars=layout.n_vars,
        n_cons=rows.n_rows,
        objective=objective,
        gradient=gradient,
        constraints=constraints,
        jacobian=jacobian,
        layout=layout,
        rows=rows,
        times=times,
        problem=problem,
        grid=grid,
        scaling=scaling,
    )


def cold_start(nlp: NlpProblem) -> np.ndarray:
    """Unbiased default start: states pinned at x(0), everything else zero."""
    problem = nlp.problem
    V = np.zeros((nlp.layout.n_nodes, nlp.layout.n_channels))
    V[:, : problem.nx] = problem.initial_state[None, :]
    return nlp.layout.flatten(nlp.scaling.to_scaled(V))
