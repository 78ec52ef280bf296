"""Legendre-Gauss-Lobatto (LGL) collocation machinery on [-1, 1].

Provides the node set, quadrature weights, barycentric weights,
differentiation matrix and barycentric interpolation that the
pseudospectral transcription is built on.  Everything here is a pure
function of the polynomial degree; a :class:`Grid` is immutable once
constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidOrderError(ValueError):
    """Requested polynomial degree is not supported."""


class DomainError(ValueError):
    """Evaluation point lies outside the interval the basis lives on."""


def _legendre_pair(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (L_n(x), L_{n-1}(x)) by the three-term recurrence.

    The recurrence is numerically stable for degrees well beyond 100,
    unlike expanding L_n in the monomial basis.
    """
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


def lgl_nodes(N: int) -> np.ndarray:
    """Return the N+1 LGL nodes: -1, the roots of L_N', and +1, ascending.

    Newton's method on (1 - x^2) L_N'(x), started from Chebyshev-Lobatto
    points, written via the identity (1 - x^2) L_N'(x) = N (L_{N-1} - x L_N)
    so only L_N and L_{N-1} are ever evaluated.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise InvalidOrderError(f"polynomial degree must be an integer >= 1, got {N!r}")

    x = np.cos(np.pi * np.arange(N, -1, -1) / N)  # ascending Chebyshev guesses
    for _ in range(100):
        p, p_prev = _legendre_pair(N, x)
        dx = (x * p - p_prev) / ((N + 1) * p)
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise RuntimeError("LGL Newton iteration failed to reach 1e-14")

    x = 0.5 * (x - x[::-1])  # enforce exact symmetry about 0
    x[0], x[-1] = -1.0, 1.0
    return x


def lgl_weights(nodes: np.ndarray) -> np.ndarray:
    """Quadrature weights w_j = 2 / (N (N+1) L_N(x_j)^2) for LGL nodes.

    Exact for polynomials of degree <= 2N - 1.
    """
    N = len(nodes) - 1
    p, _ = _legendre_pair(N, np.asarray(nodes, dtype=float))
    return 2.0 / (N * (N + 1) * p**2)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights 1 / prod_{k!=j}(x_j - x_k), rescaled to max 1.

    The rescaling is harmless (interpolation and differentiation are
    invariant under a common factor) and avoids overflow at high degree.
    """
    x = np.asarray(nodes, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


def diff_matrix(nodes: np.ndarray, bary_weights: np.ndarray) -> np.ndarray:
    """First-derivative collocation matrix from barycentric weights.

    Entry (j, k) is the derivative of the k-th Lagrange cardinal
    polynomial at node j.  The diagonal is the negated off-diagonal row
    sum, which makes rows annihilate constants exactly.
    """
    x = np.asarray(nodes, dtype=float)
    w = np.asarray(bary_weights, dtype=float)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def interpolate(nodes, bary_weights, values, tau):
    """Barycentric Lagrange interpolation of nodal ``values`` at ``tau``.

    ``tau`` may be a scalar or an array; points must lie in [-1, 1].
    Queries that coincide with a node return the nodal value exactly
    (no division-by-zero hazard).
    """
    x = np.asarray(nodes, dtype=float)
    w = np.asarray(bary_weights, dtype=float)
    v = np.asarray(values, dtype=float)
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(t < -1.0 - 1e-12) or np.any(t > 1.0 + 1e-12):
        raise DomainError(f"interpolation point outside [-1, 1]: {tau!r}")
    t = np.clip(t, -1.0, 1.0)

    d = t[:, None] - x[None, :]
    exact = np.isclose(d, 0.0, rtol=0.0, atol=1e-15)
    d[exact] = 1.0
    num = (w[None, :] / d) @ v
    den = np.sum(w[None, :] / d, axis=1)
    out = num / den
    hit_row, hit_col = np.nonzero(exact)
    out[hit_row] = v[hit_col]
    return out[0] if np.isscalar(tau) or np.ndim(tau) == 0 else out


@dataclass(frozen=True)
class Grid:
    """One LGL collocation segment on [-1, 1].

    Attributes
    ----------
    order : polynomial degree N (N+1 nodes).
    nodes : ascending node coordinates, endpoints exactly -1 and +1.
    weights : quadrature weights, summing to 2.
    diff_matrix : (N+1) x (N+1) first-derivative matrix.
    bary_weights : barycentric weights of the node set.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    bary_weights: np.ndarray

    def __post_init__(self):
        for arr in (self.nodes, self.weights, self.diff_matrix, self.bary_weights):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.order + 1

    def interpolate(self, values, tau):
        return interpolate(self.nodes, self.bary_weights, values, tau)


def lgl_grid(N: int) -> Grid:
    """Build the complete LGL grid of degree N."""
    nodes = lgl_nodes(N)
    bw = barycentric_weights(nodes)
    return Grid(
        order=N,
        nodes=nodes,
        weights=lgl_weights(nodes),
        diff_matrix=diff_matrix(nodes, bw),
        bary_weights=bw,
    )
