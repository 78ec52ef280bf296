"""Adaptive Dormand-Prince 5(4) propagation for independent verification.

This integrator exists so that solutions of the collocation pipeline can
be checked against a method that shares none of its machinery: it is used
only to propagate, never to optimize.  Controls and algebraic variables
enter as interpolated exogenous signals built from the nodal solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import DomainError, Grid, interpolate
from .transcribe import Trajectory


class MaxStepsError(RuntimeError):
    """Step budget exhausted before reaching the final time."""


class StepUnderflowError(RuntimeError):
    """Required step size fell below 1e-14 of the interval length."""


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between the 5th- and embedded 4th-order weights.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# 4th-order dense-output interpolant: y(t0 + th*h) = y0 + h * K^T P [th, th^2, th^3, th^4].
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class IvpSetup:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    tf: float
    x0: np.ndarray
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 100000
    sample_times: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self):
        if self.tf <= self.t0:
            raise ValueError("tf must exceed t0")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))


@dataclass
class IvpResult:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    n_steps: int
    n_rejected: int
    n_rhs: int


def control_signal(traj: Trajectory, grid: Grid, T: float) -> Callable:
    """Continuous (u(t), z(t)) from nodal values via barycentric interpolation.

    The physical time t in [0, T] is mapped onto the grid with
    tau = 2 t / T - 1.  Evaluations outside [0, T] raise DomainError.
    """
    controls = np.asarray(traj.controls, dtype=float)
    algebraic = np.asarray(traj.algebraic, dtype=float)

    def signal(t: float):
        if t < -1e-12 or t > T + 1e-12:
            raise DomainError(f"control query outside [0, {T}]: {t}")
        tau = np.clip(2.0 * t / T - 1.0, -1.0, 1.0)
        u = np.array([interpolate(grid.nodes, grid.bary_weights, controls[:, k], tau)
                      for k in range(controls.shape[1])])
        z = np.array([interpolate(grid.nodes, grid.bary_weights, algebraic[:, k], tau)
                      for k in range(algebraic.shape[1])])
        return u, z

    return signal


def _error_norm(err, y0, y1, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, x0, f0, tf, rel_tol, abs_tol):
    """Hairer-style starting step from magnitudes of x, f and a trial Euler step."""
    scale = abs_tol + rel_tol * np.abs(x0)
    d0 = np.sqrt(np.mean((x0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    x1 = x0 + h0 * f0
    f1 = rhs(t0 + h0, x1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    h1 = (0.01 / max(d1, d2)) ** 0.2 if max(d1, d2) > 1e-15 else max(1e-6, h0 * 1e-3)
    return min(100 * h0, h1, tf - t0)


def propagate(setup: IvpSetup) -> IvpResult:
    """Integrate the IVP, sampling the solution at ``setup.sample_times``.

    Embedded 5(4) pair with a PI step-size controller; requested samples
    are produced by the pair's quartic dense interpolant inside accepted
    steps, so accuracy does not depend on where the samples fall.
    """
    rhs, t0, tf, x0 = setup.rhs, setup.t0, setup.tf, setup.x0
    samples = np.sort(np.asarray(setup.sample_times, dtype=float))
    if samples.size and (samples[0] < t0 - 1e-12 or samples[-1] > tf + 1e-12):
        raise ValueError("sample times must lie within [t0, tf]")
    samples = np.clip(samples, t0, tf)

    n = x0.size
    out_t, out_x = [], []
    i_sample = 0
    while i_sample < samples.size and samples[i_sample] <= t0 + 1e-15:
        out_t.append(t0)
        out_x.append(x0.copy())
        i_sample += 1

    f0 = np.atleast_1d(np.asarray(rhs(t0, x0), dtype=float))
    n_rhs = 1
    h = _initial_step(rhs, t0, x0, f0, tf, setup.rel_tol, setup.abs_tol)
    n_rhs += 1
    t, y, k1 = t0, x0.copy(), f0
    err_prev = 1.0
    n_steps = n_rejected = 0
    h_min = 1e-14 * (tf - t0)

    while t < tf - 1e-14 * max(1.0, abs(tf)):
        if n_steps + n_rejected >= setup.max_steps:
            raise MaxStepsError(f"exceeded {setup.max_steps} steps at t={t}")
        h = min(h, tf - t)
        if h < h_min:
            raise StepUnderflowError(f"step underflow at t={t} (h={h})")

        K = np.empty((7, n))
        K[0] = k1
        for s in range(1, 7):
            K[s] = rhs(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        n_rhs += 6
        y_new = y + h * (_B5 @ K)
        err = _error_norm(h * (_E @ K), y, y_new, setup.rel_tol, setup.abs_tol)

        if err <= 1.0:
            # Dense output for samples inside (t, t+h].
            while i_sample < samples.size and samples[i_sample] <= t + h + 1e-15:
                th = np.clip((samples[i_sample] - t) / h, 0.0, 1.0)
                powers = np.array([th, th**2, th**3, th**4])
                out_t.append(samples[i_sample])
                out_x.append(y + h * (K.T @ (_P @ powers)))
                i_sample += 1
            t, y, k1 = t + h, y_new, K[6]  # FSAL: last stage is f(t+h, y_new)
            n_steps += 1
            if err < 1e-30:
                factor = 10.0
            else:
                factor = 0.9 * err ** -0.14 * err_prev ** 0.08  # PI controller
            h *= min(10.0, max(0.2, factor))
            err_prev = max(err, 1e-10)
        else:
            n_rejected += 1
            h *= min(0.9, max(0.1, 0.9 * err ** -0.2))

    return IvpResult(times=np.asarray(out_t), states=np.asarray(out_x),
                     n_steps=n_steps, n_rejected=n_rejected, n_rhs=n_rhs)
