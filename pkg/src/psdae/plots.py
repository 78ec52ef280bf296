"""Static SVG figures from a solution CSV.

Each helper renders one aspect of the solution; :func:`emit_plots`
dispatches on the problem named in the CSV header and writes the full set
for that problem.  The propagation overlay and constraint-residual traces
re-run the verification propagator from the data in the file, so the
figures are reproducible from the CSV alone.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .basis import lgl_grid  # noqa: E402
from .integrate import IvpSetup, control_signal, propagate  # noqa: E402
from .ocp import PendulumParams, lq_problem, pendulum_problem, reduced_pendulum_problem  # noqa: E402
from .solution_io import read_solution_csv  # noqa: E402
from .transcribe import Trajectory  # noqa: E402


def _params_from_meta(meta) -> PendulumParams:
    return PendulumParams(a=float(meta["a"]), c=float(meta["c"]), d=float(meta["d"]),
                          g=float(meta["g"]), L=float(meta["L"]),
                          alpha=float(meta["alpha"]), T=float(meta["T"]))


def _rebuild(meta, cols):
    """Problem object, grid and Trajectory from CSV contents."""
    name = meta["problem"]
    if name == "pendulum":
        problem = pendulum_problem(_params_from_meta(meta))
        states = np.column_stack([cols["x1"], cols["x2"], cols["x3"], cols["x4"]])
        algebraic = cols["x5"][:, None]
    elif name == "reduced-pendulum":
        problem = reduced_pendulum_problem(_params_from_meta(meta))
        states = np.column_stack([cols["phi"], cols["phidot"]])
        algebraic = np.zeros((len(cols["t"]), 0))
    else:
        problem = lq_problem(T=float(meta["T"]), b=float(meta.get("terminal_x1", 1.0)))
        states = cols["x1"][:, None]
        algebraic = np.zeros((len(cols["t"]), 0))
    grid = lgl_grid(int(meta["N"]))
    traj = Trajectory(times=cols["t"], states=states, algebraic=algebraic,
                      controls=cols["u"][:, None])
    return problem, grid, traj


def _save(fig, out_dir: Path, name: str, written: list) -> None:
    path = out_dir / name
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)


def _propagate_dense(problem, grid, traj, n_dense=400):
    signal = control_signal(traj, grid, problem.T)

    def rhs(t, x):
        u, z = signal(t)
        return problem.dynamics(x, z, u, t)

    dense = np.linspace(0.0, problem.T, n_dense)
    res = propagate(IvpSetup(rhs=rhs, t0=0.0, tf=problem.T,
                             x0=problem.initial_state, sample_times=dense))
    return res.times, res.states


def emit_plots(csv_path, out_dir) -> list:
    """Write the figure set for the problem in ``csv_path``; returns paths."""
    meta, cols = read_solution_csv(csv_path)
    problem, grid, traj = _rebuild(meta, cols)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    t = cols["t"]

    # Control trace (all problems).
    fig, ax = plt.subplots()
    ax.plot(t, cols["u"], "b.-")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("u")
    ax.set_title("Control solution")
    ax.grid(True)
    _save(fig, out_dir, "control.svg", written)

    # Costates (all problems).
    fig, ax = plt.subplots()
    for name in [c for c in cols if c.startswith("lam")]:
        ax.plot(t, cols[name], label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("costate")
    ax.set_title("Costates")
    ax.legend()
    ax.grid(True)
    _save(fig, out_dir, "costates.svg", written)

    tp, xp = _propagate_dense(problem, grid, traj)

    # Propagation overlay (all problems).
    fig, ax = plt.subplots()
    for i in range(problem.nx):
        line, = ax.plot(tp, xp[:, i], "-", label=f"state {i + 1} (propagated)")
        ax.plot(t, traj.states[:, i], "o", ms=3.5, color=line.get_color())
    ax.set_xlabel("t [s]")
    ax.set_ylabel("state")
    ax.set_title("Feasibility: nodes vs propagated controls")
    ax.legend(fontsize=7)
    ax.grid(True)
    _save(fig, out_dir, "propagation_overlay.svg", written)

    if problem.name == "reduced-pendulum":
        p = problem.params
        fig, ax = plt.subplots()
        ax.plot(t, cols["phi"], "b.-", label="phi")
        ax.plot(t, t + p.alpha, "k--", label="target phase")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("angle [rad]")
        ax.set_title("Angle vs target phase")
        ax.legend()
        ax.grid(True)
        _save(fig, out_dir, "tracking_phi.svg", written)

    if problem.name != "pendulum":
        return written

    p = problem.params
    x1, x3 = cols["x1"], cols["x3"]

    # Phase-plane trajectory with the constraint circle.
    fig, ax = plt.subplots()
    th = np.linspace(0, 2 * np.pi, 256)
    ax.plot(p.L * np.sin(th), p.L * np.cos(th), "k--", lw=0.8, label="constraint circle")
    ax.plot(x1, x3, "b.-", label="trajectory")
    ax.set_xlabel("x1")
    ax.set_ylabel("x3")
    ax.set_title("State trajectory in the x1-x3 plane")
    ax.set_aspect("equal")
    ax.legend()
    ax.grid(True)
    _save(fig, out_dir, "phase_x1_x3.svg", written)

    # Tracking of both target components.
    for name, vals, target in [("tracking_x1.svg", x1, p.L * np.sin(t + p.alpha)),
                               ("tracking_x3.svg", x3, p.L * np.cos(t + p.alpha))]:
        fig, ax = plt.subplots()
        ax.plot(t, vals, "b.-", label="solution")
        ax.plot(t, target, "k--", label="target")
        ax.set_xlabel("t [s]")
        ax.set_ylabel(name.split("_")[1].split(".")[0])
        ax.set_title("State vs moving target")
        ax.legend()
        ax.grid(True)
        _save(fig, out_dir, name, written)

    # Length-constraint residual along the propagated trajectory.
    fig, ax = plt.subplots()
    ax.plot(tp, xp[:, 0] ** 2 + xp[:, 2] ** 2 - p.L**2, "b-")
    ax.axhline(1e-4, color="r", ls=":", lw=0.8)
    ax.axhline(-1e-4, color="r", ls=":", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("x1^2 + x3^2 - L^2")
    ax.set_title("Algebraic constraint along the propagated trajectory")
    ax.grid(True)
    _save(fig, out_dir, "path_residual.svg", written)

    # Both sides of the two control stationarity conditions.
    lam2, lam4 = cols["lam2"], cols["lam4"]
    fig, ax = plt.subplots()
    ax.plot(t, cols["u"], "b.-", label="u")
    ax.plot(t, (lam4 * x1 - lam2 * x3) / (2 * p.c), "r--",
            label="(lam4 x1 - lam2 x3) / 2c")
    ax.set_xlabel("t [s]")
    ax.set_title("Stationarity of the regular control")
    ax.legend()
    ax.grid(True)
    _save(fig, out_dir, "stationarity_u.svg", written)

    fig, ax = plt.subplots()
    ax.plot(t, lam2 * x1, "b.-", label="lam2 x1")
    ax.plot(t, -lam4 * x3, "r--", label="-lam4 x3")
    ax.set_xlabel("t [s]")
    ax.set_title("Stationarity in the singular channel")
    ax.legend()
    ax.grid(True)
    _save(fig, out_dir, "stationarity_x5.svg", written)

    return written
