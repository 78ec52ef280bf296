"""Pseudospectral optimal control for high-index DAE problems.

The package directly transcribes DAE optimal control problems on a single
Legendre-Gauss-Lobatto grid, solves the resulting dense NLP with an
equality-constrained SQP method, maps the multipliers into costate and
covector trajectories, and verifies every solution with an independent
propagation battery plus the first-order necessary conditions.

``psdae.plots`` (matplotlib-backed) is imported lazily by the CLI.
"""

from . import basis, covector, integrate, ocp, solution_io, sqp, transcribe, verify
from .basis import Grid, lgl_grid
from .covector import DualTrajectory, NcReport, extract_duals
from .integrate import IvpSetup, control_signal, propagate
from .ocp import OcpProblem, PendulumParams, lq_problem, pendulum_problem, reduced_pendulum_problem
from .sqp import NlpSolution, SolverConfig, solve
from .transcribe import ChannelScaling, NlpProblem, Trajectory, cold_start
from .verify import VvConfig, VvReport, full_report, run_oracle, verify_feasibility

__version__ = "0.1.0"

__all__ = [
    "basis", "ocp", "transcribe", "sqp", "covector", "integrate", "verify",
    "solution_io",
    "Grid", "lgl_grid",
    "OcpProblem", "PendulumParams", "pendulum_problem",
    "reduced_pendulum_problem", "lq_problem",
    "ChannelScaling", "NlpProblem", "Trajectory", "cold_start",
    "NlpSolution", "SolverConfig", "solve",
    "DualTrajectory", "NcReport", "extract_duals",
    "IvpSetup", "control_signal", "propagate",
    "VvConfig", "VvReport", "full_report", "run_oracle", "verify_feasibility",
    "__version__",
]
