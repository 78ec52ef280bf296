import time

import numpy as np
import pytest

from psdae import basis, covector, ocp, sqp, transcribe, verify


@pytest.fixture(scope="session")
def pendulum_setup():
    """Reference-parameter pendulum transcription at the default 32 nodes."""
    params = ocp.PendulumParams()
    problem = ocp.pendulum_problem(params)
    grid = basis.lgl_grid(32)
    nlp = transcribe.transcribe(problem, grid)
    return params, problem, grid, nlp


@pytest.fixture(scope="session")
def pendulum_solution(pendulum_setup):
    """Cold-start solve of the pendulum; shared across the suite.

    Returns (solution, wall-clock seconds of the solve).
    """
    _, _, _, nlp = pendulum_setup
    t0 = time.perf_counter()
    sol = sqp.solve(nlp, transcribe.cold_start(nlp))
    return sol, time.perf_counter() - t0


@pytest.fixture(scope="session")
def pendulum_duals(pendulum_setup, pendulum_solution):
    _, problem, grid, _ = pendulum_setup
    sol, _ = pendulum_solution
    return covector.extract_duals(sol, grid, problem)


@pytest.fixture(scope="session")
def pendulum_report(pendulum_setup, pendulum_solution, pendulum_duals):
    """Full verification battery (including the cost oracle)."""
    _, _, _, nlp = pendulum_setup
    sol, _ = pendulum_solution
    return verify.full_report(sol, nlp, pendulum_duals)


@pytest.fixture(scope="session")
def lq_solution():
    problem = ocp.lq_problem(T=1.0, b=1.0)
    grid = basis.lgl_grid(4)
    nlp = transcribe.transcribe(problem, grid)
    sol = sqp.solve(nlp, transcribe.cold_start(nlp))
    return problem, grid, nlp, sol


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
