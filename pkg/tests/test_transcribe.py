"""Collocation transcription: layouts, quadrature, defects, Jacobians."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from psdae import basis, ocp, transcribe


def _toy_problem(nx=1, nu=1, T=2.0, dynamics=None, cost=None, x0=None):
    return ocp.OcpProblem(
        name="toy", nx=nx, na=0, nu=nu, nh=0, T=T,
        dynamics=dynamics or (lambda x, z, u, t: np.zeros(nx)),
        running_cost=cost or (lambda x, z, u, t: 0.0),
        initial_state=np.zeros(nx) if x0 is None else x0,
    )


class TestCounts:
    def test_pendulum_n2(self):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        nlp = transcribe.transcribe(prob, basis.lgl_grid(2))
        assert nlp.n_vars == 3 * (4 + 1 + 1) == 18
        assert nlp.n_cons == 3 * 4 + 3 * 1 + 4 == 19

    def test_lq_n4(self):
        nlp = transcribe.transcribe(ocp.lq_problem(), basis.lgl_grid(4))
        assert nlp.n_vars == 10
        assert nlp.n_cons == 5 + 0 + 2

    def test_layout_roundtrip(self, rng):
        nlp = transcribe.transcribe(ocp.pendulum_problem(ocp.PendulumParams()),
                                    basis.lgl_grid(5))
        v = rng.standard_normal(nlp.n_vars)
        assert_allclose(nlp.layout.flatten(nlp.layout.unflatten(v)), v, atol=0)

    def test_flat_index(self):
        lay = transcribe.VariableLayout(n_nodes=4, nx=2, na=1, nu=1)
        assert lay.flat_index(0, 0) == 0
        assert lay.flat_index(1, 0) == 4
        assert lay.flat_index(3, 3) == 15

    def test_row_tags(self):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        nlp = transcribe.transcribe(prob, basis.lgl_grid(2))
        assert nlp.rows.tag(0) == "defect(node=0, state=0)"
        assert nlp.rows.tag(12) == "path(node=0, k=0)"
        assert nlp.rows.tag(15) == "boundary(initial, 0)"

    def test_rejects_small_grid(self):
        with pytest.raises(transcribe.ConfigurationError):
            transcribe.transcribe(ocp.lq_problem(), basis.lgl_grid(1))

    def test_rejects_inequality_path(self):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        bad = ocp.OcpProblem(
            name="bad", nx=4, na=1, nu=1, nh=1, T=2.2,
            dynamics=prob.dynamics, path=prob.path,
            h_lower=np.array([-1.0]), h_upper=np.array([1.0]),
            running_cost=prob.running_cost, initial_state=prob.initial_state)
        with pytest.raises(transcribe.ConfigurationError):
            transcribe.transcribe(bad, basis.lgl_grid(4))


class TestObjective:
    def test_unit_cost_integrates_to_horizon(self, rng):
        prob = _toy_problem(T=2.2, cost=lambda x, z, u, t: 1.0)
        nlp = transcribe.transcribe(prob, basis.lgl_grid(7))
        assert_allclose(nlp.objective(rng.standard_normal(nlp.n_vars)), 2.2, atol=1e-12)

    def test_unit_control_squared(self):
        prob = _toy_problem(T=2.0, cost=lambda x, z, u, t: u[0] ** 2)
        nlp = transcribe.transcribe(prob, basis.lgl_grid(5))
        V = np.zeros((6, 2))
        V[:, 1] = 1.0
        assert_allclose(nlp.objective(V.ravel()), 2.0, atol=1e-12)

    def test_linear_in_time(self):
        T = 2.2
        prob = _toy_problem(T=T, cost=lambda x, z, u, t: t)
        nlp = transcribe.transcribe(prob, basis.lgl_grid(4))
        assert_allclose(nlp.objective(np.zeros(nlp.n_vars)), T**2 / 2, atol=1e-12)

    def test_pendulum_on_target_zero_objective(self):
        p = ocp.PendulumParams(alpha=0.0)
        prob = ocp.pendulum_problem(p)
        grid = basis.lgl_grid(8)
        nlp = transcribe.transcribe(prob, grid)
        V = np.zeros((9, 6))
        V[:, 0] = p.L * np.sin(nlp.times)
        V[:, 2] = p.L * np.cos(nlp.times)
        assert_allclose(nlp.objective(V.ravel()), 0.0, atol=1e-14)

    def test_polynomial_quadrature_exactness(self, rng):
        # running cost polynomial of degree 2N-1 in t, in closed form
        N, T = 6, 2.0
        coefs = rng.standard_normal(2 * N)
        poly = np.polynomial.Polynomial(coefs)
        prob = _toy_problem(T=T, cost=lambda x, z, u, t: poly(t))
        nlp = transcribe.transcribe(prob, basis.lgl_grid(N))
        exact = poly.integ()(T) - poly.integ()(0.0)
        assert_allclose(nlp.objective(np.zeros(nlp.n_vars)), exact,
                        atol=1e-12 * max(1.0, abs(exact)))


class TestConstraints:
    def test_linear_state_unit_dynamics(self):
        T = 2.0
        prob = _toy_problem(T=T, dynamics=lambda x, z, u, t: np.ones(1))
        grid = basis.lgl_grid(6)
        nlp = transcribe.transcribe(prob, grid)
        V = np.zeros((7, 2))
        V[:, 0] = nlp.times  # x(t) = t
        c = nlp.constraints(V.ravel())
        assert np.max(np.abs(c[nlp.rows.defect])) < 1e-12

    def test_constant_state_zero_dynamics(self, rng):
        prob = _toy_problem()
        nlp = transcribe.transcribe(prob, basis.lgl_grid(5))
        V = np.zeros((6, 2))
        V[:, 0] = 3.7
        c = nlp.constraints(V.ravel())
        assert np.max(np.abs(c[nlp.rows.defect])) < 1e-12

    def test_boundary_rows_report_mismatch(self):
        prob = _toy_problem(x0=np.array([1.5]))
        nlp = transcribe.transcribe(prob, basis.lgl_grid(4))
        c = nlp.constraints(np.zeros(nlp.n_vars))
        assert_allclose(c[nlp.rows.boundary], [-1.5], atol=0)

    def test_pendulum_on_circle_path_rows_vanish(self):
        p = ocp.PendulumParams()
        prob = ocp.pendulum_problem(p)
        grid = basis.lgl_grid(6)
        nlp = transcribe.transcribe(prob, grid)
        V = np.zeros((7, 6))
        phis = np.linspace(0, 1.0, 7)
        V[:, 0] = p.L * np.sin(phis)
        V[:, 2] = p.L * np.cos(phis)
        c = nlp.constraints(V.ravel())
        assert np.max(np.abs(c[nlp.rows.path])) < 1e-12

    def test_unused_channel_shift_leaves_constraints_alone(self, rng):
        # second control channel enters the cost only
        prob = ocp.OcpProblem(
            name="toy2", nx=1, na=0, nu=2, nh=0, T=1.0,
            dynamics=lambda x, z, u, t: np.array([u[0]]),
            running_cost=lambda x, z, u, t: u[0] ** 2 + u[1] ** 2,
            initial_state=np.zeros(1))
        nlp = transcribe.transcribe(prob, basis.lgl_grid(5))
        v = rng.standard_normal(nlp.n_vars)
        V = nlp.layout.unflatten(v).copy()
        V[:, 2] += 4.2
        assert_allclose(nlp.constraints(V.ravel()), nlp.constraints(v), atol=1e-12)

    def test_nonfinite_vector_rejected(self):
        nlp = transcribe.transcribe(_toy_problem(), basis.lgl_grid(3))
        v = np.zeros(nlp.n_vars)
        v[2] = np.nan
        with pytest.raises(ocp.EvaluationError):
            nlp.constraints(v)

    def test_nonfinite_dynamics_carries_node(self):
        def dyn(x, z, u, t):
            return np.array([np.inf if t > 0.5 else 0.0])
        prob = _toy_problem(T=1.0, dynamics=dyn)
        nlp = transcribe.transcribe(prob, basis.lgl_grid(4))
        with pytest.raises(ocp.EvaluationError) as err:
            nlp.constraints(np.zeros(nlp.n_vars))
        assert err.value.node is not None and err.value.node > 0


class TestJacobian:
    def test_matches_finite_differences_on_pendulum(self, rng):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        nlp = transcribe.transcribe(prob, basis.lgl_grid(4))
        for _ in range(3):
            v = rng.uniform(-1.5, 1.5, nlp.n_vars)
            J = nlp.jacobian(v)
            J_fd = transcribe.fd_jacobian(nlp.constraints, v)
            assert np.max(np.abs(J - J_fd)) < 1e-5

    def test_gradient_matches_finite_differences(self, rng):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        nlp = transcribe.transcribe(prob, basis.lgl_grid(4))
        v = rng.uniform(-1, 1, nlp.n_vars)
        assert np.max(np.abs(nlp.gradient(v)
                             - transcribe.fd_gradient(nlp.objective, v))) < 1e-5

    def test_defect_block_carries_diff_matrix(self):
        prob = ocp.lq_problem()
        grid = basis.lgl_grid(4)
        nlp = transcribe.transcribe(prob, grid)
        J = nlp.jacobian(np.zeros(nlp.n_vars))
        # state column of each node within the defect rows reproduces D
        block = J[nlp.rows.defect][:, 0::2]
        assert_allclose(block - np.diag(np.zeros(5)), grid.diff_matrix, atol=1e-12)

    def test_pendulum_path_row_gradient(self, rng):
        p = ocp.PendulumParams()
        prob = ocp.pendulum_problem(p)
        nlp = transcribe.transcribe(prob, basis.lgl_grid(3))
        v = rng.uniform(-1, 1, nlp.n_vars)
        V = nlp.layout.unflatten(v)
        J = nlp.jacobian(v)
        j = 2  # arbitrary node
        row = J[nlp.rows.path.start + j, j * 6:(j + 1) * 6]
        expected = [2 * V[j, 0], 0.0, 2 * V[j, 2], 0.0, 0.0, 0.0]
        assert_allclose(row, expected, atol=1e-6)

    def test_fd_fallback_when_no_analytic(self, rng):
        # same problem with and without analytic derivatives
        p = ocp.PendulumParams()
        full = ocp.pendulum_problem(p)
        bare = ocp.OcpProblem(
            name="pendulum-bare", nx=4, na=1, nu=1, nh=1, T=p.T,
            dynamics=full.dynamics, path=full.path,
            h_lower=np.zeros(1), h_upper=np.zeros(1),
            running_cost=full.running_cost, initial_state=full.initial_state)
        g = basis.lgl_grid(3)
        v = rng.uniform(-1, 1, transcribe.transcribe(full, g).n_vars)
        J_analytic = transcribe.transcribe(full, g).jacobian(v)
        J_fd = transcribe.transcribe(bare, g).jacobian(v)
        assert np.max(np.abs(J_analytic - J_fd)) < 1e-5


class TestScaling:
    def test_identity_default(self):
        nlp = transcribe.transcribe(ocp.lq_problem(), basis.lgl_grid(3))
        assert_allclose(nlp.scaling.gain, np.ones(2), atol=0)

    def test_scaled_solve_matches_physical(self):
        from psdae import sqp
        prob = ocp.lq_problem()
        grid = basis.lgl_grid(4)
        plain = transcribe.transcribe(prob, grid)
        scaled = transcribe.transcribe(
            prob, grid, transcribe.ChannelScaling(offset=np.array([0.5, -1.0]),
                                                  gain=np.array([2.0, 0.25])))
        sol_plain = sqp.solve(plain, transcribe.cold_start(plain))
        sol_scaled = sqp.solve(scaled, transcribe.cold_start(scaled))
        assert sol_plain.success and sol_scaled.success
        t_plain = plain.trajectory(sol_plain.primal)
        t_scaled = scaled.trajectory(sol_scaled.primal)
        assert_allclose(t_scaled.states, t_plain.states, atol=1e-7)
        assert_allclose(t_scaled.controls, t_plain.controls, atol=1e-7)

    def test_zero_gain_rejected(self):
        with pytest.raises(transcribe.ConfigurationError):
            transcribe.ChannelScaling(offset=np.zeros(2), gain=np.array([1.0, 0.0]))


class TestColdStart:
    def test_states_pinned_controls_zero(self):
        prob = ocp.pendulum_problem(ocp.PendulumParams())
        nlp = transcribe.transcribe(prob, basis.lgl_grid(5))
        V = nlp.layout.unflatten(transcribe.cold_start(nlp))
        assert_allclose(V[:, :4], np.tile([0, 0, 2, 0], (6, 1)), atol=0)
        assert_allclose(V[:, 4:], 0.0, atol=0)
