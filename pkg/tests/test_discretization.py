import numpy as np
import pytest

import degenbeam as db
from degenbeam.discretization import FactoredSpd, eval_dofs, interpolate
from degenbeam.errors import BadGrading

from conftest import assert_close, make_reference_problem


def test_geometric_mesh_nodes_exact():
    # Widths double toward x = 1 with ratio 2: 1, 2, 4, 8 out of 15.
    mesh = db.build_mesh(4, "geometric", 2.0)
    assert np.allclose(mesh.nodes, [0.0, 1 / 15, 3 / 15, 7 / 15, 1.0],
                       atol=1e-15)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == 1.0


def test_uniform_mesh_and_bad_grading():
    mesh = db.build_mesh(5, "uniform")
    assert np.allclose(mesh.widths, 0.2)
    with pytest.raises(BadGrading):
        db.build_mesh(4, "geometric", 0.0)
    with pytest.raises(BadGrading):
        db.build_mesh(0, "uniform")


@pytest.fixture(scope="module")
def small_ops():
    return db.assemble(make_reference_problem(), db.build_mesh(8, "geometric", 1.3))


def test_wd_clamps_value_and_slope(small_ops):
    # Weak degeneracy keeps sigma u'' integrable only under the full
    # clamp, so both x=0 dofs are eliminated.
    assert small_ops.degeneracy == "WD"
    assert small_ops.n_dofs == small_ops.mesh.n_dofs_full - 2
    assert 0 not in small_ops.keep and 1 not in small_ops.keep


def test_sd_clamps_value_only():
    p = db.BeamProblem.create(
        db.CoefficientFn.power(1.5), db.CoefficientFn.constant(1.0),
        2.0, 1.0, 0.5)
    ops = db.assemble(p, db.build_mesh(8, "geometric", 1.3))
    assert ops.degeneracy == "SD"
    assert ops.n_dofs == ops.mesh.n_dofs_full - 1
    assert 0 not in ops.keep and 1 in ops.keep


def test_interpolation_is_exact_for_cubics(small_ops):
    mesh = small_ops.mesh
    full = interpolate(mesh, lambda x: x ** 2 * (3 - 2 * x),
                       lambda x: 6 * x - 6 * x ** 2)
    xs = np.linspace(0.0, 1.0, 113)
    assert np.allclose(eval_dofs(mesh, full, xs),
                       xs ** 2 * (3 - 2 * xs), atol=1e-13)
    assert np.allclose(eval_dofs(mesh, full, xs, deriv=1),
                       6 * xs - 6 * xs ** 2, atol=1e-11)


def test_energy_and_mass_against_analytic_integrals(small_ops):
    # u = x^2 (3 - 2x) with sigma = sqrt(x), q = 1:
    #   int sigma u''^2 = int sqrt(x) (6 - 12x)^2 = 792/105
    #   int q u'^2     = int (6x - 6x^2)^2      = 6/5
    #   int u^2        = 13/35
    u = small_ops.restrict(interpolate(
        small_ops.mesh, lambda x: x ** 2 * (3 - 2 * x),
        lambda x: 6 * x - 6 * x ** 2))
    bending = float(u @ (small_ops.stiff_sigma @ u))
    tension = float(u @ (small_ops.stiff_q @ u))
    l2 = float(u @ (small_ops.mass @ u))
    # The sqrt(x) weight is not polynomial, so the bending quadrature
    # carries an O(h1^{3/2}) error from the first element; tension and
    # mass integrands are polynomial and exact for the order-6 rule.
    assert_close(bending, 792.0 / 105.0, 5e-5, "bending")
    assert_close(tension, 6.0 / 5.0, 1e-12, "tension")
    assert_close(l2, 13.0 / 35.0, 1e-12, "mass")
    assert_close(small_ops.energy_norm_sq(u),
                 792.0 / 105.0 + 6.0 / 5.0, 5e-5, "energy norm")


def test_mass_of_parabola_exact(small_ops):
    # x^2 satisfies both clamp conditions, so it survives restriction
    # unchanged and its L2 norm is a pure polynomial integral.
    u = small_ops.restrict(interpolate(small_ops.mesh, lambda x: x ** 2,
                                       lambda x: 2.0 * x))
    assert_close(float(u @ (small_ops.mass @ u)), 1.0 / 5.0, 1e-12)


def test_weight_quadrature_error_vanishes_under_refinement():
    # The bending error comes from quadrature of sqrt(x) near x = 0; it
    # must shrink under uniform refinement and be negligible on the
    # graded mesh, which is why the grading exists.
    p = make_reference_problem()
    exact = 792.0 / 105.0 + 6.0 / 5.0

    def energy_err(mesh):
        ops = db.assemble(p, mesh)
        u = ops.restrict(interpolate(mesh, lambda x: x ** 2 * (3 - 2 * x),
                                     lambda x: 6 * x - 6 * x ** 2))
        return abs(ops.energy_norm_sq(u) - exact)

    uniform = [energy_err(db.build_mesh(n, "uniform")) for n in (4, 8, 16, 32)]
    assert all(a > b for a, b in zip(uniform, uniform[1:]))
    assert uniform[-1] < uniform[0] / 20.0  # about h^{3/2}
    graded = energy_err(db.build_mesh(32, "geometric", 1.3))
    assert graded < 1e-7
    assert graded < uniform[-1] / 100.0


def test_discrete_trace_inequalities_hold_on_fe_space(small_ops, rng):
    # FE functions with the clamp satisfy the continuous trace bounds:
    #   y(1)^2   <= (1/q0) * int q y'^2
    #   y'(1)^2  <= 2 max(1/(sigma(1)(2-iota)), 1/q0) * |||y|||^2
    p = make_reference_problem()
    cap = 2.0 * max(1.0 / (p.sigma_at_1 * (2.0 - p.iota_sigma)), 1.0 / p.q0)
    for _ in range(50):
        y = rng.standard_normal(small_ops.n_dofs)
        full = small_ops.expand(y)
        tip_val = float(eval_dofs(small_ops.mesh, full, np.array([1.0]))[0])
        tip_slope = float(eval_dofs(small_ops.mesh, full, np.array([1.0]),
                                    deriv=1)[0])
        tension = float(y @ (small_ops.stiff_q @ y))
        energy = small_ops.energy_norm_sq(y)
        assert tip_val ** 2 <= tension / p.q0 * (1.0 + 1e-12)
        assert tip_slope ** 2 <= cap * energy * (1.0 + 1e-12)


def test_tip_dof_indices_evaluate_the_tip(small_ops):
    y = np.zeros(small_ops.n_dofs)
    y[small_ops.tip_value] = 2.5
    full = small_ops.expand(y)
    assert_close(float(eval_dofs(small_ops.mesh, full, np.array([1.0]))[0]),
                 2.5, 1e-14)
    y[:] = 0.0
    y[small_ops.tip_slope] = -1.5
    full = small_ops.expand(y)
    assert_close(float(eval_dofs(small_ops.mesh, full, np.array([1.0]),
                                 deriv=1)[0]), -1.5, 1e-14)


def test_factored_spd_matches_dense_solve(rng):
    b_mat = rng.standard_normal((40, 40))
    a = b_mat.T @ b_mat + 40.0 * np.eye(40)
    rhs = rng.standard_normal(40)
    x = FactoredSpd(a).solve(rhs)
    assert np.allclose(x, np.linalg.solve(a, rhs), rtol=1e-11, atol=1e-13)


def test_resolvent_zero_data_returns_zero(small_ops):
    p = make_reference_problem()
    n = small_ops.n_dofs
    sol = db.resolvent_solve(small_ops, p, np.zeros(n), np.zeros(n),
                             np.zeros(17))
    assert np.linalg.norm(sol.u) <= 1e-12
    assert np.linalg.norm(sol.v) <= 1e-12
    assert np.linalg.norm(sol.w) <= 1e-12


def test_resolvent_satisfies_defining_equations(small_ops, rng):
    # (I - A)(u, v, w) = (f, g, h) componentwise:
    #   u - v = f                                     (exact)
    #   M v + K u + e (k1 v(1) + k2 w(1)) = M g       (after elimination)
    #   w + (1/tau) w_s = h, w(0) = v(1)              (transport, ODE)
    p = make_reference_problem()
    n = small_ops.n_dofs
    n_hist = 64
    s = np.linspace(0.0, 1.0, n_hist + 1)
    f = rng.standard_normal(n)
    g = rng.standard_normal(n)
    h = np.cos(np.pi * s)
    sol = db.resolvent_solve(small_ops, p, f, g, h)

    assert np.allclose(sol.u - sol.v, f, atol=1e-12)

    e_tip = small_ops.tip_vector()
    lhs = (small_ops.mass @ sol.v + small_ops.stiffness @ sol.u
           + e_tip * (p.kappa1 * sol.v[small_ops.tip_value]
                      + p.kappa2 * sol.w[-1]))
    rhs = small_ops.mass @ g
    scale = np.linalg.norm(rhs) + np.linalg.norm(lhs)
    assert np.linalg.norm(lhs - rhs) <= 1e-8 * scale

    assert_close(sol.w[0], sol.v[small_ops.tip_value], 1e-12, "w inflow")
    ds = s[1] - s[0]
    w_s = (sol.w[2:] - sol.w[:-2]) / (2.0 * ds)
    ode_residual = sol.w[1:-1] + w_s / p.tau - h[1:-1]
    assert np.max(np.abs(ode_residual)) <= 5e-3  # O(ds^2) central check


def test_auxiliary_solve_identity_and_bounds(small_ops, rng):
    p = make_reference_problem()
    for _ in range(20):
        lam, mu = rng.standard_normal(2) * 3.0
        sol = db.auxiliary_solve(small_ops, p, float(lam), float(mu))
        # Galerkin identity: energy product equals the tip load action.
        assert_close(sol.energy_sq, sol.tip_identity, 1e-9, "tip identity")
        assert sol.energy_sq <= sol.bound_energy_sq * (1.0 + 1e-8)
        assert sol.l2_sq <= sol.bound_l2_sq * (1.0 + 1e-8)
        residual = small_ops.stiffness @ sol.y
        load = np.zeros(small_ops.n_dofs)
        load[small_ops.tip_value] = lam
        load[small_ops.tip_slope] = mu
        assert np.linalg.norm(residual - load) <= \
            1e-8 * max(np.linalg.norm(load), 1.0)
