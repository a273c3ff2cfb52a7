import numpy as np
import pytest

import degenbeam as db
from degenbeam.integrator import initial_state

from conftest import assert_close, cubic_initial, make_reference_problem
from oracles import expm_order_study


def test_dt_is_tau_over_history_slots():
    cfg = db.SchemeConfig(n_hist=50, t_final=20.0)
    assert cfg.dt(0.5) == 0.01
    with pytest.raises(ValueError):
        db.SchemeConfig(n_hist=0, t_final=1.0)
    with pytest.raises(ValueError):
        db.SchemeConfig(n_hist=4, t_final=-1.0)


def test_initial_state_interpolates_and_prefills():
    p = make_reference_problem()
    ops = db.assemble(p, db.build_mesh(8, "geometric", 1.3))
    cfg = db.SchemeConfig(n_hist=4, t_final=1.0)
    u0, u1, _ = cubic_initial()
    state = initial_state(ops, p, cfg, u0, u1, lambda th: 3.0)
    assert state.t == 0.0 and state.step_index == 0
    # Initial tip displacement u0(1) = 1, initial velocity zero, and
    # the history holds f0 except at lag 0 where the true tip velocity
    # overwrites it.
    full = ops.expand(state.u)
    assert_close(full[-2], 1.0, 1e-14, "tip displacement")
    assert np.allclose(state.v, 0.0)
    assert state.history.sample_steps(0) == 0.0
    assert state.history.sample_steps(1) == 3.0
    assert state.history.sample_steps(4) == 3.0


def test_conservative_limit_preserves_energy():
    # Gains off: the trapezoidal step is unitary for the discrete
    # energy, so E is conserved to solver roundoff over 2000 steps.
    p = db.BeamProblem.create(
        db.CoefficientFn.power(0.5), db.CoefficientFn.constant(1.0),
        kappa1=0.0, kappa2=0.0, tau=0.5, gamma=0.0, strict=False)
    ops = db.assemble(p, db.build_mesh(32, "geometric", 1.3))
    cfg = db.SchemeConfig(n_hist=50, t_final=20.0, output_stride=100)
    u0, u1, f0 = cubic_initial()
    series = db.run(p, ops, cfg, u0, u1, f0)
    e = series.step_energy
    assert e.size == 2001
    drift = np.max(np.abs(e - e[0])) / e[0]
    assert drift <= 1e-8, f"conservative drift {drift:.3e}"
    assert series.constants is None  # no decay chain without gains


def test_reference_run_dissipates(reference_series):
    e = reference_series.step_energy
    assert e[0] > 0.0
    increments = np.diff(e)
    assert increments.max() <= 1e-9 * e[0]
    assert e[-1] < 0.05 * e[0]  # visibly damped by t = 20


def test_rows_sampled_at_stride(reference_series):
    rows = reference_series.rows
    assert len(rows) == 201  # 2000 steps / stride 10, plus t = 0
    assert rows[0].t == 0.0
    assert_close(rows[1].t, 0.1, 1e-12)
    assert_close(rows[-1].t, 20.0, 1e-9)
    # Emitted energies are the step energies at the same indices.
    assert_close(rows[3].energy, reference_series.step_energy[30], 1e-15)


def test_emitted_rows_satisfy_sandwich(reference_series):
    assert all(r.sandwich_ok for r in reference_series.rows)


def test_stepper_matches_matrix_exponential_at_second_order():
    errors, orders = expm_order_study()
    assert np.all(np.isfinite(errors))
    assert orders.min() >= 1.9, f"observed orders {orders}"


def test_timeseries_columns(reference_series):
    t = reference_series.column("t")
    e = reference_series.column("energy")
    assert t.shape == e.shape == (201,)
    assert np.all(np.diff(t) > 0.0)
    with pytest.raises(AttributeError):
        reference_series.column("no_such_field")
