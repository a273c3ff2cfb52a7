import math

import numpy as np
import pytest

import degenbeam as db
from degenbeam import diagnostics
from degenbeam.errors import InsufficientDecay

from conftest import assert_close, make_reference_problem


@pytest.fixture(scope="module")
def setup():
    p = make_reference_problem()
    ops = db.assemble(p, db.build_mesh(8, "geometric", 1.3))
    return p, ops


def test_energy_parts_match_direct_quadratic_forms(setup, rng):
    p, ops = setup
    u = rng.standard_normal(ops.n_dofs)
    v = rng.standard_normal(ops.n_dofs)
    w = rng.standard_normal(9)
    parts = diagnostics.energy_parts(u, v, w, ops, p)
    assert_close(parts.kinetic, 0.5 * v @ (ops.mass @ v), 1e-13, "kinetic")
    assert_close(parts.bending, 0.5 * u @ (ops.stiff_sigma @ u), 1e-13,
                 "bending")
    assert_close(parts.tension, 0.5 * u @ (ops.stiff_q @ u), 1e-13, "tension")
    mids = 0.5 * (w[:-1] + w[1:])
    hist = 0.5 * p.gamma * p.tau * (1.0 / 8.0) * np.sum(mids ** 2)
    assert_close(parts.history, hist, 1e-13, "history")
    assert_close(parts.total,
                 parts.kinetic + parts.bending + parts.tension + parts.history,
                 1e-15, "total")
    assert_close(diagnostics.energy(u, v, w, ops, p), parts.total, 1e-15)


def test_constant_history_integrates_exactly(setup):
    # For w == c the midpoint rule is exact:
    # E_hist = gamma tau c^2 / 2, G_hist = gamma c^2 (1 - e^{-2 tau}) / 2
    # (the G weight is integrated per panel at midpoints, so compare to
    # the same panel sum, not the closed form).
    p, ops = setup
    c = 1.7
    w = np.full(11, c)
    parts = diagnostics.energy_parts(np.zeros(ops.n_dofs),
                                     np.zeros(ops.n_dofs), w, ops, p)
    assert_close(parts.history, 0.5 * p.gamma * p.tau * c * c, 1e-14)
    g = diagnostics.lyapunov_g(np.zeros(ops.n_dofs), np.zeros(ops.n_dofs),
                               w, ops, p)
    exact = p.gamma * p.tau * c * c * float(
        np.mean(np.exp(-2.0 * p.tau * (np.arange(10) + 0.5) / 10.0)))
    assert_close(g, exact, 1e-14)
    # Midpoint quadrature of the smooth weight is second order accurate.
    closed_form = p.gamma * c * c * (1.0 - math.exp(-2.0 * p.tau)) / 2.0
    assert abs(g - closed_form) < 1e-3 * closed_form


def test_dissipation_residual_arithmetic():
    row0 = diagnostics.DiagnosticsRow(
        t=0.0, energy=4.0, kinetic=0, bending=0, tension=0, history=0,
        lyap_g=0.0, lyap_l=4.0, tip_u=0.0, tip_ut=1.0, tip_ut_delay=0.5,
        diss_residual=0.0, sandwich_ok=True)
    row1 = diagnostics.DiagnosticsRow(
        t=0.5, energy=3.0, kinetic=0, bending=0, tension=0, history=0,
        lyap_g=0.0, lyap_l=3.0, tip_u=0.0, tip_ut=0.0, tip_ut_delay=0.5,
        diss_residual=0.0, sandwich_ok=True)
    # (3-4)/0.5 + C*(0.5^2 + 0.5^2) with C = 2 -> -2 + 1 = -1
    assert_close(diagnostics.dissipation_residual(row0, row1, 2.0), -1.0,
                 1e-14)
    with pytest.raises(ValueError):
        diagnostics.dissipation_residual(row1, row0, 2.0)


def test_sandwich_check():
    assert diagnostics.sandwich_ok(1.0, 1.0, 0.9, 1.1)
    assert diagnostics.sandwich_ok(1.0, 0.9, 0.9, 1.1)
    assert not diagnostics.sandwich_ok(1.0, 0.89, 0.9, 1.1)
    assert not diagnostics.sandwich_ok(1.0, 1.11, 0.9, 1.1)
    assert diagnostics.sandwich_ok(1.0, 1.11, 0.9, 1.1, slack=0.01)


def test_fit_recovers_synthetic_rate(reference_report):
    times = np.linspace(0.0, 30.0, 301)
    energies = 4.0 * np.exp(-2.0 * times)
    fit = diagnostics.fit_decay(times, energies, tau=0.5)
    assert_close(fit.omega, 2.0, 1e-10, "omega")
    assert fit.r2 > 1.0 - 1e-12
    assert fit.m_theory is None
    assert fit.envelope_status == "not_reached"
    assert not fit.insufficient_decay

    # With the reference constants, t >= M is reached at 2M and the
    # synthetic decay sits far below the envelope.
    m = reference_report.M
    times = np.linspace(0.0, 2.0 * m, 2001)
    energies = 4.0 * np.exp(-2.0 * times) + 1e-30
    fit = diagnostics.fit_decay(times, energies, tau=0.5,
                                report=reference_report)
    assert fit.envelope_status == "satisfied"
    assert fit.m_theory == m


def test_fit_flags_envelope_violation(reference_report):
    m = reference_report.M
    times = np.linspace(0.0, 2.0 * m, 400)
    # Too slow: stays above exp(1 - t/M) * E(0) at late times.
    energies = 4.0 * np.exp(-times / (4.0 * m))
    fit = diagnostics.fit_decay(times, energies, tau=0.5,
                                report=reference_report)
    assert fit.envelope_status == "violated"


def test_fit_needs_enough_points():
    times = np.linspace(0.0, 1.0, 5)
    with pytest.raises(InsufficientDecay):
        diagnostics.fit_decay(times, np.exp(-times), tau=0.5)


def test_fit_window_start_override():
    times = np.linspace(0.0, 10.0, 101)
    energies = np.exp(-2.0 * times)
    energies[times < 3.0] = 1.0  # flat transient before decay sets in
    fit = diagnostics.fit_decay(times, energies, tau=0.5, t_start=3.0)
    assert_close(fit.omega, 2.0, 1e-6, "omega")
    assert fit.window[0] >= 3.0
