"""Generator assembly and eigenvalue diagnostics.

The dense action oracle rebuilds A componentwise from the operators; the
similarity test cross-checks the two eigenvalue routes against each other.
"""

import numpy as np
import pytest

import degenbeam as db
from degenbeam.spectral import assemble_generator, dissipativity_max, spectrum


def _problem(kappa1, kappa2, gamma, strict=True):
    return db.BeamProblem.create(
        db.CoefficientFn.power(0.5), db.CoefficientFn.constant(1.0),
        kappa1=kappa1, kappa2=kappa2, tau=0.5, gamma=gamma, strict=strict)


def test_undamped_limit_is_skew_plus_transport():
    # kappa = 0 decouples the wave block from the history block: the
    # similarity-transformed (u, v) block must be exactly skew and the
    # w block pure upwind transport at rate n_hist / tau.
    prob = _problem(0.0, 0.0, 0.0, strict=False)
    gen = assemble_generator(prob, db.build_mesh(8, "uniform", 1.0), n_hist=4)
    uv = gen.A_tilde[gen.uv_slice(), gen.uv_slice()]
    assert np.max(np.abs(uv + uv.T)) == 0.0
    assert np.max(np.abs(np.linalg.eigvals(uv).real)) < 1e-10

    nd = gen.n_dofs
    w_block = gen.A_tilde[2 * nd:, 2 * nd:]
    assert np.all(np.diag(w_block) == -8.0)
    # gamma = 0 leaves the history block weightless in the inner product
    assert np.max(np.abs(gen.Hmat[2 * nd:, 2 * nd:])) == 0.0


def test_action_matches_componentwise_rebuild(reference_problem):
    mesh = db.build_mesh(8, "uniform", 1.0)
    ops = db.assemble(reference_problem, mesh)
    gen = assemble_generator(reference_problem, mesh, n_hist=4, ops=ops)
    rng = np.random.default_rng(3)
    y = rng.standard_normal(gen.size)
    a = gen.A @ y
    nd = gen.n_dofs

    # displacement rows copy the velocity block verbatim
    assert np.array_equal(a[:nd], y[nd:2 * nd])

    # momentum rows: M a_v = -K u - e (kappa1 v(1) + kappa2 w(1))
    e_tip = ops.tip_vector()
    v_tip = e_tip @ y[nd:2 * nd]
    rhs = -ops.stiffness @ y[:nd] - e_tip * (
        reference_problem.kappa1 * v_tip + reference_problem.kappa2 * y[-1])
    resid = ops.mass @ a[nd:2 * nd] - rhs
    assert np.max(np.abs(resid)) < 1e-12 * np.max(np.abs(rhs))

    # history rows: upwind differences with v(1) feeding the first panel
    rate = 4 / reference_problem.tau
    w = y[2 * nd:]
    expect = rate * np.concatenate([[v_tip - w[0]], w[:-1] - w[1:]])
    assert np.array_equal(a[2 * nd:], expect)

    # inverse-free pencil states the same thing without the mass solve
    assert np.max(np.abs(gen.E @ a - gen.A0 @ y)) < 1e-12 * np.max(np.abs(rhs))


def test_similarity_preserves_spectrum(reference_problem):
    gen = assemble_generator(reference_problem, db.build_mesh(4, "uniform", 1.0),
                             n_hist=3)
    ev_a = np.linalg.eigvals(gen.A)
    ev_t = np.linalg.eigvals(gen.A_tilde)
    # two-sided nearest-neighbour distance avoids sort-order ties
    dist = np.abs(ev_a[:, None] - ev_t[None, :])
    assert max(dist.min(axis=0).max(), dist.min(axis=1).max()) < 1e-9


def test_dissipativity_nonpositive_across_gamma_window():
    mesh = db.build_mesh(8, "uniform", 1.0)
    for gamma in (1.0, 2.0, 3.0):  # both window edges and the midpoint
        gen = assemble_generator(_problem(2.0, 1.0, gamma), mesh, n_hist=8)
        assert dissipativity_max(gen, n_probes=500, seed=7) < 1e-12


def test_reference_spectrum_on_resolving_mesh(reference_problem):
    gen = assemble_generator(reference_problem, db.build_mesh(16, "uniform", 1.0),
                             n_hist=25)
    rep = spectrum(gen, n_probes=200, seed=11)
    assert rep.n_unstable == 0
    assert rep.abscissa < -0.5
    assert rep.dissipativity_max < 1e-12
    assert rep.noise_scale > 0.0
    assert rep.eigenvalues.shape == (gen.size,)
    assert "abscissa" in rep.summary()


def test_noise_guard_on_graded_mesh(reference_problem, reference_ops):
    # The graded mesh puts the tip coupling below eigensolver noise; the
    # report must not count noise-level real parts as unstable modes.
    gen = assemble_generator(reference_problem, db.build_mesh(32, "geometric", 1.3),
                             n_hist=25, ops=reference_ops)
    rep = spectrum(gen, n_probes=0)
    assert rep.n_unstable == 0
    assert abs(rep.abscissa) <= 8.0 * rep.noise_scale


def test_weak_gain_is_detected_unstable():
    # kappa1 < |kappa2| violates the gain condition; with the delay
    # resolved (n_hist = 50) the spectrum crosses into the right half
    # plane.  Coarser history grids diffuse the delay signal and mask it.
    prob = _problem(0.5, 1.0, 1.0, strict=False)
    gen = assemble_generator(prob, db.build_mesh(32, "uniform", 1.0), n_hist=50)
    rep = spectrum(gen, n_probes=0)
    assert rep.abscissa > 1e-3
    assert rep.n_unstable >= 2


def test_history_grid_validation(reference_problem):
    with pytest.raises(ValueError):
        assemble_generator(reference_problem, db.build_mesh(4, "uniform", 1.0),
                           n_hist=0)
