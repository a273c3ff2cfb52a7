import numpy as np
import pytest

import degenbeam as db


def make_reference_problem() -> db.BeamProblem:
    return db.BeamProblem.create(
        db.CoefficientFn.power(0.5), db.CoefficientFn.constant(1.0),
        kappa1=2.0, kappa2=1.0, tau=0.5, gamma="auto-midpoint")


def cubic_initial():
    u0 = db.CoefficientFn.parse("x^2 * (3 - 2*x)")
    zero = db.CoefficientFn.parse("0")
    return (u0, u0.derivative), (zero, zero.derivative), zero


@pytest.fixture(scope="session")
def reference_problem():
    return make_reference_problem()


@pytest.fixture(scope="session")
def reference_ops(reference_problem):
    mesh = db.build_mesh(32, "geometric", 1.3)
    return db.assemble(reference_problem, mesh)


@pytest.fixture(scope="session")
def uniform_ops(reference_problem):
    mesh = db.build_mesh(32, "uniform")
    return db.assemble(reference_problem, mesh)


@pytest.fixture(scope="session")
def reference_series(reference_problem, reference_ops):
    u0, u1, f0 = cubic_initial()
    cfg = db.SchemeConfig(n_hist=50, t_final=20.0, output_stride=10)
    return db.run(reference_problem, reference_ops, cfg, u0, u1, f0)


@pytest.fixture(scope="session")
def reference_report(reference_problem):
    return db.decay_constant(reference_problem)


def assert_close(value, expected, rel, label=""):
    scale = max(abs(expected), 1e-300)
    err = abs(value - expected) / scale
    assert err <= rel, \
        f"{label or 'value'} = {value!r}, expected {expected!r} (rel {err:.3e})"


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260819)
