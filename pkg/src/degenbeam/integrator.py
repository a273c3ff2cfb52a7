"""Time integration of the closed loop by the trapezoidal rule.

The semidiscrete system in first order form is

    u' = v
    M v' = -(K_sigma + K_q) u - e1 (k1 v(1) + k2 v(1, t - tau))

where e1 picks the tip value dof.  One trapezoidal step solves a single
constant SPD system (factored once); the instantaneous damping sits
inside it, the delayed trace enters as known data read from the history
buffer at lags tau and tau - dt and averaged to the half step.  With
both gains zero the step conserves the discrete energy exactly, so any
drift there measures solver roundoff, not scheme error.

The step size is tied to the buffer: dt = tau / n_hist, which makes the
delay transport exact.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import diagnostics
from .constants import ConstantsReport, decay_constant, dissipation_constant
from .delay import HistoryBuffer
from .discretization import DiscreteOperators, FactoredSpd, interpolate
from .errors import (
    EpsilonTooLarge,
    GainConditionViolated,
    GammaOutsideWindow,
    LinearSolveFailure,
    SingularSystem,
)
from .model import BeamProblem


@dataclasses.dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping controls.

    ``dt`` is never set directly: it is tau / n_hist so the history
    buffer advances exactly one slot per step.  ``theta`` is fixed at
    the trapezoidal value; it is recorded so a future scheme variant
    has a place to live.
    """

    n_hist: int
    t_final: float
    output_stride: int = 1
    scheme: str = "trapezoidal"
    theta: float = 0.5

    def __post_init__(self):
        if self.n_hist < 1:
            raise ValueError(f"n_hist = {self.n_hist} must be at least 1")
        if self.t_final <= 0.0:
            raise ValueError(f"t_final = {self.t_final:g} must be positive")
        if self.output_stride < 1:
            raise ValueError(f"output_stride = {self.output_stride} must be >= 1")
        if self.scheme != "trapezoidal":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.theta != 0.5:
            raise ValueError("only the trapezoidal weight theta = 0.5 is supported")

    def dt(self, tau: float) -> float:
        return tau / self.n_hist


@dataclasses.dataclass
class SimState:
    """State at one time level.  ``u`` and ``v`` are fresh arrays per
    step; the history buffer is shared and advanced in place."""

    u: np.ndarray
    v: np.ndarray
    history: HistoryBuffer
    t: float
    step_index: int


class Stepper:
    """Factored trapezoidal stepper for one problem and mesh."""

    def __init__(self, ops: DiscreteOperators, problem: BeamProblem, dt: float):
        self.ops = ops
        self.problem = problem
        self.dt = dt
        self._k = ops.stiffness
        self._m = ops.mass
        self._e_tip = ops.tip_vector()
        a_sys = (self._m + 0.25 * dt * dt * self._k
                 + 0.5 * dt * problem.kappa1 * np.outer(self._e_tip, self._e_tip))
        try:
            self._factored = FactoredSpd(a_sys)
        except SingularSystem as exc:
            raise LinearSolveFailure(f"stepper system not factorable: {exc}") from exc

    def step(self, state: SimState) -> SimState:
        """Advance one step of size dt."""
        dt = self.dt
        n_hist = state.history.n_hist
        w_tau = state.history.sample_steps(n_hist)
        w_near = state.history.sample_steps(max(n_hist - 1, 0))
        w_mid = 0.5 * (w_tau + w_near)

        ku = self._k @ state.u
        kv = self._k @ state.v
        tip_v = state.v[self.ops.tip_value]
        rhs = (self._m @ state.v
               - 0.25 * dt * dt * kv
               - 0.5 * dt * self.problem.kappa1 * tip_v * self._e_tip
               - dt * ku
               - dt * self.problem.kappa2 * w_mid * self._e_tip)
        v_new = self._factored.solve(rhs)
        u_new = state.u + 0.5 * dt * (state.v + v_new)
        state.history.push_and_sample(float(v_new[self.ops.tip_value]))
        return SimState(u=u_new, v=v_new, history=state.history,
                        t=state.t + dt, step_index=state.step_index + 1)


@dataclasses.dataclass
class TimeSeries:
    """Diagnostics trace of one run plus everything needed to audit it.

    ``rows`` samples every ``output_stride`` steps; ``step_energy`` and
    ``step_residual`` are kept at full step resolution so monotonicity
    can be audited regardless of the stride.
    """

    rows: list[diagnostics.DiagnosticsRow]
    step_energy: np.ndarray
    step_residual: np.ndarray
    problem: BeamProblem
    dt: float
    n_hist: int
    output_stride: int
    constants: ConstantsReport | None
    final_state: SimState

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def energy(self) -> np.ndarray:
        return self.column("energy")

    @property
    def e0(self) -> float:
        return self.rows[0].energy

    @property
    def step_t(self) -> np.ndarray:
        return np.arange(self.step_energy.size) * self.dt


def initial_state(ops: DiscreteOperators, problem: BeamProblem,
                  cfg: SchemeConfig, u0, u1, f0) -> SimState:
    """Interpolate initial data and pre-fill the history buffer.

    ``u0`` and ``u1`` are callables (or (callable, derivative) pairs)
    for the initial displacement and velocity; ``f0(theta)`` is the tip
    velocity history on theta in (-tau, 0].
    """
    def dofs_for(datum):
        if isinstance(datum, tuple):
            fn, dfn = datum
        else:
            fn, dfn = datum, None
        return ops.restrict(interpolate(ops.mesh, fn, dfn))

    u = dofs_for(u0)
    v = dofs_for(u1)
    history = HistoryBuffer.from_history(f0, cfg.n_hist, problem.tau)
    history.set_current(float(v[ops.tip_value]))
    return SimState(u=u, v=v, history=history, t=0.0, step_index=0)


def run(problem: BeamProblem, ops: DiscreteOperators, cfg: SchemeConfig,
        u0, u1, f0,
        constants: ConstantsReport | None | str = "auto") -> TimeSeries:
    """Integrate to t_final, emitting a diagnostics row every
    ``output_stride`` steps (plus the initial one).

    ``constants`` controls the Lyapunov weighting: ``"auto"`` derives
    the report from the problem when the gains admit one and otherwise
    falls back to the bare energy (epsilon = 0), as needed for forced
    runs outside the admissible gain region; pass a report to pin it,
    or None to skip it explicitly.
    """
    if constants == "auto":
        try:
            constants = decay_constant(problem)
        except (GammaOutsideWindow, GainConditionViolated, EpsilonTooLarge,
                ValueError):
            constants = None
    epsilon = constants.epsilon if constants is not None else 0.0
    theta1 = constants.Theta1 if constants is not None else 1.0
    theta2 = constants.Theta2 if constants is not None else 1.0
    c_rate = dissipation_constant(problem)

    dt = cfg.dt(problem.tau)
    stepper = Stepper(ops, problem, dt)
    state = initial_state(ops, problem, cfg, u0, u1, f0)
    n_steps = int(round(cfg.t_final / dt))

    rows: list[diagnostics.DiagnosticsRow] = []
    step_energy = np.empty(n_steps + 1)
    step_residual = np.zeros(max(n_steps, 0))

    def emit(st: SimState, residual: float) -> None:
        w = st.history.as_array()
        parts = diagnostics.energy_parts(st.u, st.v, w, ops, problem)
        g_val = diagnostics.lyapunov_g(st.u, st.v, w, ops, problem)
        e_val = parts.total
        l_val = e_val + epsilon * g_val
        rows.append(diagnostics.DiagnosticsRow(
            t=st.t, energy=e_val,
            kinetic=parts.kinetic, bending=parts.bending,
            tension=parts.tension, history=parts.history,
            lyap_g=g_val, lyap_l=l_val,
            tip_u=float(st.u[ops.tip_value]),
            tip_ut=float(st.v[ops.tip_value]),
            tip_ut_delay=st.history.sample_steps(st.history.n_hist),
            diss_residual=residual,
            sandwich_ok=diagnostics.sandwich_ok(e_val, l_val, theta1, theta2),
        ))

    step_energy[0] = diagnostics.energy(
        state.u, state.v, state.history.as_array(), ops, problem)
    emit(state, 0.0)
    for k in range(1, n_steps + 1):
        y_old = float(state.v[ops.tip_value])
        w_old = state.history.sample_steps(cfg.n_hist)
        state = stepper.step(state)
        y_new = float(state.v[ops.tip_value])
        w_new = state.history.sample_steps(cfg.n_hist)
        step_energy[k] = diagnostics.energy(
            state.u, state.v, state.history.as_array(), ops, problem)
        v_hat = 0.5 * (y_old + y_new)
        w_bar = 0.5 * (w_old + w_new)
        step_residual[k - 1] = (
            (step_energy[k] - step_energy[k - 1]) / dt
            + c_rate * (v_hat * v_hat + w_bar * w_bar))
        if k % cfg.output_stride == 0 or k == n_steps:
            emit(state, float(step_residual[k - 1]))

    return TimeSeries(rows=rows, step_energy=step_energy,
                      step_residual=step_residual, problem=problem, dt=dt,
                      n_hist=cfg.n_hist, output_stride=cfg.output_stride,
                      constants=constants, final_state=state)
