"""Energy, Lyapunov functional and decay-rate diagnostics.

The closed-loop energy is

    E = 1/2 [ int(u_t^2 + sigma u_xx^2 + q u_x^2) dx
              + gamma tau int_0^1 u_t^2(1, t - s tau) ds ]

and the perturbed functional is L = E + epsilon G with

    G = int u_t (2 x u_x + iota_sq / 2 u) dx
        + gamma tau int_0^1 e^{-2 tau s} u_t^2(1, t - s tau) ds.

Both history integrals use the midpoint rule on the buffer's panels.  With
midpoint panels the trapezoidal stepper satisfies a per-step energy identity
whose right-hand side is a negative semidefinite form in the averaged traces,
so the computed energy is non-increasing to roundoff; endpoint-based weights
lose that exactness for under-resolved transients.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .constants import ConstantsReport
from .discretization import DiscreteOperators
from .errors import InsufficientDecay
from .model import BeamProblem

ENERGY_FLOOR_REL = 1e-14


@dataclasses.dataclass(frozen=True)
class EnergyParts:
    """The four summands of the closed-loop energy."""

    kinetic: float
    bending: float
    tension: float
    history: float

    @property
    def total(self) -> float:
        return self.kinetic + self.bending + self.tension + self.history


def energy_parts(u: np.ndarray, v: np.ndarray, w: np.ndarray,
                 ops: DiscreteOperators, problem: BeamProblem) -> EnergyParts:
    """Energy split into kinetic, bending, tension and history terms.

    ``w`` holds the tip-velocity history on the uniform lag grid
    s in [0, 1] (lag 0 first).
    """
    ds = 1.0 / (w.size - 1)
    mids = 0.5 * (w[:-1] + w[1:])
    hist = 0.5 * problem.gamma * problem.tau * ds * np.sum(mids * mids)
    return EnergyParts(
        kinetic=0.5 * float(v @ (ops.mass @ v)),
        bending=0.5 * float(u @ (ops.stiff_sigma @ u)),
        tension=0.5 * float(u @ (ops.stiff_q @ u)),
        history=float(hist),
    )


def energy(u: np.ndarray, v: np.ndarray, w: np.ndarray,
           ops: DiscreteOperators, problem: BeamProblem) -> float:
    return energy_parts(u, v, w, ops, problem).total


def lyapunov_g(u: np.ndarray, v: np.ndarray, w: np.ndarray,
               ops: DiscreteOperators, problem: BeamProblem) -> float:
    """Perturbation functional G (the cross term plus weighted history)."""
    iota = problem.iota_sigma_q
    cross = float(v @ (ops.cross_x @ u)) + 0.5 * iota * float(v @ (ops.mass @ u))
    ds = 1.0 / (w.size - 1)
    s_mid = (np.arange(w.size - 1) + 0.5) * ds
    mids = 0.5 * (w[:-1] + w[1:])
    hist = problem.gamma * problem.tau * ds * np.sum(
        np.exp(-2.0 * problem.tau * s_mid) * mids * mids)
    return cross + float(hist)


@dataclasses.dataclass(frozen=True)
class DiagnosticsRow:
    """One emitted diagnostics sample of a run."""

    t: float
    energy: float
    kinetic: float
    bending: float
    tension: float
    history: float
    lyap_g: float
    lyap_l: float
    tip_u: float
    tip_ut: float
    tip_ut_delay: float
    diss_residual: float
    sandwich_ok: bool


def dissipation_residual(row_k: DiagnosticsRow, row_k1: DiagnosticsRow,
                         c_rate: float) -> float:
    """Signed defect of the boundary dissipation estimate over one
    emitted interval:

        (E_{k+1} - E_k) / dt + C * (u_t(1)^2 + u_t(1, -tau)^2)

    with both traces taken at the interval midpoint.  Nonpositive up to
    scheme error when the estimate holds.
    """
    dt = row_k1.t - row_k.t
    if dt <= 0.0:
        raise ValueError("rows must be consecutive in time")
    v_mid = 0.5 * (row_k.tip_ut + row_k1.tip_ut)
    w_mid = 0.5 * (row_k.tip_ut_delay + row_k1.tip_ut_delay)
    return ((row_k1.energy - row_k.energy) / dt
            + c_rate * (v_mid * v_mid + w_mid * w_mid))


def sandwich_ok(e_val: float, l_val: float, theta1: float, theta2: float,
                slack: float = 0.0) -> bool:
    """Check Theta1 * E <= L <= Theta2 * E on computed numbers."""
    lo = theta1 * e_val
    hi = theta2 * e_val
    pad = slack * max(abs(lo), abs(hi), 1e-300)
    return (lo - pad) <= l_val <= (hi + pad)


@dataclasses.dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential decay fit of the energy trace."""

    omega: float              # fitted rate of E(t) ~ exp(-omega t)
    r2: float
    window: tuple[float, float]
    n_points: int
    m_theory: float | None
    envelope_status: str      # "satisfied" | "violated" | "not_reached"
    insufficient_decay: bool

    @property
    def envelope_satisfied(self) -> bool:
        return self.envelope_status == "satisfied"


def fit_decay(times: np.ndarray, energies: np.ndarray, tau: float,
              report: ConstantsReport | None = None,
              t_start: float | None = None) -> DecayFit:
    """Fit log E over [t_start, end] and audit the decay envelope.

    ``t_start`` defaults to ``tau``, past the first delay interval's
    transient.  Points where the energy has collapsed below
    ``1e-14 * E(0)`` are excluded from the fit.  When a constants report
    is supplied and the series reaches t >= M, every emitted sample past
    M is checked against the envelope exp(1 - t/M) * E(0); a series that
    ends before M reports ``"not_reached"`` rather than a silent pass.
    """
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if times.size != energies.size or times.size < 2:
        raise ValueError("need matching time and energy arrays")
    if t_start is None:
        t_start = tau
    e0 = energies[0]
    floor = ENERGY_FLOOR_REL * e0
    mask = (times >= t_start) & (energies > floor)
    if int(mask.sum()) < 10:
        raise InsufficientDecay(
            f"only {int(mask.sum())} usable points above the energy floor; "
            "need at least 10 for a fit")
    t_fit = times[mask]
    log_e = np.log(energies[mask])
    slope, intercept = np.polyfit(t_fit, log_e, 1)
    pred = slope * t_fit + intercept
    ss_res = float(np.sum((log_e - pred) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0

    insufficient = not bool(np.any(energies < 0.9 * e0))

    status = "not_reached"
    m_theory = report.M if report is not None else None
    if m_theory is not None:
        past = times >= m_theory
        if np.any(past):
            env = np.exp(1.0 - times[past] / m_theory) * e0
            status = "satisfied" if np.all(energies[past] <= env) else "violated"
    return DecayFit(omega=float(-slope), r2=r2,
                    window=(float(t_fit[0]), float(t_fit[-1])),
                    n_points=int(t_fit.size), m_theory=m_theory,
                    envelope_status=status, insufficient_decay=insufficient)
