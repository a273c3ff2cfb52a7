"""Stability constants for the delayed-feedback degenerate beam.

Everything the exponential decay estimate needs is computed here from
the problem data alone:

* the boundary dissipation rate ``C_k1k2`` extracted at the damped end,
* the equivalence band ``Theta1 * E <= L <= Theta2 * E`` between the
  energy E and the perturbed functional L = E + epsilon * G,
* the observability constants ``C0, C1, delta, C2_delta, C3`` bounding
  tip traces by energy differences,
* the decay time constant ``M`` entering the envelope
  ``E(t) <= exp(1 - t / M) * E(0)`` valid for ``t >= M``.

The chain leaves two quantities free within open admissible intervals:
the perturbation weight epsilon and the absorption weight delta_tilde.
A :class:`ChoicePolicy` pins both as fixed fractions of their admissible
suprema; every chosen value and both suprema are recorded in the report
so independent recomputation can audit each step.
"""

from __future__ import annotations

import dataclasses
import math

from .errors import EpsilonTooLarge, GammaOutsideWindow, TimeBelowM
from .model import BeamProblem


@dataclasses.dataclass(frozen=True)
class ChoicePolicy:
    """How to pin the free parameters, as fractions of their suprema."""

    eps_fraction: float = 0.5
    delta_tilde_fraction: float = 0.5

    def __post_init__(self):
        for name in ("eps_fraction", "delta_tilde_fraction"):
            val = getattr(self, name)
            if not (0.0 < val < 1.0):
                raise ValueError(f"{name} = {val:g} must lie strictly in (0, 1)")


DEFAULT_POLICY = ChoicePolicy()


@dataclasses.dataclass(frozen=True)
class ConstantsReport:
    """Every constant in the decay chain, plus the inputs it came from."""

    # inputs echoed for auditability
    kappa1: float
    kappa2: float
    gamma: float
    tau: float
    q0: float
    q1: float
    q2: float
    iota_sigma: float
    iota_sigma_q: float
    sigma_at_1: float
    q_at_1: float
    # boundary dissipation
    C_k1k2: float
    # equivalence band
    C_iota: float
    eps_max_equiv: float
    eps_max_energy: float
    epsilon: float
    Theta1: float
    Theta2: float
    # observability chain
    C0: float
    C1: float
    delta: float
    C2_delta: float
    C3: float
    # absorption choice and decay constant
    min_term: float
    delta_tilde_max: float
    delta_tilde: float
    M: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def dissipation_constant(problem: BeamProblem) -> float:
    """Rate constant of the boundary energy dissipation.

    The closed-loop energy satisfies
    ``dE/dt <= -C * (u_t(1, t)^2 + u_t(1, t - tau)^2)`` with
    ``C = min((gamma - |k2|)/2, k1 - (gamma + |k2|)/2)``.  The value is
    nonnegative exactly when gamma sits in the admissible window, zero
    on its edges.
    """
    k2 = abs(problem.kappa2)
    return min((problem.gamma - k2) / 2.0,
               problem.kappa1 - (problem.gamma + k2) / 2.0)


def equivalence_band_constant(problem: BeamProblem) -> float:
    """Constant C_iota with |L - E| <= epsilon * C_iota * E."""
    iota = problem.iota_sigma_q
    return 2.0 * max(1.0, 1.0 + iota / 4.0, (1.0 + iota / 8.0) / problem.q0)


def equivalence_constants(problem: BeamProblem,
                          epsilon: float) -> tuple[float, float, float]:
    """(Theta1, Theta2, C_iota) with Theta1*E <= E + epsilon*G <= Theta2*E.

    ``epsilon = 0`` is allowed and gives the trivial band (1, 1).
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon = {epsilon:g} must be nonnegative")
    c_iota = equivalence_band_constant(problem)
    if epsilon * c_iota >= 1.0:
        raise EpsilonTooLarge(
            f"epsilon = {epsilon:g} >= 1/C_iota = {1.0 / c_iota:g}; "
            "lower band Theta1 would not be positive")
    return 1.0 - epsilon * c_iota, 1.0 + epsilon * c_iota, c_iota


def _trace_constants(problem: BeamProblem) -> tuple[float, float, float, float]:
    """(C0, C1, delta, m) shared by the observability chain.

    ``m = max(1/q0, 2*C1**2)`` is the constant tying the tip traces to
    the energy norm; ``delta`` is the fixed Young weight built from it.
    """
    iota_sq = problem.iota_sigma_q
    q_at_1 = problem.q_at_1
    c0 = max(q_at_1 / 2.0, q_at_1 * iota_sq * iota_sq / 4.0)
    c1 = math.sqrt(max(1.0 / problem.q0,
                       1.0 / (problem.sigma_at_1 * (2.0 - problem.iota_sigma))))
    m = max(1.0 / problem.q0, 2.0 * c1 * c1)
    delta = (problem.q0 / 2.0) / m
    return c0, c1, delta, m


def observability_constants(problem: BeamProblem,
                            delta_tilde: float | None = None
                            ) -> tuple[float, float, float, float, float]:
    """(C0, C1, delta, C2_delta, C3) of the tip-trace observability chain.

    ``C2_delta`` depends on the absorption weight delta_tilde; when none
    is supplied the default policy value (half its supremum) is used.
    """
    c_rate = dissipation_constant(problem)
    if c_rate <= 0.0:
        raise GammaOutsideWindow(
            f"gamma = {problem.gamma:g} on or outside the open window; "
            "the dissipation rate vanishes and the chain is empty")
    c0, c1, delta, m = _trace_constants(problem)
    if delta_tilde is None:
        delta_tilde = DEFAULT_POLICY.delta_tilde_fraction * _delta_tilde_sup(problem, c0)
    if delta_tilde <= 0.0:
        raise ValueError(f"delta_tilde = {delta_tilde:g} must be positive")
    c2 = (m / (delta_tilde * problem.q0 * c_rate)
          + max(problem.kappa1 ** 2 / delta, problem.kappa2 ** 2 / delta) / c_rate)
    c3 = max(1.0, 2.0 * m * max(3.0 / problem.q0,
                                2.0 / (problem.sigma_at_1 * (2.0 - problem.iota_sigma))))
    return c0, c1, delta, c2, c3


def _min_term(problem: BeamProblem) -> float:
    """Absorption margin min(2 - iota_sq, 4*exp(-2*tau))."""
    return min(2.0 - problem.iota_sigma_q, 4.0 * math.exp(-2.0 * problem.tau))


def _delta_tilde_sup(problem: BeamProblem, c0: float) -> float:
    return _min_term(problem) / (2.0 * c0)


def decay_constant(problem: BeamProblem,
                   policy: ChoicePolicy = DEFAULT_POLICY) -> ConstantsReport:
    """Run the whole chain and return every constant in one report.

    Requires gamma strictly inside the admissible window (the rate
    constant must be positive) and a problem with q0 > 0 and combined
    degeneracy index below 2.
    """
    if problem.q0 <= 0.0:
        raise ValueError(f"q0 = {problem.q0:g} must be positive")
    if not (0.0 < problem.iota_sigma_q < 2.0):
        raise ValueError(
            f"combined index iota_sq = {problem.iota_sigma_q:g} outside (0, 2)")
    c_rate = dissipation_constant(problem)
    if c_rate <= 0.0:
        raise GammaOutsideWindow(
            f"gamma = {problem.gamma:g} is not strictly inside the window; "
            "no positive dissipation rate, decay constant undefined")

    c_iota = equivalence_band_constant(problem)
    eps_max_equiv = 1.0 / c_iota
    q_at_1 = problem.q_at_1
    if problem.kappa2 != 0.0:
        eps_energy_a = c_rate * q_at_1 / (2.0 * problem.kappa2 ** 2)
    else:
        eps_energy_a = math.inf
    eps_energy_b = c_rate / (1.0 + problem.gamma + 2.0 * problem.kappa1 ** 2 / q_at_1)
    eps_max_energy = min(eps_energy_a, eps_energy_b)

    epsilon = policy.eps_fraction * min(eps_max_energy, eps_max_equiv)
    theta1, theta2, _ = equivalence_constants(problem, epsilon)

    c0, c1, delta, _ = _trace_constants(problem)
    min_term = _min_term(problem)
    delta_tilde_max = _delta_tilde_sup(problem, c0)
    delta_tilde = policy.delta_tilde_fraction * delta_tilde_max
    _, _, _, c2, c3 = observability_constants(problem, delta_tilde)

    margin = min_term - 2.0 * delta_tilde * c0
    m_const = (theta2 + 2.0 * epsilon * c0 * c2 + 4.0 * epsilon * c0 * c3) \
        / (epsilon * margin)

    report = ConstantsReport(
        kappa1=problem.kappa1, kappa2=problem.kappa2, gamma=problem.gamma,
        tau=problem.tau, q0=problem.q0, q1=problem.q1, q2=problem.q2,
        iota_sigma=problem.iota_sigma, iota_sigma_q=problem.iota_sigma_q,
        sigma_at_1=problem.sigma_at_1, q_at_1=q_at_1,
        C_k1k2=c_rate, C_iota=c_iota, eps_max_equiv=eps_max_equiv,
        eps_max_energy=eps_max_energy, epsilon=epsilon,
        Theta1=theta1, Theta2=theta2,
        C0=c0, C1=c1, delta=delta, C2_delta=c2, C3=c3,
        min_term=min_term, delta_tilde_max=delta_tilde_max,
        delta_tilde=delta_tilde, M=m_const,
    )
    _check_report(report)
    return report


def _check_report(r: ConstantsReport) -> None:
    """Internal consistency: sign and ordering facts that must hold by
    construction; a failure here is a coding error, not a data error."""
    facts = [
        ("C_k1k2 > 0", r.C_k1k2 > 0.0),
        ("Theta1 > 0", r.Theta1 > 0.0),
        ("Theta1 + Theta2 == 2", abs(r.Theta1 + r.Theta2 - 2.0) < 1e-12),
        ("epsilon in (0, min of both caps)",
         0.0 < r.epsilon < min(r.eps_max_energy, r.eps_max_equiv)),
        ("delta_tilde in (0, sup)", 0.0 < r.delta_tilde < r.delta_tilde_max),
        ("absorption margin > 0", r.min_term - 2.0 * r.delta_tilde * r.C0 > 0.0),
        ("C3 >= 1", r.C3 >= 1.0),
        ("M > 0", r.M > 0.0),
    ]
    for name, ok in facts:
        if not ok:
            raise AssertionError(f"constants chain self-check failed: {name}")


def decay_envelope(report: ConstantsReport, energy0: float, t: float) -> float:
    """Envelope value exp(1 - t/M) * E(0); defined only for t >= M."""
    if t < report.M:
        raise TimeBelowM(
            f"envelope undefined at t = {t:g} < M = {report.M:g}")
    return math.exp(1.0 - t / report.M) * energy0
