"""Quadrature oracles for the weighted-space inequalities.

Each check integrates both sides of one inequality with adaptive
quadrature and reports them as numbers; nothing here depends on the
finite element discretization, which is what makes these oracles an
independent test bed for the constants used elsewhere.  The inequalities
are proven facts for functions vanishing at x = 0 (plus a vanishing
slope in the weakly degenerate trial space), so any violation beyond
quadrature roundoff indicates a formula bug.

Probes are random polynomials: derivatives stay analytic, so the oracle
carries no differentiation error, and degree 8 is enough to explore the
slack.  scipy's adaptive rule concentrates subdivisions toward x = 0
where the sigma-weighted integrands lose smoothness.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.integrate

from .errors import QuadratureNonConvergence
from .model import BeamProblem

__all__ = [
    "CampaignReport",
    "InequalityCheck",
    "ProbeFunction",
    "check_remark_inequalities",
    "check_trace_bounds",
    "run_campaign",
]

QUAD_TOL = 1e-11
RATIO_SLACK = 1e-10


@dataclasses.dataclass(frozen=True)
class ProbeFunction:
    """Polynomial probe with the trial-space constraints built in.

    ``clamped_slope`` marks probes drawn for the weakly degenerate trial
    space, where the slope must vanish at x = 0 as well.
    """

    poly: np.polynomial.Polynomial
    clamped_slope: bool

    @classmethod
    def random(cls, rng: np.random.Generator, clamped_slope: bool,
               degree: int = 8) -> "ProbeFunction":
        coeffs = rng.uniform(-1.0, 1.0, degree + 1)
        coeffs[0] = 0.0
        if clamped_slope:
            coeffs[1] = 0.0
        return cls(poly=np.polynomial.Polynomial(coeffs),
                   clamped_slope=clamped_slope)

    @classmethod
    def from_coefficients(cls, coeffs) -> "ProbeFunction":
        poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        if poly(0.0) != 0.0:
            raise ValueError("probe must vanish at x = 0")
        return cls(poly=poly, clamped_slope=poly.deriv()(0.0) == 0.0)

    def __call__(self, x):
        return self.poly(x)

    def derivative(self, x):
        return self.poly.deriv()(x)

    def second_derivative(self, x):
        return self.poly.deriv(2)(x)


@dataclasses.dataclass(frozen=True)
class InequalityCheck:
    """One lhs <= rhs comparison with both sides fully evaluated."""

    name: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0.0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0.0 else math.inf

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + RATIO_SLACK)


def _integrate(fn) -> float:
    value, abserr, *rest = scipy.integrate.quad(
        fn, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200,
        full_output=1)
    if len(rest) > 1:
        # infodict plus a message means quad gave up before the tolerance
        raise QuadratureNonConvergence(
            f"adaptive quadrature did not converge: {rest[1]}")
    if abserr > max(QUAD_TOL * 10.0, 1e-9 * abs(value)):
        raise QuadratureNonConvergence(
            f"quadrature error estimate {abserr:.2e} too large for "
            f"integral {value:.6e}")
    return float(value)


def _norms(problem: BeamProblem, probe: ProbeFunction) -> dict[str, float]:
    sigma, q = problem.sigma, problem.q
    return {
        "value_sq": _integrate(lambda x: probe(x) ** 2),
        "slope_sq": _integrate(lambda x: probe.derivative(x) ** 2),
        "q_slope_sq": _integrate(lambda x: q(x) * probe.derivative(x) ** 2),
        "sigma_curv_sq": _integrate(
            lambda x: sigma(x) * probe.second_derivative(x) ** 2),
    }


def check_remark_inequalities(problem: BeamProblem,
                              probe: ProbeFunction) -> list[InequalityCheck]:
    """Both chained value/slope bounds and the tip-slope bound.

    The caller supplies a probe vanishing at x = 0; all norms go through
    adaptive quadrature at tolerance 1e-11.
    """
    n = _norms(problem, probe)
    tip_slope_sq = probe.derivative(1.0) ** 2
    blend = 2.0 * (n["q_slope_sq"] / problem.q0
                   + n["sigma_curv_sq"]
                   / (problem.sigma_at_1 * (2.0 - problem.iota_sigma)))
    return [
        InequalityCheck("value_by_slope", n["value_sq"], n["slope_sq"]),
        InequalityCheck("slope_by_weighted_slope", n["slope_sq"],
                        n["q_slope_sq"] / problem.q0),
        InequalityCheck("tip_slope_by_blend", tip_slope_sq, blend),
    ]


def check_trace_bounds(problem: BeamProblem,
                       probe: ProbeFunction) -> list[InequalityCheck]:
    """Tip traces against the weighted norms, both links of each chain.

    The second links cap the weighted combinations by the energy norm
    int (sigma y''^2 + q y'^2); together the four pairs reproduce the
    trace estimates behind the auxiliary elliptic bound.
    """
    n = _norms(problem, probe)
    energy_sq = n["sigma_curv_sq"] + n["q_slope_sq"]
    tip_value_sq = probe(1.0) ** 2
    tip_slope_sq = probe.derivative(1.0) ** 2
    trace_cap = 2.0 * max(1.0 / (problem.sigma_at_1
                                 * (2.0 - problem.iota_sigma)),
                          1.0 / problem.q0)
    blend = 2.0 * (n["sigma_curv_sq"]
                   / (problem.sigma_at_1 * (2.0 - problem.iota_sigma))
                   + n["q_slope_sq"] / problem.q0)
    return [
        InequalityCheck("tip_value_by_weighted_slope", tip_value_sq,
                        n["q_slope_sq"] / problem.q0),
        InequalityCheck("weighted_slope_by_energy",
                        n["q_slope_sq"] / problem.q0,
                        energy_sq / problem.q0),
        InequalityCheck("tip_slope_by_trace_blend", tip_slope_sq, blend),
        InequalityCheck("trace_blend_by_energy_cap", blend,
                        trace_cap * energy_sq),
    ]


@dataclasses.dataclass(frozen=True)
class CampaignReport:
    """Aggregate of a randomized inequality campaign."""

    n_probes: int
    n_checks: int
    n_violations: int
    max_ratio: float
    per_inequality: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "n_probes": self.n_probes,
            "n_checks": self.n_checks,
            "n_violations": self.n_violations,
            "max_ratio": self.max_ratio,
            "per_inequality": self.per_inequality,
        }


def run_campaign(problems, n_probes: int = 500, seed: int = 42,
                 degree: int = 8) -> CampaignReport:
    """Randomized campaign over every problem in ``problems``.

    Draws ``n_probes`` fresh probes per problem, matching each probe to
    the problem's trial space (slope clamped at x = 0 for WD), and runs
    all seven checks on each.
    """
    problems = list(problems)
    rng = np.random.default_rng(seed)
    stats: dict[str, dict[str, float]] = {}
    n_checks = 0
    n_violations = 0
    max_ratio = 0.0
    for problem in problems:
        clamp = problem.degeneracy == "WD"
        for _ in range(n_probes):
            probe = ProbeFunction.random(rng, clamped_slope=clamp,
                                         degree=degree)
            checks = (check_remark_inequalities(problem, probe)
                      + check_trace_bounds(problem, probe))
            for chk in checks:
                entry = stats.setdefault(
                    chk.name, {"violations": 0, "max_ratio": 0.0})
                entry["max_ratio"] = max(entry["max_ratio"], chk.ratio)
                if not chk.holds:
                    entry["violations"] += 1
                    n_violations += 1
                max_ratio = max(max_ratio, chk.ratio)
                n_checks += 1
    return CampaignReport(
        n_probes=n_probes * len(problems),
        n_checks=n_checks,
        n_violations=n_violations,
        max_ratio=max_ratio,
        per_inequality=stats,
    )
