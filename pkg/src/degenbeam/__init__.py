"""Simulation and verification toolkit for a degenerate beam with
delayed boundary damping.

The package integrates the closed loop, derives the full chain of
stability constants, and cross-checks every claim that can be checked
numerically: boundary energy dissipation, two-sided Lyapunov
equivalence, the exponential decay envelope, generator dissipativity,
and the weighted-space inequalities underpinning the analysis.
"""

from .constants import (
    ChoicePolicy,
    ConstantsReport,
    decay_constant,
    decay_envelope,
    dissipation_constant,
    equivalence_constants,
    observability_constants,
)
from .delay import HistoryBuffer
from .diagnostics import DecayFit, DiagnosticsRow, fit_decay
from .discretization import (
    AuxiliarySolution,
    DiscreteOperators,
    Mesh,
    ResolventSolution,
    assemble,
    auxiliary_solve,
    build_mesh,
    resolvent_solve,
)
from .inequalities import (
    CampaignReport,
    InequalityCheck,
    ProbeFunction,
    check_remark_inequalities,
    check_trace_bounds,
    run_campaign,
)
from .integrator import SchemeConfig, SimState, Stepper, TimeSeries, run
from .model import (
    BeamProblem,
    CoefficientFn,
    ValidationReport,
    classify_degeneracy,
    compute_iota_sigma,
    gamma_window,
    validate,
)
from .spectral import (
    GeneratorMatrix,
    SpectrumReport,
    assemble_generator,
    dissipativity_max,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "AuxiliarySolution",
    "BeamProblem",
    "CampaignReport",
    "ChoicePolicy",
    "CoefficientFn",
    "ConstantsReport",
    "DecayFit",
    "DiagnosticsRow",
    "DiscreteOperators",
    "GeneratorMatrix",
    "HistoryBuffer",
    "InequalityCheck",
    "Mesh",
    "ProbeFunction",
    "ResolventSolution",
    "SchemeConfig",
    "SpectrumReport",
    "SimState",
    "Stepper",
    "TimeSeries",
    "ValidationReport",
    "__version__",
    "assemble",
    "assemble_generator",
    "auxiliary_solve",
    "build_mesh",
    "check_remark_inequalities",
    "check_trace_bounds",
    "classify_degeneracy",
    "compute_iota_sigma",
    "decay_constant",
    "decay_envelope",
    "dissipation_constant",
    "dissipativity_max",
    "equivalence_constants",
    "fit_decay",
    "gamma_window",
    "observability_constants",
    "resolvent_solve",
    "run",
    "run_campaign",
    "spectrum",
    "validate",
]
