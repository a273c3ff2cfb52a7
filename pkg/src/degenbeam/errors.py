"""Exception types raised by the toolkit.

Every error names the hypothesis or numerical step that failed, so a
caller (or the command line driver) can report which assumption broke
rather than a bare stack trace.
"""


class DegenbeamError(Exception):
    """Base class for all toolkit errors."""


# ---- model / hypothesis validation ----

class NonPositiveSigma(DegenbeamError):
    """Rigidity coefficient is zero or negative at an interior point."""


class DivergentSup(DegenbeamError):
    """The degeneracy index sup x|s'(x)|/s(x) keeps growing under refinement."""


class OutOfAdmissibleRange(DegenbeamError):
    """Degeneracy index outside (0, 2); neither boundary class applies."""


class GainConditionViolated(DegenbeamError):
    """Instantaneous gain does not dominate the delayed gain."""


class GammaOutsideWindow(DegenbeamError):
    """History weight outside [|k2|, 2*k1 - |k2|]."""


class EpsilonTooLarge(DegenbeamError):
    """Perturbation weight breaks the two-sided energy equivalence."""


class DegenerateAtRightEnd(DegenbeamError):
    """Rigidity vanishes at x = 1 where the feedback acts."""


class TimeBelowM(DegenbeamError):
    """Decay envelope queried at a time before it is guaranteed."""


# ---- discretization ----

class BadGrading(DegenbeamError):
    """Mesh grading parameters outside the supported range."""


class QuadratureAtDegeneracy(DegenbeamError):
    """A quadrature node landed exactly on the degenerate endpoint."""


class SingularSystem(DegenbeamError):
    """Linear system factorization failed or residual too large."""


class BoundViolation(DegenbeamError):
    """A proved a-priori bound failed numerically (assembly bug)."""


# ---- time integration / diagnostics ----

class LinearSolveFailure(DegenbeamError):
    """Implicit step solve failed."""


class InsufficientDecay(DegenbeamError):
    """Energy never dropped enough for a reliable decay-rate fit."""


# ---- spectral ----

class EigSolverFailure(DegenbeamError):
    """Dense eigenvalue solver did not converge."""


# ---- quadrature oracle ----

class QuadratureNonConvergence(DegenbeamError):
    """Adaptive quadrature did not reach the requested tolerance."""
