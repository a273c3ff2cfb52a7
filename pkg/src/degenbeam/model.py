"""Problem data for the degenerate beam with delayed tip damping.

The model is a fourth order beam equation on (0, 1) whose flexural
rigidity sigma vanishes at the left end, under tension q, closed by a
tip velocity feedback with an instantaneous gain k1 and a delayed gain
k2 acting after a lag tau:

    u_tt + (sigma(x) u_xx)_xx - (q(x) u_x)_x = 0
    (sigma u_xx)_x(1, t) - q(1) u_x(1, t) = k1 u_t(1, t) + k2 u_t(1, t - tau)

How strongly sigma degenerates is measured by the index

    iota_sigma = sup_{0 < x <= 1}  x |sigma'(x)| / sigma(x)

which selects the boundary class at x = 0: values in (0, 1) keep both
the clamped value and the clamped slope (weak degeneracy), values in
[1, 2) keep only the clamped value (strong degeneracy).  The stability
theory also needs the combined index

    iota_sq = max(iota_sigma, q2 / q0)

with q0 <= q <= q1 and |q'| <= q2, and a history weight gamma confined
to the window [|k2|, 2 k1 - |k2|], which is nonempty exactly when
k1 > |k2|.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from . import expressions
from .errors import (
    DegenerateAtRightEnd,
    DivergentSup,
    GainConditionViolated,
    GammaOutsideWindow,
    NonPositiveSigma,
    OutOfAdmissibleRange,
)

# Grid used when scanning a coefficient for sup / min / max quantities.
# Geometric clustering toward the degenerate end; the smallest sample is
# well below any mesh scale the solver will ever use.
_SCAN_SMALLEST = 1e-10
_SCAN_RATIO = 1.2
_SUP_DIVERGENCE_CAP = 10.0


class CoefficientFn:
    """A coefficient on [0, 1] with an exact derivative.

    Three representations are supported:

    * ``power``: x**alpha (derivative analytic),
    * ``expression``: a string in the small arithmetic grammar of
      :mod:`degenbeam.expressions` (derivative symbolic),
    * ``tabulated``: samples on a grid, linearly interpolated, with the
      derivative supplied as its own sample table.
    """

    def __init__(self, kind: str, fn: Callable, dfn: Callable, label: str):
        self.kind = kind
        self._fn = fn
        self._dfn = dfn
        self.label = label
        self.alpha: float | None = None

    # -- constructors --

    @classmethod
    def power(cls, alpha: float) -> "CoefficientFn":
        alpha = float(alpha)
        obj = cls(
            "power",
            lambda x: np.asarray(x, dtype=float) ** alpha,
            lambda x: alpha * np.asarray(x, dtype=float) ** (alpha - 1.0),
            f"power:{alpha:g}",
        )
        obj.alpha = alpha
        return obj

    @classmethod
    def expression(cls, text: str) -> "CoefficientFn":
        node = expressions.parse(text)
        dnode = node.diff()
        return cls("expression", node, dnode, text)

    @classmethod
    def constant(cls, value: float) -> "CoefficientFn":
        return cls.expression(repr(float(value)))

    @classmethod
    def tabulated(cls, xs: Sequence[float], values: Sequence[float],
                  derivative_values: Sequence[float]) -> "CoefficientFn":
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=float)
        dvalues = np.asarray(derivative_values, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated coefficient needs a strictly increasing grid")
        if values.shape != xs.shape or dvalues.shape != xs.shape:
            raise ValueError("value and derivative tables must match the grid")
        return cls(
            "tabulated",
            lambda x: np.interp(np.asarray(x, dtype=float), xs, values),
            lambda x: np.interp(np.asarray(x, dtype=float), xs, dvalues),
            f"table[{xs.size}]",
        )

    @classmethod
    def parse(cls, spec: str) -> "CoefficientFn":
        """Build from a config-file value: ``power:alpha``, ``table:PATH``
        or an expression string."""
        spec = spec.strip()
        if spec.startswith("power:"):
            return cls.power(float(spec.split(":", 1)[1]))
        if spec.startswith("table:"):
            path = spec.split(":", 1)[1].strip()
            data = np.loadtxt(path, ndmin=2)
            if data.shape[1] < 3:
                raise ValueError(
                    f"coefficient table {path!r} needs columns x, value, derivative")
            return cls.tabulated(data[:, 0], data[:, 1], data[:, 2])
        return cls.expression(spec)

    # -- evaluation --

    def __call__(self, x):
        return self._fn(x)

    def derivative(self, x):
        return self._dfn(x)

    def __repr__(self):
        return f"CoefficientFn({self.label})"


def _scan_grid(grid_n: int) -> np.ndarray:
    """Geometric sample grid on (0, 1], clustered at the degenerate end."""
    n_ratio = int(math.ceil(math.log(1.0 / _SCAN_SMALLEST) / math.log(_SCAN_RATIO))) + 1
    n = max(int(grid_n), n_ratio)
    return np.logspace(math.log10(_SCAN_SMALLEST), 0.0, n)


def compute_iota_sigma(sigma: CoefficientFn, grid_n: int = 256) -> float:
    """Degeneracy index sup_{0 < x <= 1} x |sigma'(x)| / sigma(x).

    Power-law coefficients short-circuit to their exponent.  Other kinds
    are scanned on a geometric grid reaching down to 1e-10; the scan
    refuses to return a value when sigma is not positive on (0, 1] or
    when the supremum keeps climbing past any plausible index.
    """
    if sigma.kind == "power":
        return float(sigma.alpha)
    xs = _scan_grid(grid_n)
    vals = np.asarray(sigma(xs), dtype=float)
    if np.any(vals <= 0.0):
        bad = xs[np.argmax(vals <= 0.0)]
        raise NonPositiveSigma(f"sigma({bad:.3e}) = {vals[vals <= 0.0][0]:.3e} <= 0 on (0, 1]")
    ratios = xs * np.abs(np.asarray(sigma.derivative(xs), dtype=float)) / vals
    sup = float(np.max(ratios))
    if sup > _SUP_DIVERGENCE_CAP:
        x_at = xs[int(np.argmax(ratios))]
        raise DivergentSup(
            f"x|sigma'|/sigma reached {sup:.3e} at x = {x_at:.3e}; "
            "index does not settle below the admissible range")
    return sup


def classify_degeneracy(iota_sigma: float) -> str:
    """Boundary class from the degeneracy index: 'WD' on (0,1), 'SD' on [1,2)."""
    if not (0.0 < iota_sigma < 2.0):
        raise OutOfAdmissibleRange(
            f"degeneracy index {iota_sigma:.6g} outside (0, 2); "
            "no boundary class applies")
    return "WD" if iota_sigma < 1.0 else "SD"


def gamma_window(kappa1: float, kappa2: float) -> tuple[float, float]:
    """Admissible window [|k2|, 2*k1 - |k2|] for the history weight."""
    if kappa1 <= abs(kappa2):
        raise GainConditionViolated(
            f"gain condition violated: k1 = {kappa1:g} must exceed |k2| = {abs(kappa2):g}")
    return (abs(kappa2), 2.0 * kappa1 - abs(kappa2))


@dataclasses.dataclass(frozen=True)
class BeamProblem:
    """Validated coefficient and gain data for one closed-loop problem.

    Build through :meth:`create`, which computes q bounds, the degeneracy
    index, the boundary class and the resolved history weight.  Instances
    are immutable.
    """

    sigma: CoefficientFn
    q: CoefficientFn
    kappa1: float
    kappa2: float
    tau: float
    gamma: float
    q0: float
    q1: float
    q2: float
    iota_sigma: float
    iota_sigma_q: float
    degeneracy: str

    @classmethod
    def create(cls, sigma: CoefficientFn, q: CoefficientFn,
               kappa1: float, kappa2: float, tau: float,
               gamma: float | str | None = "auto-midpoint",
               grid_n: int = 256, strict: bool = True) -> "BeamProblem":
        """Assemble and classify a problem; raises on inadmissible data.

        ``gamma`` may be a number, or ``"auto-midpoint"`` / ``None`` to
        resolve to the window midpoint k1.  With ``strict=False`` the
        problem is built even when hypotheses fail (degeneracy becomes
        ``"none"`` when no class applies); :func:`validate` then reports
        which assumptions broke.  A nonpositive delay is always fatal.
        """
        if tau <= 0.0:
            raise ValueError(f"delay tau = {tau:g} must be positive")
        q0, q1, q2 = q_bounds(q, grid_n)
        if strict and q0 <= 0.0:
            raise ValueError(f"tension lower bound q0 = {q0:g} must be positive")
        iota = compute_iota_sigma(sigma, grid_n)
        try:
            degeneracy = classify_degeneracy(iota)
        except OutOfAdmissibleRange:
            if strict:
                raise
            degeneracy = "none"
        sigma_at_1 = float(sigma(1.0))
        if strict and sigma_at_1 <= 0.0:
            raise DegenerateAtRightEnd(
                f"sigma(1) = {sigma_at_1:g} <= 0; feedback end must be nondegenerate")
        if gamma is None or gamma == "auto-midpoint":
            gamma_val = float(kappa1)
        else:
            gamma_val = float(gamma)
        if strict:
            window = gamma_window(kappa1, kappa2)
            if not (window[0] <= gamma_val <= window[1]):
                raise GammaOutsideWindow(
                    f"history weight gamma = {gamma_val:g} outside "
                    f"[{window[0]:g}, {window[1]:g}]")
        iota_sq = max(iota, q2 / q0) if q0 > 0.0 else math.inf
        return cls(sigma=sigma, q=q, kappa1=float(kappa1), kappa2=float(kappa2),
                   tau=float(tau), gamma=gamma_val, q0=q0, q1=q1, q2=q2,
                   iota_sigma=iota, iota_sigma_q=iota_sq, degeneracy=degeneracy)

    @property
    def sigma_at_1(self) -> float:
        return float(self.sigma(1.0))

    @property
    def q_at_1(self) -> float:
        return float(self.q(1.0))

    def describe(self) -> dict:
        """Flat dict of the resolved problem data (for report embedding)."""
        return {
            "sigma": self.sigma.label,
            "q": self.q.label,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "tau": self.tau,
            "gamma": self.gamma,
            "q0": self.q0,
            "q1": self.q1,
            "q2": self.q2,
            "iota_sigma": self.iota_sigma,
            "iota_sigma_q": self.iota_sigma_q,
            "degeneracy": self.degeneracy,
        }


def q_bounds(q: CoefficientFn, grid_n: int = 256) -> tuple[float, float, float]:
    """(q0, q1, q2): min and max of q and max of |q'| on a scan grid."""
    xs = np.linspace(0.0, 1.0, max(int(grid_n), 64) + 1)
    vals = np.asarray(q(xs), dtype=float)
    dvals = np.asarray(q.derivative(xs), dtype=float)
    return float(np.min(vals)), float(np.max(vals)), float(np.max(np.abs(dvals)))


@dataclasses.dataclass(frozen=True)
class HypothesisCheck:
    """Outcome of a single standing-hypothesis check."""

    name: str
    passed: bool
    detail: str
    witness: float | None = None


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    """All standing hypotheses checked on one problem."""

    checks: tuple[HypothesisCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    def summary_lines(self) -> list[str]:
        return [
            f"[{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}"
            for c in self.checks
        ]


def validate(problem: BeamProblem, grid_n: int = 256) -> ValidationReport:
    """Re-check every standing hypothesis on a scan grid.

    Unlike :meth:`BeamProblem.create`, which raises on the first broken
    hypothesis, this runs all checks and reports each one, naming the
    failing assumption with a witness point where applicable.
    """
    checks: list[HypothesisCheck] = []
    xs = _scan_grid(grid_n)

    sig_vals = np.asarray(problem.sigma(xs), dtype=float)
    if np.any(sig_vals <= 0.0):
        i = int(np.argmax(sig_vals <= 0.0))
        checks.append(HypothesisCheck(
            "sigma_positive_interior", False,
            f"sigma({xs[i]:.3e}) = {sig_vals[i]:.3e} <= 0", float(xs[i])))
    else:
        checks.append(HypothesisCheck(
            "sigma_positive_interior", True, "sigma > 0 on (0, 1]"))

    sigma_at_0 = float(problem.sigma(0.0))
    checks.append(HypothesisCheck(
        "sigma_degenerate_at_zero", abs(sigma_at_0) <= 1e-12,
        f"sigma(0) = {sigma_at_0:.3e}" + ("" if abs(sigma_at_0) <= 1e-12
                                          else " (expected 0)")))

    sig1 = problem.sigma_at_1
    checks.append(HypothesisCheck(
        "sigma_positive_at_right_end", sig1 > 0.0, f"sigma(1) = {sig1:g}"))

    iota_ok = 0.0 < problem.iota_sigma < 2.0
    checks.append(HypothesisCheck(
        "iota_sigma_admissible", iota_ok,
        f"iota_sigma = {problem.iota_sigma:.6g}"
        + ("" if iota_ok else " outside (0, 2)")))

    qs = np.linspace(0.0, 1.0, max(int(grid_n), 64) + 1)
    q_vals = np.asarray(problem.q(qs), dtype=float)
    dq_vals = np.abs(np.asarray(problem.q.derivative(qs), dtype=float))
    tol = 1e-12 * max(1.0, problem.q1)
    q_ok = (problem.q0 > 0.0
            and np.all(q_vals >= problem.q0 - tol)
            and np.all(q_vals <= problem.q1 + tol)
            and np.all(dq_vals <= problem.q2 + tol))
    if q_ok:
        detail = f"{problem.q0:g} <= q <= {problem.q1:g}, |q'| <= {problem.q2:g}"
        checks.append(HypothesisCheck("q_bounds", True, detail))
    else:
        i = int(np.argmax((q_vals < problem.q0 - tol)
                          | (q_vals > problem.q1 + tol)
                          | (dq_vals > problem.q2 + tol)))
        checks.append(HypothesisCheck(
            "q_bounds", False,
            f"q({qs[i]:.4g}) = {q_vals[i]:.6g}, |q'| = {dq_vals[i]:.6g} "
            f"break [{problem.q0:g}, {problem.q1:g}] / {problem.q2:g}",
            float(qs[i])))

    gain_ok = problem.kappa1 > abs(problem.kappa2) > 0.0
    checks.append(HypothesisCheck(
        "gain_condition", gain_ok,
        f"k1 = {problem.kappa1:g}, |k2| = {abs(problem.kappa2):g}"
        + ("" if gain_ok else " (need k1 > |k2| > 0)")))

    if problem.kappa1 > abs(problem.kappa2):
        lo, hi = gamma_window(problem.kappa1, problem.kappa2)
        g_ok = lo <= problem.gamma <= hi
        checks.append(HypothesisCheck(
            "gamma_window", g_ok,
            f"gamma = {problem.gamma:g}"
            + (f" in [{lo:g}, {hi:g}]" if g_ok
               else f" outside [{lo:g}, {hi:g}]")))
    else:
        checks.append(HypothesisCheck(
            "gamma_window", False, "window empty: gain condition already failed"))

    iota_sq_ok = problem.iota_sigma_q < 2.0
    checks.append(HypothesisCheck(
        "iota_sigma_q_admissible", iota_sq_ok,
        f"iota_sq = max(iota_sigma, q2/q0) = {problem.iota_sigma_q:.6g}"
        + ("" if iota_sq_ok else " >= 2")))

    return ValidationReport(tuple(checks))
