"""Conforming C1 discretization of the degenerate beam operator.

Cubic Hermite elements carry a value and a slope at every node, so each
discrete function lies in the continuous energy space: the weighted
bending form integral(sigma * u'' * v'') needs no pointwise fourth
derivative and the degenerate coefficient is only ever evaluated at
interior Gauss points, never at x = 0.

The mesh is graded geometrically toward the degenerate end by default;
boundary classes are imposed by eliminating constrained dofs (value at
the left end always, slope there too for the weak class 'WD').
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    BadGrading,
    NonPositiveSigma,
    QuadratureAtDegeneracy,
    SingularSystem,
)
from .model import BeamProblem

_MIN_ELEMENTS = 4
_MIN_WIDTH = 1e-13


@dataclasses.dataclass(frozen=True)
class Mesh:
    """Element partition of [0, 1]."""

    nodes: np.ndarray
    grading: str
    ratio: float

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def n_dofs_full(self) -> int:
        return 2 * self.nodes.size


def build_mesh(n: int, grading: str = "geometric", ratio: float = 1.3) -> Mesh:
    """Partition [0, 1] into n elements.

    ``geometric`` grading makes element widths grow by ``ratio`` away
    from the degenerate end, so the smallest element touches x = 0.
    ``uniform`` ignores ``ratio``.
    """
    if n < _MIN_ELEMENTS:
        raise BadGrading(f"n = {n} elements; need at least {_MIN_ELEMENTS}")
    if grading == "uniform":
        nodes = np.linspace(0.0, 1.0, n + 1)
        ratio = 1.0
    elif grading == "geometric":
        if not (1.0 < ratio <= 2.0):
            raise BadGrading(f"geometric ratio {ratio:g} outside (1, 2]")
        widths = ratio ** np.arange(n)
        widths /= widths.sum()
        nodes = np.concatenate(([0.0], np.cumsum(widths)))
        nodes[-1] = 1.0
    else:
        raise BadGrading(f"unknown grading {grading!r}")
    if np.min(np.diff(nodes)) < _MIN_WIDTH:
        raise BadGrading(
            f"smallest element width {np.min(np.diff(nodes)):.3e} below "
            f"{_MIN_WIDTH:g}; reduce n or the grading ratio")
    return Mesh(nodes=nodes, grading=grading, ratio=float(ratio))


# ---- cubic Hermite shape functions on the unit element ----

def _shape_values(xi: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(N, dN, ddN), each 4 x len(xi), derivatives with respect to x.

    Dof order per element: value left, slope left, value right, slope
    right.  Slope dofs are scaled by the element width so they represent
    true derivatives.
    """
    one = np.ones_like(xi)
    n = np.stack([
        1.0 - 3.0 * xi ** 2 + 2.0 * xi ** 3,
        h * (xi - 2.0 * xi ** 2 + xi ** 3),
        3.0 * xi ** 2 - 2.0 * xi ** 3,
        h * (xi ** 3 - xi ** 2),
    ])
    dn = np.stack([
        (-6.0 * xi + 6.0 * xi ** 2) / h,
        one - 4.0 * xi + 3.0 * xi ** 2,
        (6.0 * xi - 6.0 * xi ** 2) / h,
        3.0 * xi ** 2 - 2.0 * xi,
    ])
    ddn = np.stack([
        (-6.0 + 12.0 * xi) / h ** 2,
        (-4.0 + 6.0 * xi) / h,
        (6.0 - 12.0 * xi) / h ** 2,
        (6.0 * xi - 2.0) / h,
    ])
    return n, dn, ddn


def _gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights mapped to (0, 1)."""
    pts, wts = np.polynomial.legendre.leggauss(order)
    return (pts + 1.0) / 2.0, wts / 2.0


@dataclasses.dataclass(frozen=True)
class DiscreteOperators:
    """Assembled matrices in the constrained dof numbering.

    ``mass``, ``stiff_sigma`` and ``stiff_q`` are the L2, weighted
    bending and weighted tension forms.  ``cross_x`` is the unsymmetric
    form integral(phi_i * 2x * phi_j') needed by the perturbation
    functional.  ``keep`` maps constrained to full dof indices;
    ``tip_value`` / ``tip_slope`` are the constrained positions of the
    value and slope dofs at x = 1.  The ``*_full`` twins keep the
    unconstrained matrices for oracle checks.
    """

    mesh: Mesh
    degeneracy: str
    quad_order: int
    mass: np.ndarray
    stiff_sigma: np.ndarray
    stiff_q: np.ndarray
    cross_x: np.ndarray
    mass_full: np.ndarray
    stiff_sigma_full: np.ndarray
    stiff_q_full: np.ndarray
    keep: np.ndarray
    tip_value: int
    tip_slope: int

    @property
    def n_dofs(self) -> int:
        return self.keep.size

    @property
    def stiffness(self) -> np.ndarray:
        return self.stiff_sigma + self.stiff_q

    def tip_vector(self) -> np.ndarray:
        e = np.zeros(self.n_dofs)
        e[self.tip_value] = 1.0
        return e

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Constrained vector to full dof vector (zeros at constraints)."""
        full = np.zeros(self.mesh.n_dofs_full)
        full[self.keep] = u
        return full

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.keep]

    def energy_norm_sq(self, u: np.ndarray) -> float:
        """Squared energy seminorm integral(sigma u''^2 + q u'^2)."""
        return float(u @ (self.stiff_sigma @ u) + u @ (self.stiff_q @ u))


def assemble(problem: BeamProblem, mesh: Mesh, quad_order: int = 6) -> DiscreteOperators:
    """Assemble mass, weighted stiffness and cross forms on the mesh."""
    if quad_order < 2:
        raise ValueError(f"quad_order = {quad_order} too low; need >= 2")
    xi, wts = _gauss_rule(quad_order)
    size = mesh.n_dofs_full
    mass = np.zeros((size, size))
    k_sigma = np.zeros((size, size))
    k_q = np.zeros((size, size))
    cross = np.zeros((size, size))
    nodes = mesh.nodes
    for e in range(mesh.n_elements):
        xa, xb = nodes[e], nodes[e + 1]
        h = xb - xa
        pts = xa + h * xi
        if np.any(pts <= 0.0):
            raise QuadratureAtDegeneracy(
                f"quadrature point {pts.min():.3e} <= 0 in element {e}")
        sig = np.asarray(problem.sigma(pts), dtype=float)
        if np.any(sig <= 0.0):
            raise NonPositiveSigma(
                f"sigma <= 0 at quadrature point x = {pts[sig <= 0.0][0]:.6e}")
        qv = np.asarray(problem.q(pts), dtype=float)
        n, dn, ddn = _shape_values(xi, h)
        me = h * np.einsum("g,ig,jg->ij", wts, n, n)
        kse = h * np.einsum("g,ig,jg->ij", wts * sig, ddn, ddn)
        kqe = h * np.einsum("g,ig,jg->ij", wts * qv, dn, dn)
        cxe = h * np.einsum("g,ig,jg->ij", wts * 2.0 * pts, n, dn)
        dofs = np.arange(2 * e, 2 * e + 4)
        ix = np.ix_(dofs, dofs)
        mass[ix] += me
        k_sigma[ix] += kse
        k_q[ix] += kqe
        cross[ix] += cxe

    drop = [0, 1] if problem.degeneracy == "WD" else [0]
    keep = np.array([i for i in range(size) if i not in drop], dtype=int)
    sub = np.ix_(keep, keep)
    tip_value = int(np.searchsorted(keep, size - 2))
    tip_slope = int(np.searchsorted(keep, size - 1))
    return DiscreteOperators(
        mesh=mesh, degeneracy=problem.degeneracy, quad_order=quad_order,
        mass=mass[sub], stiff_sigma=k_sigma[sub], stiff_q=k_q[sub],
        cross_x=cross[sub],
        mass_full=mass, stiff_sigma_full=k_sigma, stiff_q_full=k_q,
        keep=keep, tip_value=tip_value, tip_slope=tip_slope,
    )


# ---- nodal interpolation and point evaluation ----

def interpolate(mesh: Mesh, fn: Callable, dfn: Callable | None = None) -> np.ndarray:
    """Full dof vector interpolating ``fn`` at the nodes.

    Slopes come from the analytic derivative when available, otherwise
    from second order finite differences on the (possibly graded) mesh.
    """
    xs = mesh.nodes
    # item() tolerates callables returning 1-element arrays and rejects
    # anything that is not a pointwise value
    vals = np.array([np.asarray(fn(x)).item() for x in xs])
    if dfn is not None:
        slopes = np.array([np.asarray(dfn(x)).item() for x in xs])
    else:
        slopes = _fd_slopes(xs, vals)
    dofs = np.empty(2 * xs.size)
    dofs[0::2] = vals
    dofs[1::2] = slopes
    return dofs


def _fd_slopes(xs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Second order three-point slopes on a nonuniform grid."""
    n = xs.size
    slopes = np.empty(n)
    for i in range(n):
        if i == 0:
            j = (0, 1, 2)
        elif i == n - 1:
            j = (n - 3, n - 2, n - 1)
        else:
            j = (i - 1, i, i + 1)
        x0, x1, x2 = xs[j[0]], xs[j[1]], xs[j[2]]
        f0, f1, f2 = vals[j[0]], vals[j[1]], vals[j[2]]
        xi = xs[i]
        # Derivative of the interpolating parabola at xi.
        slopes[i] = (f0 * (2.0 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2))
                     + f1 * (2.0 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2))
                     + f2 * (2.0 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1)))
    return slopes


def eval_dofs(mesh: Mesh, full_dofs: np.ndarray, xs: np.ndarray,
              deriv: int = 0) -> np.ndarray:
    """Evaluate the Hermite interpolant (or a derivative) at points."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.empty(xs.size)
    nodes = mesh.nodes
    elems = np.clip(np.searchsorted(nodes, xs, side="right") - 1, 0,
                    mesh.n_elements - 1)
    for k, (x, e) in enumerate(zip(xs, elems)):
        h = nodes[e + 1] - nodes[e]
        xi = np.array([(x - nodes[e]) / h])
        shapes = _shape_values(xi, h)[deriv]
        dofs = full_dofs[2 * e:2 * e + 4]
        out[k] = float(shapes[:, 0] @ dofs)
    return out


# ---- factored SPD solves with equilibration and refinement ----

class FactoredSpd:
    """Cholesky solve of an SPD matrix, diagonally equilibrated, with
    one step of iterative refinement to keep residuals near roundoff on
    graded meshes whose dof scales span many orders."""

    def __init__(self, a: np.ndarray):
        self._a = a
        d = np.sqrt(np.diag(a))
        if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
            raise SingularSystem("matrix has a nonpositive diagonal entry")
        self._scale = 1.0 / d
        a_eq = a * self._scale[:, None] * self._scale[None, :]
        try:
            self._factor = scipy.linalg.cho_factor(a_eq, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise SingularSystem(f"Cholesky factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = self._scale * scipy.linalg.cho_solve(
            self._factor, self._scale * b, check_finite=False)
        r = b - self._a @ x
        x = x + self._scale * scipy.linalg.cho_solve(
            self._factor, self._scale * r, check_finite=False)
        return x


# ---- stationary solves ----

@dataclasses.dataclass(frozen=True)
class ResolventSolution:
    """Solution triple of one backward-Euler-type resolvent solve."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    residual: float


def resolvent_solve(ops: DiscreteOperators, problem: BeamProblem,
                    f: np.ndarray, g: np.ndarray, h: np.ndarray) -> ResolventSolution:
    """Solve (I - A) (u, v, w) = (f, g, h) for the closed-loop generator.

    ``f`` and ``g`` are constrained dof vectors; ``h`` lives on the
    uniform history grid s in [0, 1] (length N + 1).  The history
    component is eliminated exactly through its integrating factor, the
    displacement is found from one coercive symmetric solve, then v and
    w are recovered.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if f.shape != (ops.n_dofs,) or g.shape != (ops.n_dofs,):
        raise ValueError("f and g must be constrained dof vectors")
    if h.ndim != 1 or h.size < 2:
        raise ValueError("h must be sampled on the history grid (>= 2 points)")
    tau = problem.tau
    s = np.linspace(0.0, 1.0, h.size)
    lam1 = problem.kappa1 + problem.kappa2 * math.exp(-tau)

    # Tip load collecting the feedback and the eliminated history data.
    hist_integral = np.trapezoid(np.exp((s - 1.0) * tau) * h, s)
    lam2 = lam1 * f[ops.tip_value] - problem.kappa2 * tau * hist_integral

    e_tip = ops.tip_vector()
    a = ops.stiffness + ops.mass + lam1 * np.outer(e_tip, e_tip)
    rhs = ops.mass @ (f + g) + lam2 * e_tip
    u = FactoredSpd(a).solve(rhs)
    scale = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(a @ u - rhs) / (scale if scale > 0 else 1.0))
    if residual > 1e-10:
        raise SingularSystem(
            f"resolvent solve residual {residual:.3e} above 1e-10")

    v = u - f
    v_tip = v[ops.tip_value]
    # w(s) = v(1) e^{-tau s} + tau e^{-tau s} * int_0^s e^{tau r} h(r) dr
    integrand = np.exp(tau * s) * h
    cumulative = np.concatenate((
        [0.0],
        np.cumsum(0.5 * np.diff(s) * (integrand[1:] + integrand[:-1])),
    ))
    w = np.exp(-tau * s) * (v_tip + tau * cumulative)
    return ResolventSolution(u=u, v=v, w=w, residual=residual)


@dataclasses.dataclass(frozen=True)
class AuxiliarySolution:
    """Tip-loaded elliptic solution with its a-priori bound audit.

    The load is lam * phi(1) + mu * phi'(1).  The proved bounds are
    energy_sq <= bound_energy_sq and l2_sq <= bound_energy_sq / q0; the
    identity energy_sq == lam*y(1) + mu*y'(1) holds exactly in the
    discrete space.
    """

    y: np.ndarray
    energy_sq: float
    l2_sq: float
    tip_identity: float
    bound_energy_sq: float
    bound_l2_sq: float


def auxiliary_solve(ops: DiscreteOperators, problem: BeamProblem,
                    lam: float, mu: float,
                    check_tol: float = 1e-8) -> AuxiliarySolution:
    """Solve the tip-loaded elliptic problem and audit its bounds.

    Finds y with integral(sigma y'' phi'' + q y' phi') = lam phi(1)
    + mu phi'(1) for all phi, then checks the a-priori estimates; a
    violation beyond ``check_tol`` (relative) signals an assembly bug.
    """
    from .errors import BoundViolation

    e_val = np.zeros(ops.n_dofs)
    e_val[ops.tip_value] = 1.0
    e_slope = np.zeros(ops.n_dofs)
    e_slope[ops.tip_slope] = 1.0
    load = lam * e_val + mu * e_slope
    k = ops.stiffness
    y = FactoredSpd(k).solve(load)

    energy_sq = float(y @ (k @ y))
    l2_sq = float(y @ (ops.mass @ y))
    tip_identity = float(lam * y[ops.tip_value] + mu * y[ops.tip_slope])

    c1 = math.sqrt(max(1.0 / problem.q0,
                       1.0 / (problem.sigma_at_1 * (2.0 - problem.iota_sigma))))
    c_bound = abs(lam) * math.sqrt(1.0 / problem.q0) + math.sqrt(2.0) * abs(mu) * c1
    bound_energy_sq = c_bound ** 2
    bound_l2_sq = c_bound ** 2 / problem.q0

    scale = max(bound_energy_sq, 1e-300)
    if energy_sq > bound_energy_sq * (1.0 + check_tol) + check_tol * scale:
        raise BoundViolation(
            f"energy bound failed: {energy_sq:.12e} > {bound_energy_sq:.12e}")
    if l2_sq > bound_l2_sq * (1.0 + check_tol) + check_tol * scale:
        raise BoundViolation(
            f"L2 bound failed: {l2_sq:.12e} > {bound_l2_sq:.12e}")
    return AuxiliarySolution(y=y, energy_sq=energy_sq, l2_sq=l2_sq,
                             tip_identity=tip_identity,
                             bound_energy_sq=bound_energy_sq,
                             bound_l2_sq=bound_l2_sq)
