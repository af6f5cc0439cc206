"""Discrete energy J, its directional derivative, residuals and fibering maps.

J(u) = integral of Phi(|grad u|) minus integral of F(x, u). The gradient
term uses the elementwise-constant P1 gradient (quadrature exact); the
reaction term uses lumped vertex quadrature. Density evaluations inside
derivative assembly compose |grad u| with a tiny regularization
sqrt(g^2 + eps^2) so that singular densities (ell2 < 2) stay finite at flat
regions; energy values themselves are never regularized.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .domain import (Field, grad_magnitudes, grad_on_elements, negative_part,
                     positive_part)
from .errors import DomainError, ProblemError
from .nfunction import check_conditions
from .nonlinearity import f1_quotient_increasing


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet_term: float
    reaction_term: float
    total: float

    @classmethod
    def make(cls, dirichlet, reaction):
        return cls(dirichlet_term=dirichlet, reaction_term=reaction,
                   total=dirichlet - reaction)


class Problem:
    """An N-function, a reaction term and a mesh, defining the discrete J.

    Construction validates the structural conditions on phi and the
    monotone-quotient condition on f against phi's upper index; pass
    ``validate=False`` to build deliberately broken instances for the
    falsification checks.
    """

    def __init__(self, phi, f, mesh, eps_reg=1e-10, validate=True):
        self.phi = phi
        self.f = f
        self.mesh = mesh
        self.eps_reg = float(eps_reg)
        self.indices = phi.indices()
        if validate:
            report = check_conditions(phi)
            if not report.passed:
                failing = [k for k, v in report.as_dict().items() if not v["passed"]]
                raise ProblemError(f"N-function fails conditions: {failing}")
            ok, wit = f1_quotient_increasing(f, self.indices.em)
            if not ok:
                raise ProblemError(
                    f"reaction fails the monotone quotient check against "
                    f"em={self.indices.em:.6g}: {wit}")
        self._phi_kernel = phi.kernel
        self._f_kernel = f.kernel

    @property
    def em(self):
        return self.indices.em

    def with_f(self, new_f):
        """Same mesh and Phi with a different reaction (used for truncations)."""
        return Problem(self.phi, new_f, self.mesh, eps_reg=self.eps_reg,
                       validate=False)

    def __repr__(self):
        return f"Problem({self.phi!r}, {self.f!r}, {self.mesh!r})"


def energy(problem, u):
    """Energy breakdown J(u) = dirichlet - reaction (unregularized)."""
    g = np.ascontiguousarray(grad_magnitudes(u))
    w = problem.mesh.measures
    lump = problem.mesh.lumped_weights
    if problem._phi_kernel is not None:
        code, a, b = problem._phi_kernel
        dirichlet = K.sum_big_phi(code, a, b, g, w, 1.0)
    else:
        dirichlet = float(np.dot(np.asarray(problem.phi.big_phi(g)), w))
    if problem._f_kernel is not None:
        code, a, trunc = problem._f_kernel
        reaction = K.sum_big_f(code, a, trunc, u.values, lump, 1.0)
    else:
        reaction = float(np.dot(np.asarray(problem.f.F(u.values)), lump))
    return EnergyBreakdown.make(dirichlet, reaction)


def _phi_coefficients(problem, g):
    """phi(hypot(g, eps)) with zero-gradient elements zeroed out."""
    s = np.hypot(g, problem.eps_reg)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.asarray(problem.phi.phi(s), dtype=float)
    return np.where(g == 0.0, 0.0, coef)


def pairing(problem, u, v):
    """Directional derivative <J'(u), v>."""
    Gu = grad_on_elements(u)
    Gv = grad_on_elements(v)
    g = grad_magnitudes(u)
    coef = _phi_coefficients(problem, g)
    guv = np.einsum("ed,ed->e", Gu, Gv)
    dirichlet = float(np.dot(coef * guv, problem.mesh.measures))
    fvals = np.asarray(problem.f.f(u.values), dtype=float)
    reaction = float(np.dot(fvals * v.values, problem.mesh.lumped_weights))
    return dirichlet - reaction


def dirichlet_residual_vector(phi, mesh, u, eps_reg):
    """Nodal assembly of <phi(|grad u|) grad u, grad hat_i> (boundary zeroed)."""
    Gu = grad_on_elements(u)
    g = grad_magnitudes(u)
    s = np.hypot(g, eps_reg)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.asarray(phi.phi(s), dtype=float)
    coef = np.where(g == 0.0, 0.0, coef) * mesh.measures
    contrib = np.einsum("e,ed,ead->ea", coef, Gu, mesh.basis_grads)
    r = np.zeros(mesh.n_vertices)
    for a in range(mesh.dim + 1):
        r += np.bincount(mesh.elements[:, a], weights=contrib[:, a],
                         minlength=mesh.n_vertices)
    r[mesh.boundary_dofs] = 0.0
    return r


def _residual_lift(problem, u):
    """Residual vector, its Riesz lift through the linear stiffness, and the
    resulting dual norm sqrt(r^T K^{-1} r)."""
    mesh = problem.mesh
    r = dirichlet_residual_vector(problem.phi, mesh, u, problem.eps_reg)
    fvals = np.asarray(problem.f.f(u.values), dtype=float)
    r -= fvals * mesh.lumped_weights
    r[mesh.boundary_dofs] = 0.0
    r_int = r[mesh.interior_dofs]
    d_int = mesh.stiffness_solve(r_int)
    d = np.zeros(mesh.n_vertices)
    d[mesh.interior_dofs] = d_int
    norm = float(np.sqrt(max(np.dot(r_int, d_int), 0.0)))
    return r, d, norm


def residual(problem, u):
    """Nodal residual (pairing against every interior hat) and its dual norm."""
    r, _, norm = _residual_lift(problem, u)
    return r, norm


class FiberingMap:
    """gamma_u(t) = J(t u) and its first two t-derivatives along a fixed ray.

    Precomputes the element gradient magnitudes and DOF values once, so the
    scalar evaluations inside bracketing and bisection are single fused
    passes for kernel-backed specs.
    """

    def __init__(self, problem, u):
        if u.is_zero():
            raise DomainError("fibering map needs a nonzero field")
        self.problem = problem
        self.u = u
        self.g = np.ascontiguousarray(grad_magnitudes(u))
        self.uvals = np.ascontiguousarray(u.values)
        self.w = problem.mesh.measures
        self.lump = problem.mesh.lumped_weights
        self.eps = problem.eps_reg
        self._pk = problem._phi_kernel
        self._fk = problem._f_kernel

    def gamma(self, t):
        if self._pk is not None and self._fk is not None:
            pc, pa, pb = self._pk
            fc, fa, ftr = self._fk
            return (K.sum_big_phi(pc, pa, pb, self.g, self.w, t)
                    - K.sum_big_f(fc, fa, ftr, self.uvals, self.lump, t))
        phi, f = self.problem.phi, self.problem.f
        return (float(np.dot(np.asarray(phi.big_phi(t * self.g)), self.w))
                - float(np.dot(np.asarray(f.F(t * self.uvals)), self.lump)))

    def gamma_prime(self, t):
        """gamma'(t) = <J'(t u), u> (with the assembly regularization)."""
        if self._pk is not None and self._fk is not None:
            pc, pa, pb = self._pk
            fc, fa, ftr = self._fk
            return (K.sum_phi_gg(pc, pa, pb, self.g, self.w, t, self.eps)
                    - K.sum_f_u(fc, fa, ftr, self.uvals, self.lump, t))
        phi, f = self.problem.phi, self.problem.f
        s = np.hypot(t * self.g, self.eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.asarray(phi.phi(s)) * t * self.g * self.g
        val = np.where(self.g == 0.0, 0.0, val)
        dirichlet = float(np.dot(val, self.w))
        reaction = float(np.dot(np.asarray(f.f(t * self.uvals)) * self.uvals,
                                self.lump))
        return dirichlet - reaction

    def gamma_second(self, t):
        """gamma''(t) = int [phi(s) + phi'(s) s] |grad u|^2 - int f'(t u) u^2,
        with s = |t grad u| (regularized); the displayed second-derivative
        formula of the fibering map."""
        if self._pk is not None and self._fk is not None:
            pc, pa, pb = self._pk
            fc, fa, ftr = self._fk
            return (K.sum_phi_curv(pc, pa, pb, self.g, self.w, t, self.eps)
                    - K.sum_fp_uu(fc, fa, ftr, self.uvals, self.lump, t))
        phi, f = self.problem.phi, self.problem.f
        s = np.hypot(t * self.g, self.eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            bracket = np.asarray(phi.phi(s)) + np.asarray(phi.phi_prime(s)) * s
            val = bracket * self.g * self.g
        val = np.where(self.g == 0.0, 0.0, val)
        dirichlet = float(np.dot(val, self.w))
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = np.asarray(f.f_prime(t * self.uvals)) * self.uvals * self.uvals
        fp = np.where(self.uvals == 0.0, 0.0, fp)
        reaction = float(np.dot(fp, self.lump))
        return dirichlet - reaction


def fibering_map(problem, u):
    return FiberingMap(problem, u)


def gamma_eval(problem, u, t):
    """gamma_u(t) = J(t u) for t > 0."""
    if t <= 0:
        raise DomainError("fibering maps are evaluated for t > 0")
    return FiberingMap(problem, u).gamma(float(t))


def gamma_prime(problem, u, t):
    if t <= 0:
        raise DomainError("fibering maps are evaluated for t > 0")
    return FiberingMap(problem, u).gamma_prime(float(t))


def gamma_second(problem, u, t):
    if t <= 0:
        raise DomainError("fibering maps are evaluated for t > 0")
    return FiberingMap(problem, u).gamma_second(float(t))


def theta_eval(problem, u, t, s):
    """theta(t, s) = J(t u+ + s u-) for a sign-changing u.

    Evaluated directly on the combined field; the reaction part separates
    exactly under lumping, the gradient part up to the straddling-element
    residual.
    """
    if t <= 0 or s <= 0:
        raise DomainError("theta is evaluated for t, s > 0")
    up = positive_part(u)
    um = negative_part(u)
    if up.is_zero() or um.is_zero():
        raise DomainError("theta needs a sign-changing field (u+ and u- nonzero)")
    combined = Field(u.mesh, t * up.values + s * um.values, check_boundary=False)
    return energy(problem, combined).total
