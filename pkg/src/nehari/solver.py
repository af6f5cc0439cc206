"""Constrained energy descent: ground states, signed states via truncation,
sign-changing states on the nodal Nehari set, and the first eigenvalue.

The minimization scheme keeps every iterate on its constraint set: assemble
the residual, lift it through the linear stiffness (an H01-type Riesz map),
take an Armijo-backtracked step, reproject. The projection kills the ray
component of the step to first order, so the lifted residual is a true
descent direction for the projected energy. Once the predicted Armijo
decrement falls below the floating-point resolution of the energy, the
acceptance test switches to residual contraction (energy comparisons are
pure noise there, and noise-accepted steps random-walk the iterate).
"""

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .domain import (Field, field_luxemburg_norm, grad_magnitudes,
                     gradient_luxemburg_norm, negative_part, positive_part,
                     random_smooth_field)
from .energy import dirichlet_residual_vector, energy, _residual_lift
from .errors import BracketError, DomainError, NodalCollapseError
from .manifold import nehari_time, nodal_times
from .nonlinearity import truncate

_EPS = np.finfo(float).eps


@dataclass
class SolveOptions:
    mode: str = "ground"  # ground | positive | negative | nodal | eigen
    tol: float = 1e-8
    max_iters: int = 500
    initial: object = "bump"  # "bump" | "random" | Field
    seed: int = 0
    armijo_c1: float = 1e-4
    armijo_backtrack: float = 0.5
    max_backtracks: int = 40
    history_stride: int = 1
    sign_tol: float = 1e-10

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError("tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")


@dataclass
class SolveResult:
    field: Field
    energy: object
    residual_norm: float
    iterations: int
    converged: bool
    level: float
    history: list = dataclass_field(default_factory=list)
    mode: str = "ground"
    message: str = ""


@dataclass
class EigenResult:
    lambda1: float
    field: Field
    converged: bool
    iterations: int
    history: list = dataclass_field(default_factory=list)


def bump_field(mesh, sign=+1.0, full_wave=False):
    """Deterministic sine initializer: product of half-waves, or a full wave
    in x for sign-changing starts."""
    d = mesh.descriptor
    if mesh.kind == "interval":
        a, b = d["a"], d["b"]
        if full_wave:
            fn = lambda x: np.sin(2.0 * np.pi * (x - a) / (b - a))
        else:
            fn = lambda x: np.sin(np.pi * (x - a) / (b - a))
    else:
        ax, bx, ay, by = d["ax"], d["bx"], d["ay"], d["by"]
        kx = 2.0 if full_wave else 1.0
        fn = lambda x, y: (np.sin(kx * np.pi * (x - ax) / (bx - ax))
                           * np.sin(np.pi * (y - ay) / (by - ay)))
    u = Field.interpolate(mesh, fn)
    return sign * u


def initial_field(mesh, opts, nodal=False):
    init = opts.initial
    if isinstance(init, Field):
        return init.copy()
    if init == "bump":
        return bump_field(mesh, full_wave=nodal)
    if init == "random":
        return random_smooth_field(mesh, np.random.default_rng(opts.seed))
    raise DomainError(f"unknown initializer {init!r}")


def _descent_loop(u0_ray, project, objective, residual_lift, stop_tol, opts,
                  post_accept=None):
    """Shared projected-descent engine; see module docstring for the scheme.

    ``project`` retracts a raw field onto the constraint set (and may raise
    BracketError/DomainError/NodalCollapseError on bad trial rays),
    ``objective`` returns (value, roundoff scale) where the scale tracks the
    magnitudes summed before cancellation, ``residual_lift`` returns
    (residual, lifted direction, dual norm), and ``stop_tol(J)`` gives the
    residual stopping threshold.
    """
    u = project(u0_ray)
    J, noise_scale = objective(u)
    if post_accept is not None:
        post_accept(u)
    history = []
    alpha = 1.0
    converged = False
    message = ""
    norm = math.inf
    iterations = 0

    for k in range(opts.max_iters + 1):
        r, d, norm = residual_lift(u)
        if opts.history_stride > 0 and k % opts.history_stride == 0:
            history.append((k, J, norm))
        if norm <= stop_tol(J):
            converged = True
            break
        if k == opts.max_iters:
            message = "iteration limit reached"
            break
        noise = 4.0 * _EPS * (1.0 + noise_scale)
        a = min(2.0 * alpha, 1.0)
        accepted = False
        for _ in range(opts.max_backtracks):
            trial_ray = Field(u.mesh, u.values - a * d, check_boundary=False)
            try:
                trial = project(trial_ray)
            except (BracketError, DomainError, NodalCollapseError):
                a *= opts.armijo_backtrack
                continue
            Jt, scale_t = objective(trial)
            pred = opts.armijo_c1 * a * norm * norm
            if pred >= 8.0 * noise:
                ok = Jt <= J - pred + noise
            else:
                # energy decrement below measurement noise: require the
                # residual itself to contract (and the energy not to grow
                # beyond roundoff)
                t_norm = residual_lift(trial)[2]
                ok = t_norm < norm and Jt <= J + noise
            if ok:
                accepted = True
                break
            a *= opts.armijo_backtrack
        if not accepted:
            message = "line search stalled before reaching the residual tolerance"
            break
        u, J, noise_scale, alpha = trial, Jt, scale_t, a
        iterations = k + 1
        if post_accept is not None:
            post_accept(u)

    if not history or history[-1][0] != iterations:
        history.append((iterations, J, norm))
    return u, J, norm, iterations, converged, message, history


def _energy_objective(problem):
    def objective(w):
        eb = energy(problem, w)
        return eb.total, abs(eb.dirichlet_term) + abs(eb.reaction_term)
    return objective


def minimize_on_nehari(problem, opts=None):
    """Projected descent for the ground level: every iterate lies on the
    Nehari manifold, energies decrease monotonically along accepted steps."""
    opts = opts or SolveOptions()
    u0 = initial_field(problem.mesh, opts)
    u, J, norm, iterations, converged, message, history = _descent_loop(
        u0,
        project=lambda w: nehari_time(problem, w).projected,
        objective=_energy_objective(problem),
        residual_lift=lambda w: _residual_lift(problem, w),
        stop_tol=lambda J: opts.tol,
        opts=opts)
    return SolveResult(field=u, energy=energy(problem, u), residual_norm=norm,
                       iterations=iterations, converged=converged, level=J,
                       history=history, mode=opts.mode, message=message)


def solve_signed(problem, sign, opts=None):
    """Ground state of the one-sided truncated problem (f+ or f-).

    At any critical point of the truncated functional the reaction cannot
    see the wrong-signed part, which forces that part to vanish; the
    sub-tolerance residue left by a finite-tolerance solve is removed by a
    verified clamp-and-reproject polish.
    """
    opts = opts or SolveOptions(mode="positive" if sign == "plus" else "negative")
    signed = problem.with_f(truncate(problem.f, sign))
    inner = SolveOptions(**opts.__dict__)
    if not isinstance(opts.initial, Field) and opts.initial == "bump":
        inner.initial = bump_field(problem.mesh, sign=+1.0 if sign == "plus" else -1.0)
    result = minimize_on_nehari(signed, inner)

    part = negative_part if sign == "plus" else positive_part
    keep = positive_part if sign == "plus" else negative_part
    residue = part(result.field)
    if not residue.is_zero() and residue.linf() <= 1e-3 * result.field.linf():
        clamped = keep(result.field)
        if not clamped.is_zero():
            try:
                polished = nehari_time(signed, clamped).projected
                _, _, norm = _residual_lift(signed, polished)
                if norm <= max(result.residual_norm, opts.tol):
                    result.field = polished
                    result.energy = energy(signed, polished)
                    result.level = result.energy.total
                    result.residual_norm = norm
                    result.message = (result.message + "; " if result.message
                                      else "") + "sign residue clamped and reprojected"
            except (BracketError, DomainError):
                pass
    return result


def solve_nodal(problem, opts=None):
    """Minimize J over the nodal Nehari set: descent + two-scale reprojection.

    A component whose norm falls 20x below its initial projected value
    aborts the run (the limit object needs both signed parts bounded away
    from zero), since a silent collapse would return a sign-definite field
    labeled nodal.
    """
    opts = opts or SolveOptions(mode="nodal")
    u0 = initial_field(problem.mesh, opts, nodal=True)
    if positive_part(u0).is_zero() or negative_part(u0).is_zero():
        raise DomainError("nodal solve needs a sign-changing initializer")

    start = nodal_times(problem, u0).projected
    guard = min(
        gradient_luxemburg_norm(positive_part(start), problem.phi),
        gradient_luxemburg_norm(negative_part(start), problem.phi)) / 20.0

    def check_collapse(w):
        for comp in (positive_part(w), negative_part(w)):
            if comp.is_zero() or gradient_luxemburg_norm(comp, problem.phi) < guard:
                raise NodalCollapseError(
                    "nodal collapse: a signed component fell below the norm "
                    "guard; re-initialize with a better-separated start")

    u, J, norm, iterations, converged, message, history = _descent_loop(
        u0,
        project=lambda w: nodal_times(problem, w).projected,
        objective=_energy_objective(problem),
        residual_lift=lambda w: _residual_lift(problem, w),
        stop_tol=lambda J: opts.tol,
        opts=opts,
        post_accept=check_collapse)
    return SolveResult(field=u, energy=energy(problem, u), residual_norm=norm,
                       iterations=iterations, converged=converged, level=J,
                       history=history, mode="nodal", message=message)


def estimate_lambda1(phi, mesh, opts=None, eps_reg=1e-10):
    """First eigenvalue of the Phi-Laplacian as the minimized quotient
    int Phi(|grad u|) / int Phi(u), at the normalization int Phi(u) = 1.

    Normalized preconditioned descent: renormalize after every step (the
    quotient of a non-homogeneous Phi depends on the level, and this level
    is the one appearing in the Poincare inequality).
    """
    opts = opts or SolveOptions(mode="eigen")

    def normalize(v):
        lam = field_luxemburg_norm(v, phi)
        if lam == 0.0:
            raise DomainError("eigen iterate collapsed to zero")
        return (1.0 / lam) * v

    def dirichlet(v):
        g = grad_magnitudes(v)
        value = float(np.dot(np.asarray(phi.big_phi(g)), mesh.measures))
        return value, value

    def residual_lift(v):
        """K-lifted gradient of the quotient, projected onto the tangent
        space of the normalization constraint (for non-homogeneous Phi the
        raw gradient keeps a Lagrange component along the constraint)."""
        R = dirichlet(v)[0]
        x = np.abs(v.values)
        with np.errstate(divide="ignore", invalid="ignore"):
            hv = np.asarray(phi.h(np.hypot(x, eps_reg)))
        gm = np.sign(v.values) * hv * mesh.lumped_weights
        gm[mesh.boundary_dofs] = 0.0
        g = dirichlet_residual_vector(phi, mesh, v, eps_reg) - R * gm
        g[mesh.boundary_dofs] = 0.0
        ii = mesh.interior_dofs
        dg = mesh.stiffness_solve(g[ii])
        dm = mesh.stiffness_solve(gm[ii])
        mu = float(np.dot(g[ii], dm)) / max(float(np.dot(gm[ii], dm)), 1e-300)
        g_tan = g.copy()
        g_tan[ii] -= mu * gm[ii]
        d = np.zeros(mesh.n_vertices)
        d[ii] = dg - mu * dm
        norm = float(np.sqrt(max(np.dot(g_tan[ii], d[ii]), 0.0)))
        return g_tan, d, norm

    u0 = bump_field(mesh) if not isinstance(opts.initial, Field) else opts.initial.copy()
    u, R, norm, iterations, converged, message, history = _descent_loop(
        u0,
        project=normalize,
        objective=dirichlet,
        residual_lift=residual_lift,
        stop_tol=lambda R: opts.tol * (1.0 + R),
        opts=opts)
    return EigenResult(lambda1=R, field=u, converged=converged,
                       iterations=iterations, history=history)


def solve(problem, opts=None):
    """Dispatch on opts.mode; 'eigen' uses the problem's Phi and mesh."""
    opts = opts or SolveOptions()
    if opts.mode == "ground":
        return minimize_on_nehari(problem, opts)
    if opts.mode == "positive":
        return solve_signed(problem, "plus", opts)
    if opts.mode == "negative":
        return solve_signed(problem, "minus", opts)
    if opts.mode == "nodal":
        return solve_nodal(problem, opts)
    raise DomainError(f"unknown solve mode {opts.mode!r}")
