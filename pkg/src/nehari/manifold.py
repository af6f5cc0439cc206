"""Projection onto the Nehari manifold and the nodal Nehari set.

The fibering derivative gamma'(t) of an admissible problem is positive for
small t and negative for large t with a single crossing (the quotient
gamma'(t)/t^(em-1) is strictly decreasing), so plain bracketed bisection is
unconditionally convergent; Newton could overshoot for densities with
ell2 < 2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .domain import Field, negative_part, positive_part
from .energy import FiberingMap, energy, pairing
from .errors import BracketError, DomainError

_MAX_DOUBLINGS = 60
_BISECT_RTOL = 1e-12


@dataclass(frozen=True)
class NehariProjection:
    t_star: float
    projected: Field
    gamma_prime_at_t: float
    bracket: tuple


@dataclass(frozen=True)
class NodalProjection:
    t_star: float
    s_star: float
    projected: Field
    residual_plus: float
    residual_minus: float
    sweeps: int


def _bracket_sign_change(fn, start=1.0):
    """Expand from ``start`` by doubling/halving until fn changes sign.

    Returns (lo, hi) with fn(lo) > 0 > fn(hi); fn(t) -> -inf counts as
    negative, NaN aborts.
    """
    v0 = fn(start)
    if math.isnan(v0):
        raise BracketError("fibering bracket failure: NaN at the seed point")
    if v0 == 0.0:
        return start, start
    if v0 > 0.0:
        lo, t = start, 2.0 * start
        for _ in range(_MAX_DOUBLINGS):
            v = fn(t)
            if math.isnan(v):
                raise BracketError("fibering bracket failure: NaN while expanding")
            if v < 0.0:
                return lo, t
            if v == 0.0:
                return t, t
            lo, t = t, 2.0 * t
        raise BracketError(
            "fibering bracket failure: gamma' stayed positive up to "
            f"t={t:.3g} (superlinearity (f3) violated, or zero field)")
    hi, t = start, 0.5 * start
    for _ in range(_MAX_DOUBLINGS):
        v = fn(t)
        if math.isnan(v):
            raise BracketError("fibering bracket failure: NaN while expanding")
        if v > 0.0:
            return t, hi
        if v == 0.0:
            return t, t
        hi, t = t, 0.5 * t
    raise BracketError(
        "fibering bracket failure: gamma' stayed negative down to "
        f"t={t:.3g} (subcritical behavior near 0 violated, or zero field)")


def _bisect(fn, lo, hi, rtol=_BISECT_RTOL):
    """Bisect fn on [lo, hi] with fn(lo) > 0 > fn(hi)."""
    if lo == hi:
        return lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        v = fn(mid)
        if v > 0.0:
            lo = mid
        elif v < 0.0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def nehari_time(problem, u, rtol=_BISECT_RTOL):
    """Unique t(u) > 0 with t u on the Nehari manifold, by bisection."""
    if u.is_zero():
        raise DomainError("the Nehari manifold excludes the zero field")
    fm = FiberingMap(problem, u)
    lo, hi = _bracket_sign_change(fm.gamma_prime)
    t_star = _bisect(fm.gamma_prime, lo, hi, rtol)
    return NehariProjection(t_star=t_star,
                            projected=t_star * u,
                            gamma_prime_at_t=fm.gamma_prime(t_star),
                            bracket=(lo, hi))


def nehari_project(problem, u, rtol=_BISECT_RTOL):
    """t(u) * u, the Nehari representative on the ray through u."""
    return nehari_time(problem, u, rtol).projected


def in_nehari(problem, u, tol=1e-8):
    """Membership test |<J'(u), u>| <= tol * (1 + |J(u)|), excluding u = 0."""
    if u.is_zero():
        return False
    scale = 1.0 + abs(energy(problem, u).total)
    return abs(pairing(problem, u, u)) <= tol * scale


def in_nodal_nehari(problem, u, tol=1e-8):
    """Membership in the nodal Nehari set: u+- nonzero, both pairings small."""
    up = positive_part(u)
    um = negative_part(u)
    if up.is_zero() or um.is_zero():
        return False
    scale = 1.0 + abs(energy(problem, u).total)
    return (abs(pairing(problem, u, up)) <= tol * scale
            and abs(pairing(problem, u, um)) <= tol * scale)


def nodal_times(problem, u, tol=1e-10, max_sweeps=50, rtol=_BISECT_RTOL):
    """Scales (t, s) placing t u+ + s u- in the nodal Nehari set.

    The components are projected independently first (exact when their
    gradient supports do not share elements); if the straddling-element
    coupling leaves a residual, alternate scalar solves on
    <J'(t u+ + s u-), u+-> until both residuals pass the tolerance.
    """
    up = positive_part(u)
    um = negative_part(u)
    if up.is_zero() or um.is_zero():
        raise DomainError("nodal projection needs a sign-changing field")

    t = nehari_time(problem, up, rtol).t_star
    s = nehari_time(problem, um, rtol).t_star

    def combined(tv, sv):
        return Field(u.mesh, tv * up.values + sv * um.values, check_boundary=False)

    def residuals(tv, sv):
        w = combined(tv, sv)
        scale = 1.0 + abs(energy(problem, w).total)
        return pairing(problem, w, up), pairing(problem, w, um), scale

    rp, rm, scale = residuals(t, s)
    sweeps = 0
    while (abs(rp) > tol * scale or abs(rm) > tol * scale) and sweeps < max_sweeps:
        lo, hi = _bracket_sign_change(lambda tv: pairing(problem, combined(tv, s), up),
                                      start=t)
        t = _bisect(lambda tv: pairing(problem, combined(tv, s), up), lo, hi, rtol)
        lo, hi = _bracket_sign_change(lambda sv: pairing(problem, combined(t, sv), um),
                                      start=s)
        s = _bisect(lambda sv: pairing(problem, combined(t, sv), um), lo, hi, rtol)
        rp, rm, scale = residuals(t, s)
        sweeps += 1
    if abs(rp) > tol * scale or abs(rm) > tol * scale:
        raise BracketError(
            f"nodal correction sweep did not converge in {max_sweeps} passes "
            f"(residuals {rp:.3g}, {rm:.3g})")
    return NodalProjection(t_star=t, s_star=s, projected=combined(t, s),
                           residual_plus=rp, residual_minus=rm, sweeps=sweeps)


def nodal_project(problem, u, **kwargs):
    return nodal_times(problem, u, **kwargs).projected
