"""Pure NumPy kernels: pointwise N-function / reaction evaluations and the
fused weighted reductions used by the fibering-map hot path.

Semantics here are the contract; the compiled extension in ``_core.pyx``
must match bit-for-bit up to floating-point reassociation.

Kind codes (see ``nehari._kernels``):
  N-function: 0 power(p)        phi(t) = t**(p-2)
              1 sum(p, q)       phi(t) = t**(p-2) + t**(q-2)
              2 log-power(g)    Phi(t) = t**g * log(1+t)
  Reaction:   0 power(q)        f(t) = |t|**(q-2) * t
              1 log-example(p)  f(t) = p t**(p-1) log(1+t) + t**p/(1+t), odd
Truncation codes: 0 none, +1 keep t >= 0, -1 keep t <= 0.
"""

import numpy as np


def _arr(t):
    return np.asarray(t, dtype=np.float64)


# -- N-function pointwise -------------------------------------------------

def nf_phi(kind, a, b, t):
    """phi(t) for t > 0 (t = 0 may yield inf for singular densities)."""
    t = _arr(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            return t ** (a - 2.0)
        if kind == 1:
            return t ** (a - 2.0) + t ** (b - 2.0)
        if kind == 2:
            return a * t ** (a - 2.0) * np.log1p(t) + t ** (a - 1.0) / (1.0 + t)
    raise ValueError(f"unknown N-function kind code {kind}")


def nf_big_phi(kind, a, b, t):
    """Phi(|t|); even extension, Phi(0) = 0."""
    x = np.abs(_arr(t))
    if kind == 0:
        return x ** a / a
    if kind == 1:
        return x ** a / a + x ** b / b
    if kind == 2:
        return x ** a * np.log1p(x)
    raise ValueError(f"unknown N-function kind code {kind}")


def nf_phi_prime(kind, a, b, t):
    """phi'(t) for t > 0."""
    t = _arr(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            return (a - 2.0) * t ** (a - 3.0)
        if kind == 1:
            return (a - 2.0) * t ** (a - 3.0) + (b - 2.0) * t ** (b - 3.0)
        if kind == 2:
            return (a * (a - 2.0) * t ** (a - 3.0) * np.log1p(t)
                    + (2.0 * a - 1.0) * t ** (a - 2.0) / (1.0 + t)
                    - t ** (a - 1.0) / (1.0 + t) ** 2)
    raise ValueError(f"unknown N-function kind code {kind}")


# -- reaction pointwise ---------------------------------------------------

def _trunc_mask(trunc, t):
    if trunc > 0:
        return t < 0.0
    if trunc < 0:
        return t > 0.0
    return np.zeros(t.shape, dtype=bool)


def fn_f(kind, a, trunc, t):
    """f(t); odd for the built-ins, f(0) = 0."""
    t = _arr(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            out = np.where(t == 0.0, 0.0, np.abs(t) ** (a - 2.0) * t)
        elif kind == 1:
            x = np.abs(t)
            val = a * x ** (a - 1.0) * np.log1p(x) + x ** a / (1.0 + x)
            out = np.sign(t) * val
        else:
            raise ValueError(f"unknown reaction kind code {kind}")
    return np.where(_trunc_mask(trunc, t), 0.0, out)


def fn_big_f(kind, a, trunc, t):
    """F(t) = integral of f from 0 to t; even for the built-ins."""
    t = _arr(t)
    x = np.abs(t)
    if kind == 0:
        out = x ** a / a
    elif kind == 1:
        out = x ** a * np.log1p(x)
    else:
        raise ValueError(f"unknown reaction kind code {kind}")
    return np.where(_trunc_mask(trunc, t), 0.0, out)


def fn_f_prime(kind, a, trunc, t):
    """df/dt; even for the built-ins (may blow up at 0 when a < 2)."""
    t = _arr(t)
    x = np.abs(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            out = (a - 1.0) * x ** (a - 2.0)
        elif kind == 1:
            out = (a * (a - 1.0) * x ** (a - 2.0) * np.log1p(x)
                   + 2.0 * a * x ** (a - 1.0) / (1.0 + x)
                   - x ** a / (1.0 + x) ** 2)
        else:
            raise ValueError(f"unknown reaction kind code {kind}")
    return np.where(_trunc_mask(trunc, t), 0.0, out)


# -- fused reductions (fibering-map hot path) -----------------------------

def sum_big_phi(kind, a, b, g, w, t):
    """sum_i Phi(t*g_i) * w_i."""
    return float(np.dot(nf_big_phi(kind, a, b, t * g), w))


def sum_phi_gg(kind, a, b, g, w, t, eps):
    """sum_i phi(s_i) * t * g_i^2 * w_i with s_i = hypot(t*g_i, eps)."""
    g = _arr(g)
    s = np.hypot(t * g, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = nf_phi(kind, a, b, s) * t * g * g
    val = np.where(g == 0.0, 0.0, val)
    return float(np.dot(val, w))


def sum_phi_curv(kind, a, b, g, w, t, eps):
    """sum_i [phi(s_i) + phi'(s_i)*s_i] * g_i^2 * w_i, s_i = hypot(t*g_i, eps)."""
    g = _arr(g)
    s = np.hypot(t * g, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (nf_phi(kind, a, b, s) + nf_phi_prime(kind, a, b, s) * s) * g * g
    val = np.where(g == 0.0, 0.0, val)
    return float(np.dot(val, w))


def sum_big_f(kind, a, trunc, u, w, t):
    """sum_j F(t*u_j) * w_j."""
    return float(np.dot(fn_big_f(kind, a, trunc, t * u), w))


def sum_f_u(kind, a, trunc, u, w, t):
    """sum_j f(t*u_j) * u_j * w_j."""
    u = _arr(u)
    return float(np.dot(fn_f(kind, a, trunc, t * u) * u, w))


def sum_fp_uu(kind, a, trunc, u, w, t):
    """sum_j f'(t*u_j) * u_j^2 * w_j (zero contribution where u_j = 0)."""
    u = _arr(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = fn_f_prime(kind, a, trunc, t * u) * u * u
    val = np.where(u == 0.0, 0.0, val)
    return float(np.dot(val, w))
