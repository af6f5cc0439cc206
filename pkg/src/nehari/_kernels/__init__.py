"""Kernel backend selection.

The compiled Cython extension is preferred; the NumPy reference
implementation is used when the extension is unavailable or when
``NEHARI_PURE=1`` is set. Both expose the same functions.
"""

import os

PHI_POWER = 0
PHI_SUM = 1
PHI_LOG = 2

F_POWER = 0
F_LOG = 1

TRUNC_NONE = 0
TRUNC_PLUS = 1
TRUNC_MINUS = -1

_force_pure = os.environ.get("NEHARI_PURE", "").strip() not in ("", "0")

if _force_pure:
    from . import _ref as _impl
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _ref as _impl
        BACKEND = "python"

nf_phi = _impl.nf_phi
nf_big_phi = _impl.nf_big_phi
nf_phi_prime = _impl.nf_phi_prime
fn_f = _impl.fn_f
fn_big_f = _impl.fn_big_f
fn_f_prime = _impl.fn_f_prime
sum_big_phi = _impl.sum_big_phi
sum_phi_gg = _impl.sum_phi_gg
sum_phi_curv = _impl.sum_phi_curv
sum_big_f = _impl.sum_big_f
sum_f_u = _impl.sum_f_u
sum_fp_uu = _impl.sum_fp_uu

__all__ = [
    "BACKEND",
    "PHI_POWER", "PHI_SUM", "PHI_LOG",
    "F_POWER", "F_LOG",
    "TRUNC_NONE", "TRUNC_PLUS", "TRUNC_MINUS",
    "nf_phi", "nf_big_phi", "nf_phi_prime",
    "fn_f", "fn_big_f", "fn_f_prime",
    "sum_big_phi", "sum_phi_gg", "sum_phi_curv",
    "sum_big_f", "sum_f_u", "sum_fp_uu",
]
