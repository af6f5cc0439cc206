"""Reaction terms f(x,t): evaluation, antiderivatives, sign truncations and
numerical audits of the superlinearity conditions.

Built-ins are autonomous and odd; the evaluation API still accepts spatial
coordinates so x-dependent kinds can be added behind the same surface.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from . import _kernels as K
from .errors import DomainError, SpecError


class NonlinearitySpec:
    """Base class for reaction terms; subclasses are immutable and pure."""

    kind = "abstract"
    #: (kind code, parameter, truncation code) for the kernel backend, or None
    kernel = None
    #: true when f' blows up at t = 0 (pointwise derivative raises there)
    kink_at_zero = False

    def f(self, t):
        raise NotImplementedError

    def F(self, t):
        raise NotImplementedError

    def f_prime(self, t):
        raise NotImplementedError


class PowerF(NonlinearitySpec):
    """f(t) = |t|**(q-2) t, F(t) = |t|**q / q."""

    kind = "power"

    def __init__(self, q):
        self.q = float(q)
        if self.q <= 1.0:
            raise SpecError(f"power reaction needs q > 1, got {self.q}")
        self.kernel = (K.F_POWER, self.q, K.TRUNC_NONE)
        self.kink_at_zero = self.q < 2.0

    def f(self, t):
        return K.fn_f(K.F_POWER, self.q, K.TRUNC_NONE, t)

    def F(self, t):
        return K.fn_big_f(K.F_POWER, self.q, K.TRUNC_NONE, t)

    def f_prime(self, t):
        return K.fn_f_prime(K.F_POWER, self.q, K.TRUNC_NONE, t)

    def __repr__(self):
        return f"PowerF(q={self.q})"


class LogExampleF(NonlinearitySpec):
    """f(t) = p t**(p-1) log(1+t) + t**p/(1+t) for t > 0, extended oddly.

    Antiderivative F(t) = |t|**p log(1+|t|). Pairs with the log-power
    N-function; admissibility against a given Phi requires em < p < ell*.
    """

    kind = "log_example"

    def __init__(self, p):
        self.p = float(p)
        if self.p <= 1.0:
            raise SpecError(f"log_example reaction needs p > 1, got {self.p}")
        self.kernel = (K.F_LOG, self.p, K.TRUNC_NONE)

    def f(self, t):
        return K.fn_f(K.F_LOG, self.p, K.TRUNC_NONE, t)

    def F(self, t):
        return K.fn_big_f(K.F_LOG, self.p, K.TRUNC_NONE, t)

    def f_prime(self, t):
        return K.fn_f_prime(K.F_LOG, self.p, K.TRUNC_NONE, t)

    def __repr__(self):
        return f"LogExampleF(p={self.p})"


class TabulatedF(NonlinearitySpec):
    """Reaction given by samples of f on a positive grid, extended oddly.

    The quotient f(t)/t**(m_ref-1) is interpolated monotonically (PCHIP), so
    monotone quotient data stay monotone after interpolation; F comes from a
    dense cumulative quadrature.
    """

    kind = "table"

    def __init__(self, t, f, m_ref=2.0):
        t = np.asarray(t, dtype=float)
        fv = np.asarray(f, dtype=float)
        if t.ndim != 1 or t.shape != fv.shape or t.size < 4:
            raise SpecError("table needs matching 1-d arrays with >= 4 samples")
        if not (np.all(np.diff(t) > 0) and t[0] > 0):
            raise SpecError("table abscissae must be positive and increasing")
        self.t_table = t
        self.f_table = fv
        self.m_ref = float(m_ref)
        self.kink_at_zero = self.m_ref < 2.0
        q = fv / t ** (self.m_ref - 1.0)
        self._Q = PchipInterpolator(t, q, extrapolate=False)
        self._Qp = self._Q.derivative()
        dense = np.geomspace(t[0], t[-1], 4097)
        fd = self._f_pos(dense)
        # below t[0], f is the local power law Q(t0) s**(m_ref-1)
        head = fd[0] * dense[0] / self.m_ref
        self._F_dense = PchipInterpolator(
            dense, head + cumulative_simpson(fd, x=dense, initial=0.0))
        self._f_head = head

    def _q_ext(self, x):
        t0, t1 = self.t_table[0], self.t_table[-1]
        xc = np.clip(x, t0, t1)
        return np.asarray(self._Q(xc), dtype=float)

    def _f_pos(self, x):
        return self._q_ext(x) * x ** (self.m_ref - 1.0)

    def f(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.abs(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x == 0.0, 0.0, np.sign(t) * self._f_pos(x))
        return out

    def F(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.abs(t)
        t0, t1 = self.t_table[0], self.t_table[-1]
        m = self.m_ref
        out = np.empty_like(x)
        below = x <= t0
        out[below] = self._f_head * (x[below] / t0) ** m
        inside = ~below
        out[inside] = self._F_dense(np.clip(x[inside], t0, t1))
        above = x > t1
        if np.any(above):
            q1 = float(self._q_ext(np.asarray([t1]))[0])
            out[above] += q1 * (x[above] ** m - t1 ** m) / m
        return out

    def f_prime(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.abs(t)
        t0, t1 = self.t_table[0], self.t_table[-1]
        m = self.m_ref
        xc = np.clip(x, t0, t1)
        qp = np.where((x >= t0) & (x <= t1), np.asarray(self._Qp(xc), dtype=float), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = qp * x ** (m - 1.0) + (m - 1.0) * self._q_ext(x) * x ** (m - 2.0)
        if m > 2.0:
            out = np.where(x == 0.0, 0.0, out)
        return out

    def __repr__(self):
        return (f"TabulatedF({len(self.t_table)} samples, m_ref={self.m_ref})")


class TruncatedF(NonlinearitySpec):
    """One-sided truncation f+ (keeps t >= 0) or f- (keeps t <= 0)."""

    def __init__(self, base, sign):
        if isinstance(base, TruncatedF):
            raise SpecError("cannot truncate an already truncated reaction")
        if sign not in (+1, -1):
            raise SpecError("truncation sign must be +1 or -1")
        self.base = base
        self.sign = sign
        self.kind = base.kind + ("+" if sign > 0 else "-")
        self.kink_at_zero = base.kink_at_zero
        if base.kernel is not None:
            code, a, _ = base.kernel
            self.kernel = (code, a, K.TRUNC_PLUS if sign > 0 else K.TRUNC_MINUS)

    def _mask(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (t < 0.0) if self.sign > 0 else (t > 0.0)

    def f(self, t):
        return np.where(self._mask(t), 0.0, self.base.f(t))

    def F(self, t):
        return np.where(self._mask(t), 0.0, self.base.F(t))

    def f_prime(self, t):
        return np.where(self._mask(t), 0.0, self.base.f_prime(t))

    def __repr__(self):
        return f"TruncatedF({self.base!r}, {'+' if self.sign > 0 else '-'})"


# -- operations -------------------------------------------------------------

def f_eval(spec, t, x=None):
    """f(x,t); built-ins are autonomous, x is accepted for interface parity."""
    return float(spec.f(np.asarray([float(t)]))[0])


def F_eval(spec, t, x=None):
    """Antiderivative F(x,t) = integral of f from 0 to t."""
    return float(spec.F(np.asarray([float(t)]))[0])


def f_prime_eval(spec, t, x=None):
    """df/dt at t; raises for t = 0 on kinds with a kink there."""
    if t == 0 and spec.kink_at_zero:
        raise DomainError("f' undefined at t = 0 for this kind")
    return float(spec.f_prime(np.asarray([float(t)]))[0])


def truncate(spec, sign):
    """Sign truncation: 'plus' keeps the t >= 0 branch, 'minus' the t <= 0 one."""
    signs = {"plus": +1, "minus": -1, +1: +1, -1: -1}
    if sign not in signs:
        raise SpecError("sign must be 'plus' or 'minus'")
    return TruncatedF(spec, signs[sign])


@dataclass(frozen=True)
class GrowthEnvelope:
    """Growth bound |f(x,t)| <= C (1 + psi(t)) with Psi an N-function."""

    psi_spec: object
    C: float

    def indices(self):
        return self.psi_spec.indices()


@dataclass(frozen=True)
class FConditionReport:
    conditions: dict  # name -> {"passed": bool, ...witness...}

    @property
    def passed(self):
        return all(c["passed"] for c in self.conditions.values())

    def as_dict(self):
        return dict(self.conditions)


def _quotient_grid(spec, em, lo=1e-4, hi=1e4, n=512):
    tg = np.geomspace(lo, hi, n)
    qp = np.asarray(spec.f(tg)) / tg ** (em - 1.0)
    qm = np.asarray(spec.f(-tg)) / (tg ** (em - 2.0) * (-tg))
    return tg, qp, qm


def f1_quotient_increasing(spec, em, lo=1e-4, hi=1e4, n=512):
    """Grid check of (f1): f(t)/(|t|^(em-2) t) strictly increasing in |t|.

    Checked separately on each half-line (for odd f the quotient is even, so
    'increasing' is in the modulus, matching how the condition enters the
    fibering-map monotonicity).
    """
    tg, qp, qm = _quotient_grid(spec, em, lo, hi, n)
    ok_p = np.all(np.diff(qp) > 0)
    ok_m = np.all(np.diff(qm) > 0)
    witness = {}
    if not ok_p:
        i = int(np.argmin(np.diff(qp)))
        witness["positive_side"] = {"t": [float(tg[i]), float(tg[i + 1])],
                                    "q": [float(qp[i]), float(qp[i + 1])]}
    if not ok_m:
        i = int(np.argmin(np.diff(qm)))
        witness["negative_side"] = {"t": [float(-tg[i]), float(-tg[i + 1])],
                                    "q": [float(qm[i]), float(qm[i + 1])]}
    return bool(ok_p and ok_m), witness


def check_f_conditions(spec, phi, lambda1_estimate, envelope=None, margin=1e-3):
    """Numerical audit of (f0)-(f3) (and (psi1) when an envelope is given).

    (f2) is a limit bound and is sampled at t = 1e-2..1e-6 with a strict
    margin below lambda1; both the f/(t phi) quotient and the derived
    t f/Phi < lambda1/em form are reported.
    """
    if lambda1_estimate <= 0:
        raise DomainError("lambda1 estimate must be positive")
    rep = phi.indices()
    em = rep.em
    conditions = {}

    ok, wit = f1_quotient_increasing(spec, em)
    conditions["f1"] = {"passed": bool(ok), **wit}

    ts = np.asarray([10.0 ** (-k) for k in range(2, 7)])
    fq = np.asarray(spec.f(ts)).ravel()
    q_primary = fq / (ts * np.asarray(phi.phi(ts)).ravel())
    bound = lambda1_estimate * (1.0 - margin)
    ok2 = bool(np.all(q_primary < bound))
    conditions["f2"] = {"passed": ok2, "samples_t": ts.tolist(),
                        "quotient": q_primary.tolist(), "bound": bound}
    q_variant = ts * fq / np.asarray(phi.big_phi(ts)).ravel()
    bound_v = lambda1_estimate / em * (1.0 - margin)
    conditions["f2_variant"] = {"passed": bool(np.all(q_variant < bound_v)),
                                "samples_t": ts.tolist(),
                                "quotient": q_variant.tolist(), "bound": bound_v}

    tk = 10.0 ** np.arange(0, 7)
    qk = np.asarray(spec.f(tk)).ravel() / tk ** (em - 1.0)
    rising = np.all(np.diff(qk) > 0)
    ok3 = bool(rising and qk[-1] > 100.0 * qk[0])
    conditions["f3"] = {"passed": ok3, "samples_t": tk.tolist(),
                        "quotient": qk.tolist(), "growth_factor_cutoff": 100.0}

    if envelope is not None:
        tg = np.geomspace(1e-4, 1e4, 512)
        psi_vals = np.asarray(envelope.psi_spec.h(tg)).ravel()  # psi(t) = Psi'(t)
        fmag = np.abs(np.asarray(spec.f(tg)).ravel())
        ok0 = bool(np.all(fmag <= envelope.C * (1.0 + psi_vals) * (1.0 + 1e-12)))
        conditions["f0"] = {"passed": ok0, "C": envelope.C}
        prep = envelope.indices()
        ok_psi = bool(em < prep.ell <= prep.em < rep.ell_star)
        conditions["psi1"] = {"passed": ok_psi, "ell_psi": prep.ell,
                              "em_psi": prep.em, "ell_star": rep.ell_star}

    return FConditionReport(conditions=conditions)


# -- JSON wire format -------------------------------------------------------

def spec_from_json(data):
    """Build a NonlinearitySpec from its CLI JSON form."""
    if not isinstance(data, dict) or "kind" not in data:
        raise SpecError("reaction spec must be an object with a 'kind' key")
    kind = data["kind"]
    known = {
        "power": {"kind", "q"},
        "log_example": {"kind", "p"},
        "table": {"kind", "t", "f", "m_ref"},
    }
    if kind not in known:
        raise SpecError(f"unknown reaction kind {kind!r}")
    extra = set(data) - known[kind]
    if extra:
        raise SpecError(f"unknown keys in reaction spec: {sorted(extra)}")
    try:
        if kind == "power":
            return PowerF(data["q"])
        if kind == "log_example":
            return LogExampleF(data["p"])
        return TabulatedF(data["t"], data["f"], data.get("m_ref", 2.0))
    except KeyError as exc:
        raise SpecError(f"missing key in reaction spec: {exc}") from exc


def envelope_from_json(data, nf_spec_from_json):
    """Optional growth envelope: {"psi": {...N-function...}, "C": ...}."""
    if not isinstance(data, dict):
        raise SpecError("envelope must be an object")
    extra = set(data) - {"psi", "C"}
    if extra:
        raise SpecError(f"unknown keys in envelope: {sorted(extra)}")
    if "psi" not in data or "C" not in data:
        raise SpecError("envelope needs 'psi' and 'C'")
    return GrowthEnvelope(psi_spec=nf_spec_from_json(data["psi"]), C=float(data["C"]))
