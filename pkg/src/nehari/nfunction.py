"""N-functions Phi and their densities, indices, conjugates and condition checks.

An N-function is described by its density ``phi`` through
``Phi(t) = integral_0^t s*phi(s) ds`` (even extension to t < 0). The growth
of Phi is summarized by the first-order indices ``ell``/``em`` (extrema of
``t^2 phi(t)/Phi(t)``) and the second-order indices ``ell2``/``em2``
(extrema of ``(t phi)'' t / (t phi)'`` shifted by 2). All built-in kinds
carry closed forms for ``h(t) = t*phi(t)`` and its derivatives; tabulated
kinds interpolate ``h`` monotonically.

Everything here is a pure function of an immutable spec (caches are
write-once), so concurrent use is safe.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from . import _kernels as K
from .errors import BracketError, DomainError, SpecError

_INDEX_TMIN = 1e-6
_INDEX_TMAX = 1e6
_INDEX_SAMPLES = 4096


@dataclass(frozen=True)
class IndexReport:
    """Growth indices of an N-function over a sampled range.

    ``ell``/``em`` bound the first-order quotient t^2 phi/Phi, ``ell2``/``em2``
    the second-order quotient 2 + (t phi)'' t/(t phi)'. ``ell_star``/``em_star``
    are the Sobolev-conjugate exponents ell*N/(N-ell), em*N/(N-em) (NaN when
    em >= N). When a quotient extremum sits at a grid endpoint the reported
    value is tail-extrapolated (linearly in 1/log t) toward the true limit.
    """

    ell: float
    em: float
    ell2: float
    em2: float
    ell_star: float
    em_star: float
    sample_range: tuple
    conditions_pass: dict


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    witness: dict


@dataclass(frozen=True)
class PhiConditionReport:
    phi1: ConditionResult
    phi2: ConditionResult
    phi3: ConditionResult
    phi3_prime: ConditionResult

    @property
    def passed(self):
        return (self.phi1.passed and self.phi2.passed
                and self.phi3.passed and self.phi3_prime.passed)

    def as_dict(self):
        return {name: {"passed": c.passed, "witness": c.witness}
                for name, c in [("phi1", self.phi1), ("phi2", self.phi2),
                                ("phi3", self.phi3), ("phi3_prime", self.phi3_prime)]}


class NFunctionSpec:
    """Base class; subclasses fix the density and its closed forms."""

    kind = "abstract"
    #: (kind code, a, b) for the kernel backend, or None for tabulated kinds.
    kernel = None
    #: evaluation range the spec is trusted on (clamped for tabulated kinds)
    sample_range = (_INDEX_TMIN, _INDEX_TMAX)

    def __init__(self, ambient_dimension):
        if ambient_dimension is None:
            ambient_dimension = self._default_dimension()
        if int(ambient_dimension) != ambient_dimension or ambient_dimension < 2:
            raise SpecError("ambient_dimension must be an integer >= 2")
        self.ambient_dimension = int(ambient_dimension)
        self._indices = None
        self._sobolev = None

    # subclasses must provide phi/big_phi/phi_prime/h/h_prime/h_second on arrays

    def quotient1(self, t):
        """First-order quotient t^2 phi(t)/Phi(t) = t h(t)/Phi(t)."""
        t = np.asarray(t, dtype=float)
        return t * self.h(t) / self.big_phi(t)

    def quotient2(self, t):
        """Second-order quotient 2 + (t phi)''(t) t / (t phi)'(t)."""
        t = np.asarray(t, dtype=float)
        return 2.0 + self.h_second(t) * t / self.h_prime(t)

    def indices(self):
        if self._indices is None:
            self._indices = compute_indices(self)
        return self._indices

    def sobolev_conjugate(self):
        if self._sobolev is None:
            self._sobolev = _SobolevConjugate(self)
        return self._sobolev

    def __repr__(self):
        return f"{type(self).__name__}(N={self.ambient_dimension})"


class PowerPhi(NFunctionSpec):
    """phi(t) = t**(p-2), Phi(t) = |t|**p / p (the p-Laplacian model)."""

    kind = "power"

    def __init__(self, p, ambient_dimension=None):
        self.p = float(p)
        super().__init__(ambient_dimension)
        if not 1.0 < self.p < self.ambient_dimension:
            raise SpecError(f"power spec needs 1 < p < N, got p={self.p}, "
                            f"N={self.ambient_dimension}")
        self.kernel = (K.PHI_POWER, self.p, 0.0)

    def _default_dimension(self):
        return int(math.floor(self.p)) + 1

    def phi(self, t):
        return K.nf_phi(K.PHI_POWER, self.p, 0.0, t)

    def big_phi(self, t):
        return K.nf_big_phi(K.PHI_POWER, self.p, 0.0, t)

    def phi_prime(self, t):
        return K.nf_phi_prime(K.PHI_POWER, self.p, 0.0, t)

    def h(self, t):
        return np.asarray(t, dtype=float) ** (self.p - 1.0)

    def h_prime(self, t):
        return (self.p - 1.0) * np.asarray(t, dtype=float) ** (self.p - 2.0)

    def h_second(self, t):
        p = self.p
        return (p - 1.0) * (p - 2.0) * np.asarray(t, dtype=float) ** (p - 3.0)

    def __repr__(self):
        return f"PowerPhi(p={self.p}, N={self.ambient_dimension})"


class SumPowersPhi(NFunctionSpec):
    """phi(t) = t**(p-2) + t**(q-2) with q < p (the (p,q)-Laplacian)."""

    kind = "pq"

    def __init__(self, p, q, ambient_dimension=None):
        self.p = float(p)
        self.q = float(q)
        super().__init__(ambient_dimension)
        if not 1.0 < self.q < self.p < self.ambient_dimension:
            raise SpecError(f"pq spec needs 1 < q < p < N, got q={self.q}, "
                            f"p={self.p}, N={self.ambient_dimension}")
        self.kernel = (K.PHI_SUM, self.p, self.q)

    def _default_dimension(self):
        return int(math.floor(self.p)) + 1

    def phi(self, t):
        return K.nf_phi(K.PHI_SUM, self.p, self.q, t)

    def big_phi(self, t):
        return K.nf_big_phi(K.PHI_SUM, self.p, self.q, t)

    def phi_prime(self, t):
        return K.nf_phi_prime(K.PHI_SUM, self.p, self.q, t)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        return t ** (self.p - 1.0) + t ** (self.q - 1.0)

    def h_prime(self, t):
        t = np.asarray(t, dtype=float)
        return ((self.p - 1.0) * t ** (self.p - 2.0)
                + (self.q - 1.0) * t ** (self.q - 2.0))

    def h_second(self, t):
        t = np.asarray(t, dtype=float)
        p, q = self.p, self.q
        return ((p - 1.0) * (p - 2.0) * t ** (p - 3.0)
                + (q - 1.0) * (q - 2.0) * t ** (q - 3.0))

    def __repr__(self):
        return f"SumPowersPhi(p={self.p}, q={self.q}, N={self.ambient_dimension})"


class LogPowerPhi(NFunctionSpec):
    """Phi(t) = |t|**gamma * log(1+|t|); indices (gamma, gamma+1).

    Admissible parameters satisfy (-1+sqrt(1+4N))/2 < gamma < N-1,
    equivalently gamma+1 < N < gamma^2+gamma.
    """

    kind = "log"

    def __init__(self, gamma, ambient_dimension=None):
        self.gamma = float(gamma)
        super().__init__(ambient_dimension)
        N = self.ambient_dimension
        lo = (-1.0 + math.sqrt(1.0 + 4.0 * N)) / 2.0
        if not (1.0 < lo < self.gamma < N - 1.0):
            raise SpecError(
                f"log spec needs (-1+sqrt(1+4N))/2 < gamma < N-1; got "
                f"gamma={self.gamma}, N={N} (window ({lo:.4f}, {N - 1}))")
        self.kernel = (K.PHI_LOG, self.gamma, 0.0)

    def _default_dimension(self):
        # smallest integer N with gamma+1 < N < gamma^2+gamma
        n = int(math.floor(self.gamma + 1.0)) + 1
        if n >= self.gamma ** 2 + self.gamma:
            raise SpecError(f"no admissible ambient dimension for gamma={self.gamma}")
        return n

    def phi(self, t):
        return K.nf_phi(K.PHI_LOG, self.gamma, 0.0, t)

    def big_phi(self, t):
        return K.nf_big_phi(K.PHI_LOG, self.gamma, 0.0, t)

    def phi_prime(self, t):
        return K.nf_phi_prime(K.PHI_LOG, self.gamma, 0.0, t)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        g = self.gamma
        return g * t ** (g - 1.0) * np.log1p(t) + t ** g / (1.0 + t)

    def h_prime(self, t):
        t = np.asarray(t, dtype=float)
        g = self.gamma
        return (g * (g - 1.0) * t ** (g - 2.0) * np.log1p(t)
                + 2.0 * g * t ** (g - 1.0) / (1.0 + t)
                - t ** g / (1.0 + t) ** 2)

    def h_second(self, t):
        t = np.asarray(t, dtype=float)
        g = self.gamma
        return (g * (g - 1.0) * (g - 2.0) * t ** (g - 3.0) * np.log1p(t)
                + 3.0 * g * (g - 1.0) * t ** (g - 2.0) / (1.0 + t)
                - 3.0 * g * t ** (g - 1.0) / (1.0 + t) ** 2
                + 2.0 * t ** g / (1.0 + t) ** 3)

    def __repr__(self):
        return f"LogPowerPhi(gamma={self.gamma}, N={self.ambient_dimension})"


class TabulatedPhi(NFunctionSpec):
    """N-function given by samples of h(t) = t*phi(t) on a positive grid.

    h is interpolated by a monotone cubic (PCHIP), which preserves strict
    monotonicity of the data; Phi is its exact antiderivative plus a
    power-law head below the first sample. Outside the table the end
    slopes extend h as local power laws.
    """

    kind = "table"

    def __init__(self, t, tphi, ambient_dimension=3):
        t = np.asarray(t, dtype=float)
        hval = np.asarray(tphi, dtype=float)
        if t.ndim != 1 or t.shape != hval.shape or t.size < 4:
            raise SpecError("table needs matching 1-d arrays with >= 4 samples")
        if not (np.all(np.diff(t) > 0) and t[0] > 0):
            raise SpecError("table abscissae must be positive and increasing")
        if np.any(hval <= 0):
            raise SpecError("table values of t*phi(t) must be positive")
        self.t_table = t
        self.h_table = hval
        super().__init__(ambient_dimension)
        self.sample_range = (float(t[0]), float(t[-1]))
        self._H = PchipInterpolator(t, hval, extrapolate=False)
        self._Hp = self._H.derivative()
        self._Hpp = self._H.derivative(2)
        self._A = self._H.antiderivative()
        # local power-law exponents at the table ends, alpha = d log h / d log t
        self._alpha_lo = float(self._Hp(t[0]) * t[0] / hval[0])
        self._alpha_hi = float(self._Hp(t[-1]) * t[-1] / hval[-1])
        if self._alpha_lo <= 0:
            self._alpha_lo = 1.0
        # Phi at the first sample: integral of the power-law head
        self._phi_head = hval[0] * t[0] / (self._alpha_lo + 1.0)

    def _default_dimension(self):
        return 3

    def _h_scalar_ext(self, t):
        t0, t1 = self.sample_range
        below = t < t0
        above = t > t1
        inside = ~(below | above)
        out = np.empty_like(t)
        out[inside] = self._H(t[inside])
        out[below] = self.h_table[0] * (t[below] / t0) ** self._alpha_lo
        out[above] = self.h_table[-1] * (t[above] / t1) ** self._alpha_hi
        return out

    def h(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self._h_scalar_ext(t)

    def h_prime(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t0, t1 = self.sample_range
        tc = np.clip(t, t0, t1)
        out = np.asarray(self._Hp(tc), dtype=float)
        below, above = t < t0, t > t1
        out[below] = (self._alpha_lo * self.h_table[0] / t0
                      * (t[below] / t0) ** (self._alpha_lo - 1.0))
        out[above] = (self._alpha_hi * self.h_table[-1] / t1
                      * (t[above] / t1) ** (self._alpha_hi - 1.0))
        return out

    def h_second(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t0, t1 = self.sample_range
        tc = np.clip(t, t0, t1)
        out = np.asarray(self._Hpp(tc), dtype=float)
        a_lo, a_hi = self._alpha_lo, self._alpha_hi
        below, above = t < t0, t > t1
        out[below] = (a_lo * (a_lo - 1.0) * self.h_table[0] / t0 ** 2
                      * (t[below] / t0) ** (a_lo - 2.0))
        out[above] = (a_hi * (a_hi - 1.0) * self.h_table[-1] / t1 ** 2
                      * (t[above] / t1) ** (a_hi - 2.0))
        return out

    def phi(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.h(t) / t

    def phi_prime(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (self.h_prime(t) - self.phi(t)) / t

    def big_phi(self, t):
        t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
        t0, t1 = self.sample_range
        out = np.empty_like(t)
        below = t <= t0
        out[below] = self._phi_head * (t[below] / t0) ** (self._alpha_lo + 1.0)
        inside = (t > t0) & (t <= t1)
        out[inside] = self._phi_head + self._A(t[inside]) - self._A(t0)
        above = t > t1
        if np.any(above):
            phi_t1 = self._phi_head + self._A(t1) - self._A(t0)
            a = self._alpha_hi
            out[above] = phi_t1 + (self.h_table[-1] * t1 / (a + 1.0)
                                   * ((t[above] / t1) ** (a + 1.0) - 1.0))
        return out

    def __repr__(self):
        return (f"TabulatedPhi({len(self.t_table)} samples on "
                f"[{self.sample_range[0]:g}, {self.sample_range[1]:g}], "
                f"N={self.ambient_dimension})")


# -- operations -------------------------------------------------------------

def phi_eval(spec, t):
    """Density value phi(t) for t > 0."""
    if t <= 0:
        raise DomainError(f"phi is evaluated for t > 0, got t={t}")
    return float(spec.phi(np.asarray([t]))[0])


def big_phi_eval(spec, t):
    """Phi(t) = Phi(|t|) (even extension), Phi(0) = 0."""
    return float(spec.big_phi(np.asarray([float(t)]))[0])


def phi_prime_eval(spec, t):
    """phi'(t) for t > 0."""
    if t <= 0:
        raise DomainError(f"phi' is evaluated for t > 0, got t={t}")
    return float(spec.phi_prime(np.asarray([t]))[0])


def _tail_extrapolated(tg, q, i_ext):
    """Extrapolate an endpoint-attained quotient extremum toward its limit.

    Grid extrema of a quotient whose extremum lives at t -> 0 or t -> inf
    miss the limit by the tail residual. Power-law tails decay below
    rounding inside the default range and keep the endpoint value; the slow
    1/log-type tails (log-power kind) get a linear extrapolation in
    x = 1/log t, which is exact for that tail shape. The tail type is
    classified by comparing successive quotient differences two and four
    decades inside the range.
    """
    n = len(tg)
    if i_ext == 0:
        i0 = 0
        i1 = min(n - 1, int(np.searchsorted(tg, tg[0] * 1e2)))
        i2 = min(n - 1, int(np.searchsorted(tg, tg[0] * 1e4)))
    elif i_ext == n - 1:
        i0 = n - 1
        i1 = max(0, int(np.searchsorted(tg, tg[-1] / 1e2)))
        i2 = max(0, int(np.searchsorted(tg, tg[-1] / 1e4)))
    else:
        return float(q[i_ext])
    t0, t1 = tg[i0], tg[i1]
    if t0 <= 0 or abs(math.log(t0)) < 1.0 or i0 == i1 or i1 == i2:
        return float(q[i_ext])
    d01 = q[i1] - q[i0]
    d12 = q[i2] - q[i1]
    if abs(d01) < 1e-12 * (1.0 + abs(q[i0])):
        return float(q[i0])
    if abs(d01) < 0.1 * abs(d12):
        return float(q[i0])  # fast (power-law) tail: endpoint is converged
    x0, x1 = 1.0 / math.log(t0), 1.0 / math.log(t1)
    if x1 == x0:
        return float(q[i0])
    return float(q[i0] - x0 * d01 / (x1 - x0))


def compute_indices(spec, t_min=_INDEX_TMIN, t_max=_INDEX_TMAX,
                    samples=_INDEX_SAMPLES):
    """Sample both growth quotients on a log grid and report their extrema.

    Extrema attained at a grid endpoint are tail-extrapolated (the sampled
    inf/sup of a monotone quotient lands on the endpoint, while the true
    index is the limit). If Phi underflows at the small end, the range is
    shrunk once and the sweep retried.
    """
    if not (0 < t_min < t_max):
        raise SpecError("need 0 < t_min < t_max")
    if samples < 100:
        raise SpecError("need samples >= 100")
    t_min = max(t_min, spec.sample_range[0])
    t_max = min(t_max, spec.sample_range[1])

    for attempt in range(2):
        tg = np.geomspace(t_min, t_max, samples)
        q1 = spec.quotient1(tg)
        q2 = spec.quotient2(tg)
        if np.all(np.isfinite(q1)) and np.all(np.isfinite(q2)):
            break
        if attempt == 1:
            raise SpecError("growth quotient evaluation failed (underflow?) on "
                            f"[{t_min:g}, {t_max:g}]")
        t_min *= 1e3  # Phi(t) may underflow to 0 at the small end

    ell = _tail_extrapolated(tg, q1, int(np.argmin(q1)))
    em = _tail_extrapolated(tg, q1, int(np.argmax(q1)))
    ell2 = _tail_extrapolated(tg, q2, int(np.argmin(q2)))
    em2 = _tail_extrapolated(tg, q2, int(np.argmax(q2)))

    N = spec.ambient_dimension
    if em < N:
        ell_star = ell * N / (N - ell)
        em_star = em * N / (N - em)
    else:
        ell_star = em_star = float("nan")

    hg = spec.h(tg)
    conditions = {
        "phi1": _phi1_scan(spec)[0],
        "phi2": bool(np.all(np.diff(hg) > 0)),
        "phi3": bool(ell2 > 1.0 and em2 < N),
        "phi3_prime": bool(1.0 < ell <= em < N),
    }
    return IndexReport(ell=ell, em=em, ell2=ell2, em2=em2,
                       ell_star=ell_star, em_star=em_star,
                       sample_range=(float(t_min), float(t_max)),
                       conditions_pass=conditions)


def _phi1_scan(spec):
    """Threshold scan for (phi1): t*phi(t) -> 0 at 0 and -> infinity at infinity.

    Cutoffs: along 8 log-spaced points per side, h must be strictly monotone
    toward the limit and change by at least a factor 2 across the scan window.
    """
    lo = max(1e-8, spec.sample_range[0])
    hi = min(1e8, spec.sample_range[1])
    t_zero = np.geomspace(min(1e-1, hi), lo, 8)
    t_inf = np.geomspace(max(1e1, lo), hi, 8)
    h_zero = spec.h(t_zero)
    h_inf = spec.h(t_inf)
    zero_ok = bool(np.all(np.diff(h_zero) < 0) and h_zero[-1] < 0.5 * h_zero[0])
    inf_ok = bool(np.all(np.diff(h_inf) > 0) and h_inf[-1] > 2.0 * h_inf[0])
    witness = {
        "zero_scan": {"t": t_zero.tolist(), "h": h_zero.tolist(), "passed": zero_ok},
        "inf_scan": {"t": t_inf.tolist(), "h": h_inf.tolist(), "passed": inf_ok},
    }
    return zero_ok and inf_ok, witness


def check_conditions(spec):
    """Audit (phi1), (phi2), (phi3), (phi3)' numerically; never raises."""
    phi1_ok, phi1_wit = _phi1_scan(spec)

    t_min = max(_INDEX_TMIN, spec.sample_range[0])
    t_max = min(_INDEX_TMAX, spec.sample_range[1])
    tg = np.geomspace(t_min, t_max, _INDEX_SAMPLES)
    hg = spec.h(tg)
    dh = np.diff(hg)
    if np.all(dh > 0):
        phi2 = ConditionResult(True, {})
    else:
        i = int(np.argmin(dh))
        phi2 = ConditionResult(False, {"t_pair": [float(tg[i]), float(tg[i + 1])],
                                       "h_pair": [float(hg[i]), float(hg[i + 1])]})

    rep = spec.indices()
    N = spec.ambient_dimension
    phi3 = ConditionResult(
        bool(rep.ell2 > 1.0 and rep.em2 < N),
        {"ell2": rep.ell2, "em2": rep.em2, "window": [1.0, float(N)]})
    phi3p = ConditionResult(
        bool(1.0 < rep.ell <= rep.em < N),
        {"ell": rep.ell, "em": rep.em, "window": [1.0, float(N)]})

    return PhiConditionReport(
        phi1=ConditionResult(phi1_ok, phi1_wit),
        phi2=phi2, phi3=phi3, phi3_prime=phi3p)


def _solve_h_equals(spec, target, s0=1.0, max_doublings=200):
    """Solve h(s) = target for s > 0 by monotone bracketing + bisection."""
    if target <= 0:
        return 0.0

    def h(s):
        return float(spec.h(np.asarray([s]))[0])

    lo = hi = s0
    v = h(s0)
    if v < target:
        for _ in range(max_doublings):
            hi *= 2.0
            if h(hi) >= target:
                break
            lo = hi
        else:
            raise BracketError("conjugate bracket expansion failed (upward)")
    else:
        for _ in range(max_doublings):
            lo *= 0.5
            if h(lo) <= target:
                break
            hi = lo
        else:
            raise BracketError("conjugate bracket expansion failed (downward)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * hi:
            break
        if h(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjugate_eval(spec, t):
    """Young conjugate Phi~(t) = max_{s>=0} (t s - Phi(s)).

    The maximizer solves s phi(s) = t, unique by strict monotonicity of
    t*phi(t); it is found by bracketed bisection.
    """
    if t < 0:
        raise DomainError("conjugate is evaluated for t >= 0")
    if t == 0:
        return 0.0
    s = _solve_h_equals(spec, float(t))
    return float(t * s - big_phi_eval(spec, s))


class _SobolevConjugate:
    """Sobolev conjugate Phi_*: inverse of G(t) = int_0^t Phi^{-1}(s) s^{-(N+1)/N} ds.

    G is integrated on a log grid (cumulative Simpson) above a cutoff
    delta = 1e-12; below the cutoff Phi^{-1} is modelled as the local power
    law, which makes the head integral and its inversion analytic. The
    computed G is inverted through a monotone interpolant in log-log
    coordinates; the grid extends itself on demand.
    """

    DELTA = 1e-12
    _S_HI0 = 1e60
    _S_EXTEND = 1e30
    _S_CAP = 1e280

    def __init__(self, spec):
        rep = spec.indices()
        N = spec.ambient_dimension
        if not rep.em < N:
            raise DomainError(
                f"Sobolev conjugate needs em < N (got em={rep.em:.6g}, N={N})")
        self.spec = spec
        self.N = N
        tau_delta = self._phi_inverse(np.asarray([self.DELTA]))[0]
        self.a0 = float(spec.quotient1(np.asarray([tau_delta]))[0])
        self.beta = 1.0 / self.a0 - 1.0 / N  # head exponent of G
        if self.beta <= 0:
            raise DomainError("Sobolev conjugate integral diverges at 0")
        self.g_delta = tau_delta * self.DELTA ** (-1.0 / N) / self.beta
        self.k_head = tau_delta * self.DELTA ** (-1.0 / self.a0) / self.beta
        self._build(self._S_HI0)

    def _phi_inverse(self, s):
        """Vectorized inverse of Phi on positive values."""
        s = np.asarray(s, dtype=float)
        hi = np.ones_like(s)
        for _ in range(1100):
            low = np.asarray(self.spec.big_phi(hi)) < s
            if not np.any(low):
                break
            hi[low] *= 2.0
        lo = 0.5 * hi
        grow = np.asarray(self.spec.big_phi(lo)) > s
        lo[grow] = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            small = np.asarray(self.spec.big_phi(mid)) < s
            lo = np.where(small, mid, lo)
            hi = np.where(small, hi, mid)
        return 0.5 * (lo + hi)

    def _build(self, s_hi):
        x_lo, x_hi = math.log(self.DELTA), math.log(s_hi)
        npts = int(2 * math.ceil((x_hi - x_lo) / 0.004) + 1)
        x = np.linspace(x_lo, x_hi, npts)
        tau = self._phi_inverse(np.exp(x))
        integrand = tau * np.exp(-x / self.N)
        g = self.g_delta + cumulative_simpson(integrand, x=x, initial=0.0)
        logg = np.log(g)
        self.s_hi = s_hi
        self.g_max = float(g[-1])
        self._x_of_logg = PchipInterpolator(logg, x)
        self._logg_of_x = PchipInterpolator(x, logg)
        self._dlogg_dx = self._logg_of_x.derivative()

    def _ensure(self, y_max):
        while self.g_max < y_max:
            if self.s_hi >= self._S_CAP:
                raise DomainError(f"Sobolev conjugate argument {y_max:g} out of range")
            self._build(min(self.s_hi * self._S_EXTEND, self._S_CAP))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(np.abs(y))
        out = np.zeros_like(y)
        pos = y > 0
        if np.any(pos):
            self._ensure(float(y[pos].max()))
            yy = y[pos]
            head = yy <= self.g_delta
            vals = np.empty_like(yy)
            vals[head] = (yy[head] / self.k_head) ** (1.0 / self.beta)
            vals[~head] = np.exp(self._x_of_logg(np.log(yy[~head])))
            out[pos] = vals
        return float(out[0]) if scalar else out

    def quotient(self, y):
        """t Phi_*'(t)/Phi_*(t) at t = y: the reciprocal log-slope of G."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        self._ensure(float(y.max()))
        out = np.empty_like(y)
        head = y <= self.g_delta
        out[head] = 1.0 / self.beta
        if np.any(~head):
            x = self._x_of_logg(np.log(y[~head]))
            out[~head] = 1.0 / self._dlogg_dx(x)
        return out


def sobolev_conjugate_eval(spec, t):
    """Phi_*(t); requires em < N."""
    if t < 0:
        raise DomainError("Sobolev conjugate is evaluated for t >= 0")
    return float(spec.sobolev_conjugate()(float(t)))


# -- JSON wire format -------------------------------------------------------

def spec_from_json(data):
    """Build an NFunctionSpec from its CLI JSON form."""
    if not isinstance(data, dict) or "kind" not in data:
        raise SpecError("N-function spec must be an object with a 'kind' key")
    kind = data["kind"]
    known = {
        "power": {"kind", "p", "ambient_dimension"},
        "pq": {"kind", "p", "q", "ambient_dimension"},
        "log": {"kind", "gamma", "ambient_dimension"},
        "table": {"kind", "t", "tphi", "ambient_dimension"},
    }
    if kind not in known:
        raise SpecError(f"unknown N-function kind {kind!r}")
    extra = set(data) - known[kind]
    if extra:
        raise SpecError(f"unknown keys in N-function spec: {sorted(extra)}")
    N = data.get("ambient_dimension")
    try:
        if kind == "power":
            return PowerPhi(data["p"], N)
        if kind == "pq":
            return SumPowersPhi(data["p"], data["q"], N)
        if kind == "log":
            return LogPowerPhi(data["gamma"], N)
        return TabulatedPhi(data["t"], data["tphi"], N if N is not None else 3)
    except KeyError as exc:
        raise SpecError(f"missing key in N-function spec: {exc}") from exc
