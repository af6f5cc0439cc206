"""Numerical audits of the computable structure behind the method.

Each check samples a finite surrogate of a lemma-level statement (limits
become threshold scans with documented cutoffs, inequalities become grid
checks with relative slack) and returns a deterministic CheckReport for a
given seed. A deliberately broken spec must fail at least one named check;
the tests exercise that falsification power.
"""

import math
from dataclasses import dataclass

import numpy as np

from .domain import (field_luxemburg_norm, grad_magnitudes,
                     gradient_luxemburg_norm, prolong, random_smooth_field)
from .energy import FiberingMap, Problem, energy
from .errors import BracketError
from .manifold import _bisect, _bracket_sign_change, nehari_time
from .nfunction import check_conditions, conjugate_eval
from .nonlinearity import check_f_conditions

# fixed per-check seed salts so reports are independent of execution order
_SALTS = {
    "fibering_structure": 1,
    "nehari_floor": 2,
    "poincare": 3,
    "zeta_bounds": 4,
    "young_inequality": 5,
}


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    passed: bool
    tolerance: float
    samples: int
    worst_witness: dict

    def as_dict(self):
        return {"check_id": self.check_id, "passed": self.passed,
                "tolerance": self.tolerance, "samples": self.samples,
                "worst_witness": _json_safe(self.worst_witness)}


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _rng(seed, check_id):
    return np.random.default_rng(np.random.SeedSequence([int(seed), _SALTS.get(check_id, 0)]))


def _pairs(rng, n, lo=1e-3, hi=1e3):
    return 10.0 ** rng.uniform(math.log10(lo), math.log10(hi), size=(n, 2))


def convexity_check(phi, grid=None, tol=1e-8):
    """Convexity of L1 = phi(t) t^2 and L2 = em*Phi(t) - L1 via slope increase.

    Divided-difference slopes of a convex function are nondecreasing; the
    margin is normalized by the local slope magnitude.
    """
    if grid is None:
        lo = max(1e-4, phi.sample_range[0])
        hi = min(1e4, phi.sample_range[1])
        grid = np.geomspace(lo, hi, 512)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 256:
        raise ValueError("convexity grid needs >= 256 points")
    em = phi.indices().em
    L1 = grid * np.asarray(phi.h(grid))  # t^2 phi(t) without evaluating phi at 0+
    L2 = em * np.asarray(phi.big_phi(grid)) - L1

    worst = {"margin": math.inf}
    for name, L in (("L1", L1), ("L2", L2)):
        slopes = np.diff(L) / np.diff(grid)
        jumps = np.diff(slopes)
        scale = np.maximum(np.abs(slopes[:-1]), np.abs(slopes[1:]))
        scale = np.maximum(scale, 1e-30 + 1e-14 * np.max(np.abs(slopes)))
        margins = jumps / scale
        i = int(np.argmin(margins))
        if margins[i] < worst["margin"]:
            worst = {"margin": float(margins[i]), "function": name,
                     "t": float(grid[i + 1]), "em": float(em)}
    return CheckReport("prop_lll_convexity", worst["margin"] >= -tol, tol,
                       int(grid.size), worst)


def fibering_scan(problem, num_fields=100, seed=0):
    """Per-field fibering structure: positive small-t quotient, divergence to
    -infinity (threshold -10 before 60 doublings), a single sign change of
    gamma', strict decrease of gamma'(t)/t^(em-1), and negative curvature
    at the crossing."""
    if num_fields < 10:
        raise ValueError("need num_fields >= 10")
    rng = _rng(seed, "fibering_structure")
    em = problem.em
    failures = []
    small_t = 1e-3
    for idx in range(num_fields):
        u = random_smooth_field(problem.mesh, rng)
        fm = FiberingMap(problem, u)
        if fm.gamma(small_t) / small_t ** em <= 0:
            failures.append({"field": idx, "check": "small_t_positive"})
            continue
        t, diverged = 1.0, False
        for _ in range(60):
            if fm.gamma(t) / t ** em < -10.0:
                diverged = True
                break
            t *= 2.0
        if not diverged:
            failures.append({"field": idx, "check": "divergence"})
            continue
        try:
            lo, hi = _bracket_sign_change(fm.gamma_prime)
        except BracketError:
            failures.append({"field": idx, "check": "single_crossing_bracket"})
            continue
        t_star = _bisect(fm.gamma_prime, lo, hi)
        tg = np.geomspace(t_star / 8.0, 8.0 * t_star, 64)
        gp = np.asarray([fm.gamma_prime(tv) for tv in tg])
        signs = np.sign(gp)
        flips = int(np.sum(signs[:-1] * signs[1:] < 0))
        if flips != 1 or not (signs[0] > 0 and signs[-1] < 0):
            failures.append({"field": idx, "check": "single_crossing",
                             "sign_flips": flips})
            continue
        quot = gp / tg ** (em - 1.0)
        if not np.all(np.diff(quot) < 0):
            failures.append({"field": idx, "check": "quotient_decrease"})
            continue
        if not fm.gamma_second(t_star) < 0:
            failures.append({"field": idx, "check": "negative_curvature",
                             "t_star": float(t_star)})
    worst = {"failures": failures[:5], "num_failures": len(failures),
             "divergence_threshold": -10.0, "doubling_cap": 60}
    return CheckReport("fibering_structure", len(failures) == 0, 0.0,
                       num_fields, worst)


def nehari_floor_check(problem, samples=200, seed=0, tol=0.2):
    """Empirical norm floor of the Nehari manifold, stable under refinement.

    The same random fields (P1-prolonged, so identical as functions) are
    projected on the mesh and its uniform refinement; passes when the floor
    is positive and the two floors agree within 20%.
    """
    if samples < 100:
        raise ValueError("need samples >= 100")
    rng = _rng(seed, "nehari_floor")
    fields = [random_smooth_field(problem.mesh, rng) for _ in range(samples)]
    fine_mesh = problem.mesh.refine()
    fine_problem = Problem(problem.phi, problem.f, fine_mesh,
                           eps_reg=problem.eps_reg, validate=False)

    def floor_of(prob, flds):
        floor, arg, failures = math.inf, -1, 0
        for i, u in enumerate(flds):
            try:
                proj = nehari_time(prob, u).projected
            except BracketError:
                failures += 1
                continue
            norm = gradient_luxemburg_norm(proj, prob.phi)
            if norm < floor:
                floor, arg = norm, i
        return floor, arg, failures

    floor_c, arg_c, fail_c = floor_of(problem, fields)
    floor_f, _, fail_f = floor_of(fine_problem,
                                  [prolong(u, fine_mesh) for u in fields])
    if fail_c or fail_f or not math.isfinite(floor_c):
        witness = {"projection_failures": fail_c + fail_f,
                   "note": "fibering bracket failed; manifold projection "
                           "undefined for this problem"}
        return CheckReport("nehari_floor", False, tol, samples, witness)
    rel = abs(floor_f - floor_c) / floor_c if floor_c > 0 else math.inf
    passed = floor_c > 1e-8 and rel <= tol
    witness = {"floor": float(floor_c), "floor_refined": float(floor_f),
               "relative_shift": float(rel), "argmin_field": arg_c}
    return CheckReport("nehari_floor", bool(passed), tol, samples, witness)


def poincare_check(phi, mesh, lambda1, samples=200, seed=0, tol=1e-6,
                   eigenfield=None):
    """lambda1 * int Phi(u) <= int Phi(|grad u|) * (1 + tol) on random fields.

    Fields are normalized to int Phi(u) = 1, the level at which lambda1 is
    defined for non-homogeneous Phi. The eigenfield itself (when supplied)
    joins the sample set, making the check sharp at the minimizer.
    """
    rng = _rng(seed, "poincare")
    fields = [random_smooth_field(mesh, rng) for _ in range(samples)]
    if eigenfield is not None:
        fields.insert(0, eigenfield)
    worst = {"margin": math.inf}
    for i, u in enumerate(fields):
        lam = field_luxemburg_norm(u, phi)
        if lam == 0.0:
            continue
        v = (1.0 / lam) * u
        g = np.asarray(phi.big_phi(grad_magnitudes(v)))
        dirichlet = float(np.dot(g, mesh.measures))
        margin = (dirichlet * (1.0 + tol) - lambda1) / lambda1
        if margin < worst["margin"]:
            worst = {"margin": float(margin), "field": i,
                     "dirichlet": dirichlet, "lambda1": float(lambda1)}
    return CheckReport("poincare", worst["margin"] >= 0.0, tol,
                       len(fields), worst)


def zeta_check(phi, samples=200, seed=0, tol=1e-9):
    """Scaling bounds min/max(t^ell, t^em) Phi(rho) vs Phi(rho t), and the
    Sobolev-conjugate analogue with ell*, em*."""
    rng = _rng(seed, "zeta_bounds")
    rep = phi.indices()
    pairs = _pairs(rng, samples)
    worst = {"margin": math.inf}

    def run(fn, lo_exp, hi_exp, label):
        nonlocal worst
        for rho, t in pairs:
            val_rt = fn(rho * t)
            val_r = fn(rho)
            zeta_lo = min(t ** lo_exp, t ** hi_exp) * val_r
            zeta_hi = max(t ** lo_exp, t ** hi_exp) * val_r
            m_lo = (val_rt - zeta_lo) / max(val_rt, zeta_lo)
            m_hi = (zeta_hi - val_rt) / max(val_rt, zeta_hi)
            m = min(m_lo, m_hi)
            if m < worst["margin"]:
                worst = {"margin": float(m), "bound": label,
                         "rho": float(rho), "t": float(t)}

    def phi_scalar(x):
        return float(phi.big_phi(np.asarray([x]))[0])

    run(phi_scalar, rep.ell, rep.em, "zeta01_phi")
    sob = phi.sobolev_conjugate()
    run(lambda x: float(sob(x)), rep.ell_star, rep.em_star, "zeta23_phi_star")
    return CheckReport("zeta_bounds", worst["margin"] >= -tol, tol,
                       2 * samples, worst)


def sobolev_quotient_check(phi, npts=64, tol=1e-6):
    """ell* <= t Phi_*'(t)/Phi_*(t) <= em* on a log grid (the conjugate
    analogue of the first-order index window)."""
    rep = phi.indices()
    sob = phi.sobolev_conjugate()
    y = np.geomspace(1e-2, 1e2, npts)
    q = sob.quotient(y)
    m_lo = (q - rep.ell_star) / rep.ell_star
    m_hi = (rep.em_star - q) / rep.em_star
    margins = np.minimum(m_lo, m_hi)
    i = int(np.argmin(margins))
    worst = {"margin": float(margins[i]), "t": float(y[i]),
             "quotient": float(q[i]), "ell_star": float(rep.ell_star),
             "em_star": float(rep.em_star)}
    return CheckReport("sobolev_quotient", bool(margins[i] >= -tol), tol,
                       npts, worst)


def young_check(phi, samples=200, seed=0, tol=1e-7):
    """Young inequality a b <= Phi(a) + conj(b) on random pairs, plus the
    equality case at b = a phi(a) within 1e-7 relative."""
    rng = _rng(seed, "young_inequality")
    pairs = _pairs(rng, samples)
    worst = {"margin": math.inf}
    for a, b in pairs:
        rhs = float(phi.big_phi(np.asarray([a]))[0]) + conjugate_eval(phi, b)
        margin = (rhs - a * b) / max(rhs, a * b)
        if margin < worst["margin"]:
            worst = {"margin": float(margin), "case": "inequality",
                     "a": float(a), "b": float(b)}
    sg = np.geomspace(1e-2, 1e2, 64)
    hg = np.asarray(phi.h(sg))
    for s, b in zip(sg, hg):
        lhs = float(phi.big_phi(np.asarray([s]))[0]) + conjugate_eval(phi, b)
        rel = abs(lhs - s * b) / abs(s * b)
        margin = tol - rel
        if margin < worst["margin"]:
            worst = {"margin": float(margin), "case": "equality",
                     "s": float(s), "relative_error": float(rel)}
    passed = worst["margin"] >= (-1e-9 if worst.get("case") == "inequality" else 0.0)
    return CheckReport("young_inequality", bool(passed), tol,
                       samples + 64, worst)


def level_ordering_check(results, tol=1e-6):
    """Energy-level ordering across the four solve modes on one problem."""
    needed = ("ground", "positive", "negative", "nodal")
    missing = [k for k in needed if k not in results]
    if missing:
        return CheckReport("level_ordering", False, tol, 0,
                           {"skipped": f"missing results: {missing}"})
    bad = [k for k in needed if not results[k].converged]
    if bad:
        return CheckReport("level_ordering", False, tol, 4,
                           {"skipped": f"non-converged solves: {bad}"})
    cn = results["ground"].level
    cp = results["positive"].level
    cm = results["negative"].level
    cnod = results["nodal"].level
    conds = {
        "nodal_ge_sum": cnod >= cp + cm - tol,
        "nodal_gt_max": cnod > max(cp, cm),
        "ground_le_min": cn <= min(cp, cm) + tol,
        "all_positive": min(cn, cp, cm, cnod) > 0.0,
    }
    witness = {"c_nehari": float(cn), "c_plus": float(cp), "c_minus": float(cm),
               "c_nodal": float(cnod), "conditions": conds}
    return CheckReport("level_ordering", all(conds.values()), tol, 4, witness)


def phi_conditions_check(phi):
    report = check_conditions(phi)
    return CheckReport("phi_conditions", report.passed, 0.0, 4096,
                       report.as_dict())


def f_conditions_check(f, phi, lambda1, envelope=None, margin=1e-3):
    report = check_f_conditions(f, phi, lambda1, envelope=envelope, margin=margin)
    return CheckReport("f_conditions", report.passed, margin, 512,
                       report.as_dict())


ALL_CHECKS = ("phi_conditions", "f_conditions", "prop_lll_convexity",
              "zeta_bounds", "sobolev_quotient", "young_inequality",
              "fibering_structure", "nehari_floor", "poincare",
              "level_ordering")


def run_suite(problem, seed=0, checks=None, solve_opts=None, envelope=None,
              num_fields=100, floor_samples=200):
    """Run the selected checks (all by default) on one problem instance.

    Solver-dependent checks derive their options from ``solve_opts``;
    lambda1 is estimated once and shared. Reports come back in a fixed
    order, each deterministic for the given seed.
    """
    from .solver import (SolveOptions, estimate_lambda1, minimize_on_nehari,
                         solve_nodal, solve_signed)

    selected = list(ALL_CHECKS) if checks is None else list(checks)
    unknown = set(selected) - set(ALL_CHECKS)
    if unknown:
        raise ValueError(f"unknown check ids: {sorted(unknown)}")
    reports = []

    lambda1 = None
    eigenfield = None
    if {"f_conditions", "poincare"} & set(selected):
        try:
            eig = estimate_lambda1(problem.phi, problem.mesh,
                                   SolveOptions(mode="eigen", tol=1e-8, seed=seed))
            lambda1, eigenfield = eig.lambda1, eig.field
        except Exception:
            pass  # dependent checks will report the failure

    def guarded(check_id, thunk):
        """A check that cannot even run is a failed check, not a crash."""
        try:
            return thunk()
        except Exception as exc:
            return CheckReport(check_id, False, 0.0, 0,
                               {"error": f"{type(exc).__name__}: {exc}"})

    for check_id in ALL_CHECKS:
        if check_id not in selected:
            continue
        if check_id == "phi_conditions":
            reports.append(guarded(check_id,
                                   lambda: phi_conditions_check(problem.phi)))
        elif check_id == "f_conditions":
            reports.append(guarded(check_id, lambda: f_conditions_check(
                problem.f, problem.phi, lambda1, envelope=envelope)))
        elif check_id == "prop_lll_convexity":
            reports.append(guarded(check_id,
                                   lambda: convexity_check(problem.phi)))
        elif check_id == "zeta_bounds":
            reports.append(guarded(check_id,
                                   lambda: zeta_check(problem.phi, seed=seed)))
        elif check_id == "sobolev_quotient":
            reports.append(guarded(check_id,
                                   lambda: sobolev_quotient_check(problem.phi)))
        elif check_id == "young_inequality":
            reports.append(guarded(check_id,
                                   lambda: young_check(problem.phi, seed=seed)))
        elif check_id == "fibering_structure":
            reports.append(guarded(check_id, lambda: fibering_scan(
                problem, num_fields=num_fields, seed=seed)))
        elif check_id == "nehari_floor":
            reports.append(guarded(check_id, lambda: nehari_floor_check(
                problem, samples=floor_samples, seed=seed)))
        elif check_id == "poincare":
            reports.append(guarded(check_id, lambda: poincare_check(
                problem.phi, problem.mesh, lambda1, seed=seed,
                eigenfield=eigenfield)))
        elif check_id == "level_ordering":
            base = solve_opts or SolveOptions(tol=1e-7, max_iters=400, seed=seed)

            def opts(mode):
                return SolveOptions(**{**base.__dict__, "mode": mode})

            runners = {
                "ground": lambda: minimize_on_nehari(problem, opts("ground")),
                "positive": lambda: solve_signed(problem, "plus", opts("positive")),
                "negative": lambda: solve_signed(problem, "minus", opts("negative")),
                "nodal": lambda: solve_nodal(problem, opts("nodal")),
            }
            results, errors = {}, {}
            for mode, run in runners.items():
                try:
                    results[mode] = run()
                except Exception as exc:  # broken specs abort mid-solve
                    errors[mode] = f"{type(exc).__name__}: {exc}"
            if errors:
                reports.append(CheckReport("level_ordering", False, 1e-6,
                                           len(runners),
                                           {"skipped": "solves failed",
                                            "errors": errors}))
            else:
                reports.append(level_ordering_check(results))
    return reports
