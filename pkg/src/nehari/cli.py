"""Configuration-driven entry point.

Commands (each takes a JSON config path):

  nehari solve <config.json>   -> solution.csv, summary.json
  nehari check <config.json>   -> checks.json
  nehari eigen <config.json>   -> eigen.json, eigenfield.csv
  nehari sweep <config.json>   -> sweep.csv

Exit codes: 0 success, 1 config error, 2 non-convergence, 3 check failure.
All diagnostics go to standard error; outputs are byte-identical for
identical (config, seed). NEHARI_THREADS caps sweep workers (0 = auto).
"""

import argparse
import concurrent.futures
import copy
import json
import math
import os
import sys

from . import domain, nfunction, nonlinearity
from .energy import Problem, energy
from .errors import (BracketError, ConfigError, DomainError, MeshError,
                     NodalCollapseError, ProblemError, SpecError)
from .solver import SolveOptions, estimate_lambda1, solve
from .verify import ALL_CHECKS, run_suite, _json_safe

_TOP_KEYS = {"phi", "f", "domain", "solve", "output_dir", "seed", "checks", "sweep"}
_SOLVE_KEYS = {"mode", "tol", "max_iters", "initial", "seed", "armijo_c1",
               "armijo_backtrack", "max_backtracks", "history_stride", "sign_tol"}


def _fmt(x):
    """17-significant-digit decimal float (CSV contract)."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.17g}"


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(config) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    return config


def _parse_specs(config, need_f=True):
    if "phi" not in config:
        raise ConfigError("config needs a 'phi' section")
    if "domain" not in config:
        raise ConfigError("config needs a 'domain' section")
    try:
        phi = nfunction.spec_from_json(config["phi"])
        mesh = domain.build_mesh(config["domain"])
        f = envelope = None
        if "f" in config:
            f_data = dict(config["f"])
            env_data = f_data.pop("envelope", None)
            f = nonlinearity.spec_from_json(f_data)
            if env_data is not None:
                envelope = nonlinearity.envelope_from_json(
                    env_data, nfunction.spec_from_json)
    except (SpecError, MeshError) as exc:
        raise ConfigError(str(exc)) from exc
    if need_f and f is None:
        raise ConfigError("config needs an 'f' section")
    return phi, f, mesh, envelope


def _solve_options(config, mode_default="ground"):
    data = dict(config.get("solve", {}))
    extra = set(data) - _SOLVE_KEYS
    if extra:
        raise ConfigError(f"unknown keys in solve options: {sorted(extra)}")
    data.setdefault("mode", mode_default)
    data.setdefault("seed", int(config.get("seed", 0)))
    if data.get("initial") not in (None, "bump", "random"):
        raise ConfigError("solve.initial must be 'bump' or 'random'")
    try:
        return SolveOptions(**data)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"bad solve options: {exc}") from exc


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_field_csv(path, field):
    mesh = field.mesh
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if mesh.dim == 1:
            fh.write("x,u\n")
            for x, u in zip(mesh.vertices[:, 0], field.values):
                fh.write(f"{_fmt(x)},{_fmt(u)}\n")
        else:
            fh.write("x,y,u\n")
            for (x, y), u in zip(mesh.vertices, field.values):
                fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(u)}\n")


def run_solve(config, output_dir):
    phi, f, mesh, _ = _parse_specs(config)
    opts = _solve_options(config)
    if opts.mode == "eigen":
        problem = None
    else:
        problem = Problem(phi, f, mesh)

    os.makedirs(output_dir, exist_ok=True)
    eig = estimate_lambda1(phi, mesh, SolveOptions(mode="eigen", tol=1e-8,
                                                   seed=opts.seed))
    if opts.mode == "eigen":
        field = eig.field
        breakdown = {"dirichlet": eig.lambda1, "reaction": 0.0, "total": eig.lambda1}
        summary = {"mode": "eigen", "level": eig.lambda1, "energy": breakdown,
                   "residual": None, "iterations": eig.iterations,
                   "converged": eig.converged, "lambda1": eig.lambda1,
                   "nodal_domains": domain.nodal_domain_count(field)}
        converged = eig.converged
    else:
        try:
            result = solve(problem, opts)
        except (BracketError, NodalCollapseError) as exc:
            print(f"solve failed: {exc}", file=sys.stderr)
            return 2
        field = result.field
        summary = {
            "mode": opts.mode,
            "level": result.level,
            "energy": {"dirichlet": result.energy.dirichlet_term,
                       "reaction": result.energy.reaction_term,
                       "total": result.energy.total},
            "residual": result.residual_norm,
            "iterations": result.iterations,
            "converged": result.converged,
            "lambda1": eig.lambda1,
            "nodal_domains": domain.nodal_domain_count(field),
        }
        converged = result.converged
        if not converged:
            print(f"solve did not converge: {result.message}", file=sys.stderr)

    _write_field_csv(os.path.join(output_dir, "solution.csv"), field)
    _write_json(os.path.join(output_dir, "summary.json"), summary)
    return 0 if converged else 2


def run_check(config, output_dir):
    phi, f, mesh, envelope = _parse_specs(config)
    checks = config.get("checks")
    if checks is not None:
        if (not isinstance(checks, list)
                or any(c not in ALL_CHECKS for c in checks)):
            raise ConfigError(f"'checks' must be a subset of {list(ALL_CHECKS)}")
    seed = int(config.get("seed", 0))
    # deliberately broken specs must be reportable, so skip construction gating
    problem = Problem(phi, f, mesh, validate=False)
    reports = run_suite(problem, seed=seed, checks=checks, envelope=envelope)

    os.makedirs(output_dir, exist_ok=True)
    _write_json(os.path.join(output_dir, "checks.json"),
                [r.as_dict() for r in reports])
    failed = [r.check_id for r in reports if not r.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


def run_eigen(config, output_dir):
    phi, _, mesh, _ = _parse_specs(config, need_f=False)
    seed = int(config.get("seed", 0))
    eig = estimate_lambda1(phi, mesh, SolveOptions(mode="eigen", tol=1e-8,
                                                   seed=seed))
    os.makedirs(output_dir, exist_ok=True)
    _write_json(os.path.join(output_dir, "eigen.json"),
                {"lambda1": eig.lambda1, "converged": eig.converged})
    _write_field_csv(os.path.join(output_dir, "eigenfield.csv"), eig.field)
    if not eig.converged:
        print("eigen descent stagnated before tolerance", file=sys.stderr)
        return 2
    return 0


def _set_dotted(config, dotted, value):
    keys = dotted.split(".")
    node = config
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"sweep key {dotted!r} does not resolve")
        node = node[k]
    node[keys[-1]] = value


def _sweep_row(config, key, value):
    row = {"parameter": value, "c_nehari": math.nan, "c_plus": math.nan,
           "c_minus": math.nan, "c_nodal": math.nan, "lambda1": math.nan,
           "res_ground": math.nan, "res_plus": math.nan, "res_minus": math.nan,
           "res_nodal": math.nan}
    cfg = copy.deepcopy(config)
    try:
        _set_dotted(cfg, key, value)
        phi, f, mesh, _ = _parse_specs(cfg)
        problem = Problem(phi, f, mesh)
        base = _solve_options(cfg)
    except (ConfigError, ProblemError, SpecError, MeshError) as exc:
        print(f"sweep value {value!r}: {exc}", file=sys.stderr)
        return row
    eig = estimate_lambda1(phi, mesh, SolveOptions(mode="eigen", tol=1e-8,
                                                   seed=base.seed))
    row["lambda1"] = eig.lambda1
    for mode, lkey, rkey in (("ground", "c_nehari", "res_ground"),
                             ("positive", "c_plus", "res_plus"),
                             ("negative", "c_minus", "res_minus"),
                             ("nodal", "c_nodal", "res_nodal")):
        try:
            opts = SolveOptions(**{**base.__dict__, "mode": mode})
            result = solve(problem, opts)
        except (BracketError, NodalCollapseError, DomainError) as exc:
            print(f"sweep value {value!r}, mode {mode}: {exc}", file=sys.stderr)
            continue
        if result.converged:
            row[lkey] = result.level
            row[rkey] = result.residual_norm
        else:
            print(f"sweep value {value!r}, mode {mode}: not converged",
                  file=sys.stderr)
    return row


def run_sweep(config, output_dir):
    sweep = config.get("sweep")
    if not isinstance(sweep, dict) or set(sweep) != {"key", "values"}:
        raise ConfigError("sweep config needs {'key': ..., 'values': [...]}")
    values = sweep["values"]
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep needs a nonempty value list")
    key = sweep["key"]

    workers_env = os.environ.get("NEHARI_THREADS", "0").strip() or "0"
    try:
        workers = int(workers_env)
    except ValueError as exc:
        raise ConfigError(f"NEHARI_THREADS must be an integer: {workers_env!r}") from exc
    if workers <= 0:
        workers = min(len(values), os.cpu_count() or 1)

    if workers == 1:
        rows = [_sweep_row(config, key, v) for v in values]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_row(config, key, v), values))

    os.makedirs(output_dir, exist_ok=True)
    columns = ["parameter", "c_nehari", "c_plus", "c_minus", "c_nodal",
               "lambda1", "res_ground", "res_plus", "res_minus", "res_nodal"]
    with open(os.path.join(output_dir, "sweep.csv"), "w", encoding="utf-8",
              newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")

    levels = ("c_nehari", "c_plus", "c_minus", "c_nodal")
    succeeded = sum(all(math.isfinite(row[k]) for k in levels) for row in rows)
    if succeeded == 0:
        print("no sweep row fully succeeded", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nehari",
        description="Nehari-manifold solver and lemma-audit suite for "
                    "Phi-Laplacian Dirichlet problems")
    parser.add_argument("command", choices=["solve", "check", "eigen", "sweep"])
    parser.add_argument("config", help="path to the JSON run configuration")
    parser.add_argument("--output-dir", default=None,
                        help="override the config's output_dir")
    args = parser.parse_args(argv)

    runners = {"solve": run_solve, "check": run_check,
               "eigen": run_eigen, "sweep": run_sweep}
    try:
        config = load_config(args.config)
        output_dir = args.output_dir or config.get("output_dir", ".")
        return runners[args.command](config, output_dir)
    except (ConfigError, ProblemError, SpecError, MeshError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
