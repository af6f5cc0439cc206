"""Nehari-manifold minimization for Phi-Laplacian Dirichlet problems.

Computes ground-state, sign-definite and sign-changing solutions of
-div(phi(|grad u|) grad u) = f(x, u) with zero boundary values by
constrained energy descent, and numerically audits the structural
conditions and computable lemmas behind the method.
"""

from ._kernels import BACKEND as kernel_backend
from .domain import (Field, Mesh, build_mesh, interval_mesh, rectangle_mesh,
                     negative_part, positive_part)
from .energy import EnergyBreakdown, Problem, energy, pairing, residual
from .manifold import (NehariProjection, NodalProjection, in_nehari,
                       in_nodal_nehari, nehari_project, nehari_time, nodal_times)
from .nfunction import (IndexReport, LogPowerPhi, NFunctionSpec, PowerPhi,
                        SumPowersPhi, TabulatedPhi, check_conditions,
                        compute_indices)
from .nonlinearity import (GrowthEnvelope, LogExampleF, NonlinearitySpec,
                           PowerF, TabulatedF, check_f_conditions, truncate)
from .solver import (EigenResult, SolveOptions, SolveResult, estimate_lambda1,
                     minimize_on_nehari, solve, solve_nodal, solve_signed)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "__version__",
    "Field", "Mesh", "build_mesh", "interval_mesh", "rectangle_mesh",
    "positive_part", "negative_part",
    "EnergyBreakdown", "Problem", "energy", "pairing", "residual",
    "NehariProjection", "NodalProjection", "nehari_time", "nehari_project",
    "nodal_times", "in_nehari", "in_nodal_nehari",
    "IndexReport", "NFunctionSpec", "PowerPhi", "SumPowersPhi", "LogPowerPhi",
    "TabulatedPhi", "compute_indices", "check_conditions",
    "NonlinearitySpec", "PowerF", "LogExampleF", "TabulatedF", "GrowthEnvelope",
    "truncate", "check_f_conditions",
    "SolveOptions", "SolveResult", "EigenResult", "solve", "minimize_on_nehari",
    "solve_signed", "solve_nodal", "estimate_lambda1",
]
