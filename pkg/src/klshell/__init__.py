"""Isogeometric Nitsche solver for the linear Kirchhoff-Love shell.

The package provides NURBS patch evaluation and refinement, surface
differential geometry, Kirchhoff-Love shell mechanics with the variationally
consistent ersatz boundary force, eigenvalue-calibrated Nitsche penalties,
dense symmetric solvers with extended-precision iterative refinement, and a
manufactured-solution obstacle course with convergence-study orchestration.
"""

__version__ = "0.1.0"

from .assembly import (AssembledSystem, MeshTopology, PenaltyConfig,  # noqa: E402
                       assemble, build_mesh, dump_system)
from .geometry import build_edge_frame, build_frame  # noqa: E402
from .linsolve import solve_spd, sym_gen_eig  # noqa: E402
from .mechanics import Material, boundary_actions, elasticity  # noqa: E402
from .problems import (eval_exact, export_load_data, generate_load_data,  # noqa: E402
                       get_problem, import_load_data)
from .splines import NurbsPatch, eval_basis, eval_surface, refine  # noqa: E402
from .trace import compute_penalties, compute_trace_constants  # noqa: E402
from .verify import (error_norms, fit_rate, greens_identity_residual,  # noqa: E402
                     recover_multiplier, run_study, solve_problem)

__all__ = [
    "AssembledSystem", "MeshTopology", "PenaltyConfig", "Material",
    "NurbsPatch", "assemble", "boundary_actions", "build_edge_frame",
    "build_frame", "build_mesh", "compute_penalties",
    "compute_trace_constants", "dump_system", "elasticity", "error_norms",
    "eval_basis", "eval_exact", "eval_surface", "export_load_data",
    "fit_rate", "generate_load_data", "get_problem",
    "greens_identity_residual", "import_load_data", "recover_multiplier",
    "refine", "run_study", "solve_problem", "solve_spd", "sym_gen_eig",
]
