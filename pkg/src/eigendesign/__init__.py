"""Optimal design of the positive principal eigenvalue for bang-bang
weighted Neumann problems: radial limit solver, FEM optimizer, and
asymptotic verification."""

__version__ = "0.1.0"

from .asymptotics import (
    ExpansionPair,
    SweepRecord,
    SweepSettings,
    compose_expansions,
    decay_report,
    predicted_bound,
    sweep,
)
from .eigensolver import Design, EigenResult, assemble, principal_lambda, rho
from .errors import EigendesignError
from .meshing import (
    BoundaryGeometry,
    Disk,
    Ellipse,
    Interval,
    Mesh,
    Rectangle,
    export_mesh,
    generate,
    import_mesh,
)
from .optimizer import OptState, bathtub_update, optimize, seed_designs
from .radial import (
    LimitConfig,
    LimitConstants,
    RadialSolution,
    check_identities,
    eval_profile,
    limit_constants,
    matching_mismatch,
    solve_limit,
)

__all__ = [
    "__version__",
    "BoundaryGeometry", "Design", "Disk", "EigenResult", "EigendesignError",
    "Ellipse", "ExpansionPair", "Interval", "LimitConfig", "LimitConstants",
    "Mesh", "OptState", "RadialSolution", "Rectangle", "SweepRecord",
    "SweepSettings", "assemble", "bathtub_update", "check_identities",
    "compose_expansions", "decay_report", "eval_profile", "export_mesh",
    "generate", "import_mesh", "limit_constants", "matching_mismatch",
    "optimize", "predicted_bound", "principal_lambda", "rho", "seed_designs",
    "solve_limit", "sweep",
]
