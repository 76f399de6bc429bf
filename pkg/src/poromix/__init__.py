"""Mixed finite elements for nonlinear Biot poroelasticity with weak stress symmetry."""

from .mesh import Mesh, build_structured_mesh, mesh_size, read_mesh, refine_uniform, write_mesh
from .elements import SpaceSet, make_space_set
from .physics import MaterialParams, PermeabilityLaw, ProblemData, fluid_content, hooke
from .assembly import Assembler, BlockLayout, BlockSystem, export_matrix_market
from .fields import FieldEvaluator
from .solver import (
    ConvergenceError,
    SolveReport,
    SolverConfig,
    newton_solve,
    picard_solve,
    previous_content,
    solve_linear,
    time_step,
)
from .verification import (
    ConvergenceStudy,
    ErrorReport,
    ManufacturedCase,
    compute_errors,
    convergence_study,
    eoc,
    infsup_diagnostic,
    momentum_residual,
    normal_jump_residual,
    weak_symmetry_residual,
    write_convergence_csv,
)
from .scenarios import (
    MandelResult,
    MandelSetup,
    PointProbe,
    mandel_parameters_default,
    mandel_problem_data,
    run_mandel,
    write_midline_csv,
    write_transients_csv,
)

__all__ = [
    "Mesh",
    "build_structured_mesh",
    "refine_uniform",
    "mesh_size",
    "read_mesh",
    "write_mesh",
    "SpaceSet",
    "make_space_set",
    "MaterialParams",
    "PermeabilityLaw",
    "ProblemData",
    "fluid_content",
    "hooke",
    "Assembler",
    "BlockLayout",
    "BlockSystem",
    "export_matrix_market",
    "FieldEvaluator",
    "SolverConfig",
    "SolveReport",
    "ConvergenceError",
    "solve_linear",
    "picard_solve",
    "newton_solve",
    "previous_content",
    "time_step",
    "ManufacturedCase",
    "ErrorReport",
    "ConvergenceStudy",
    "compute_errors",
    "convergence_study",
    "eoc",
    "write_convergence_csv",
    "weak_symmetry_residual",
    "momentum_residual",
    "normal_jump_residual",
    "infsup_diagnostic",
    "MandelSetup",
    "MandelResult",
    "PointProbe",
    "mandel_parameters_default",
    "mandel_problem_data",
    "run_mandel",
    "write_transients_csv",
    "write_midline_csv",
]
