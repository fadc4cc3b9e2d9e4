"""Semi-implicit, divergence-free finite volume solver for ideal MHD."""

from .mesh import (BoundaryCondition, ConfigurationError, Grid, ShapeError,
                   build_grid, extrapolate_potential_ghosts, fill_ghosts)
from .physics import AdmissibilityError, GasModel, MhdState, PrimitiveState
from .linalg import LinearOperator, SolveReport, gmres_solve
from .stepper import (ExplicitStepper, ImexTableau, SemiImplicitStepper,
                      StepFailure, euler_tableau, lsdirk2_tableau)
from .cases import CaseSpec, build_state, case_names, get_case
from .cli import RunConfig, parse_config, render_config, run, run_simulation

__all__ = [
    "BoundaryCondition", "ConfigurationError", "Grid", "ShapeError",
    "build_grid", "extrapolate_potential_ghosts", "fill_ghosts",
    "AdmissibilityError", "GasModel", "MhdState", "PrimitiveState",
    "LinearOperator", "SolveReport", "gmres_solve",
    "ExplicitStepper", "ImexTableau", "SemiImplicitStepper", "StepFailure",
    "euler_tableau", "lsdirk2_tableau",
    "CaseSpec", "build_state", "case_names", "get_case",
    "RunConfig", "parse_config", "render_config", "run", "run_simulation",
]

__version__ = "0.1.0"
