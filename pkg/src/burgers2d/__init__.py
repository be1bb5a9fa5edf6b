"""Compact ADI and Du Fort Frankel solvers for the 2-D coupled Burgers' equations."""

from .blocklinalg import BlockTridiagSystem, dense4_solve, solve_block_tridiag
from .compact_adi import (CompactADISolver, OneStepParams, fd4_line_derivative,
                          full_step, x_sweep, y_sweep)
from .dufort_frankel import DuFortFrankelSolver, dff_bootstrap, dff_coefficients, dff_step
from .errors import (ConfigError, DegeneratePhi, NewtonDiverged, NonFinite,
                     SingularBlock)
from .grid import (AlphaConvention, DirichletBoundary, FieldPair, Grid2D, RunParams,
                   apply_dirichlet, build_grid, local_coefficients)
from .problems import (case1_alternative_initial, case1_problem, case2_problem,
                       error_norms, exact_steady, observed_order)
from .stability import amplification, max_chi_over_phases, stability_map

__version__ = "0.1.0"
