"""Time-fractional diffusion solvers and spatial source reconstruction from interior data."""

from fracinv.errors import (
    AccuracyError,
    AssemblyError,
    ConditioningError,
    DivergenceError,
    DomainError,
    EigenSolverError,
    FracInvError,
    LinearSolveError,
)
from fracinv.grids import Grid2D, TimeGrid, l2_norm, spacetime_norm
from fracinv.inverse import (
    ForwardModel,
    ReconstructionConfig,
    ReconstructionReport,
    add_noise,
    gradient,
    invisible_source,
    objective,
    reconstruct,
    relative_error,
)
from fracinv.mlf import MlfParams, duhamel_kernel, mittag_leffler
from fracinv.operator import (
    BoundaryCondition,
    EigenBasis,
    EllipticOperatorSpec,
    assemble,
    eigendecompose,
    shifted_solve,
)
from fracinv.spectral import (
    LaplaceProbe,
    LaplaceTransform,
    ip1prime_companion,
    laplace_residual_check,
    solve_forward_spectral,
    verify_c5_solution,
)
from fracinv.timestepping import (
    CaputoWeights,
    FractionalStepper,
    SeparatedSource,
    caputo_apply,
    caputo_weights,
    solve_adjoint,
    solve_forward,
)

__version__ = "0.1.0"
