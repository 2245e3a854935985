"""Sparse recovery with the l1-2 penalty ``||x||_1 - ||x||_2``."""

from .core import (
    ProblemInstance,
    SensingMatrix,
    SolverTrace,
    SparseSignal,
    in_level_set,
    l12_penalty,
    objective_l12,
    relative_error,
)
from .errors import (
    CapacityError,
    DivergenceError,
    DomainError,
    InstanceFormatError,
    ShapeError,
    Sparse12Error,
    TheoremNotApplicable,
)
from .problems import InstanceSpec, load_instance, make_instance, save_instance
from .regularity import (
    consistency_bounds,
    itac_schedule,
    itat_schedule,
    mic_mu,
    rec_certify,
    rec_estimate,
    ric_delta,
    roc_theta,
    sec_extremes,
)
from .solvers import SOLVERS, SolverConfig, ista_solve, ita_solve, itac_solve, itat_solve, solve
from .thresholding import (
    enlarge,
    l12_threshold,
    partition_blocks,
    prox_l12,
    soft_threshold,
    truncate_top_s,
)

__version__ = "0.1.0"
