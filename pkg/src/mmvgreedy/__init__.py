"""Stochastic greedy recovery of jointly row-sparse signal matrices.

The package solves min F(X) subject to a row-sparsity budget, where
F is the mean squared misfit of multiple measurement vectors against a
shared sensing matrix.  It provides joint and per-column variants of
stochastic iterative hard thresholding and stochastic gradient matching
pursuit (with mini-batching), the contraction-coefficient formulas that
govern their convergence, and a reproducible benchmark harness.
"""

from .analysis import (
    ConvexityConstants,
    RegimeError,
    RestrictedPropertyReport,
    RipEstimate,
    contraction_cstogradmp,
    contraction_cstoiht,
    contraction_mstogradmp,
    contraction_mstoiht,
    relative_error,
    rip_constant,
    tolerance_mstogradmp,
    verify_rsc_rss,
)
from .bench import (
    ExperimentSpec,
    TraceTable,
    add_noise,
    gaussian_sensing_matrix,
    generate_instance,
    row_sparse_signal,
    run_experiment,
    run_sweep,
)
from .linalg import (
    RngStream,
    draw_index,
    frobenius_norm,
    least_squares_solve,
    row_norms,
)
from .matio import load_csv, load_jsm, save_csv, save_jsm
from .objective import BatchPlan, MmvObjective, batch_partition
from .solvers import (
    SOLVERS,
    DivergenceError,
    IterationRecord,
    SolveTrace,
    SolverConfig,
    cstogradmp,
    cstoiht,
    mstogradmp,
    mstoiht,
)
from .sparsity import (
    RowSupport,
    project_rows,
    row_support,
    support_union,
    top_k_indices,
    top_k_rows,
)

__version__ = "0.1.0"
