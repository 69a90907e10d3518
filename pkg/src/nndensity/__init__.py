"""Nearest-neighbor density of Euclidean TSP tours."""
from .core import (
    Instance,
    InvalidInputError,
    InvalidTourError,
    Metric,
    Point,
    Tour,
    aggregate_gaps,
    distance,
    distance_matrix,
    optimality_gap,
    tour_length,
)
from .density import (
    analytic_cdf_r1,
    analytic_E_rk,
    analytic_E_rk2,
    analytic_pdf_r1,
    defect_rate,
    nn_distance_samples,
    nn_sets,
    rho,
    rho_batch,
    rho_lower_bound,
)
from .generators import (
    ConvolutionConfig,
    ParallelConfig,
    RneConfig,
    RueConfig,
    ScaleFreeConfig,
    gen_batch,
    generate,
)
from .solvers import SolveConfig, comb_tour, exact_tour, local_search_tour, nn_tour, solve, solve_batch

__version__ = "0.1.0"
