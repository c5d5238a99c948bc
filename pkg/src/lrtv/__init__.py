"""Image recovery with a non-convex low-rank surrogate plus anisotropic total variation."""

from .experiment import BENCHMARK_CONFIG, ExperimentPlan, parse_plan, read_plan, run_experiment
from .metrics import numerical_rank, psnr
from .problems import add_noise_to_target_psnr, degrade, erase_column_mask, erase_row_mask, generate_phantom, project, sample_mask
from .prox import compute_svd, singular_value_shrink, weighted_singular_value_shrink
from .solver import (
    RecoverySolution,
    SolverConfig,
    irnn_tv_step,
    objective,
    smooth_part_subgradient,
    solve_baseline,
    solve_constrained,
    solve_irnn_tv,
)
from .surrogates import Kind, SurrogateSpec, surrogate_supergradient, surrogate_value, weights_from_singular_values
from .tv import difference_map, tv_norm, tv_subgradient

__version__ = "0.1.0"
