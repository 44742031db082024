"""Semi-definite concentration bounds for randomized sensor selection."""

from .concentration import (
    AwParams,
    GenParams,
    SdBound,
    aw_bounds,
    gen_bounds,
    nontriviality_threshold,
    r_factor,
    sample_complexity_aw,
    sample_complexity_gen,
    solve_epsilon_aw,
    solve_epsilon_gen,
)
from .ensemble import (
    Sensor,
    SensorPool,
    draw_selection,
    expected_info,
    info_matrix,
    random_pool,
    rho_min,
    selection_sum,
)
from .harness import (
    ExperimentConfig,
    build_fig1_instance,
    heuristic_distribution,
    run_coverage,
    sweep_gamma,
    sweep_zeta,
)
from .kalman import LtiSystem, f_map, ss_bounds_aw, ss_bounds_gen, steady_state

__version__ = "0.1.0"
