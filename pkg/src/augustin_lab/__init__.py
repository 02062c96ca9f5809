"""Fixed-point computation of weighted divergence minimizers and applications.

Core pieces: a linearly convergent fixed-point sweep for the minimizer of a
weighted sum of order-alpha divergences over density matrices (with its
commuting vector specialization), an entropic mirror-descent outer loop that
turns it into a capacity solver, and an asynchronous multiplicative price
dynamic for CES Fisher markets with the same contraction structure.
"""

from .augustin import (
    apply_T_F,
    apply_T_f,
    augustin_classical_baseline_step,
    cheng_dual_step,
    classical_augustin_step,
    contraction_factor,
    dual_objective_H,
    emd_polyak_run,
    emd_polyak_step,
    initial_classical_state,
    initial_state,
    make_dual_state,
    petz_augustin_step,
    solve_classical_augustin,
    solve_petz_augustin,
    DualState,
    IterateState,
    SolveReport,
)
from .capacity import (
    CapacityProblem,
    CapacityState,
    approx_oracle,
    emd_capacity_step,
    mirror_update,
    solve_capacity,
)
from .divergences import (
    AugustinProblem,
    ClassicalAugustinProblem,
    objective_F,
    objective_f,
    petz_renyi_divergence,
)
from .fisher import (
    FisherMarket,
    PriceState,
    UpdateSchedule,
    buyer_demand,
    cheung_baseline_step,
    epoch_boundaries,
    equilibrium_prices,
    metric_comparability_check,
    potential,
    run_schedule,
    tatonnement_step,
    total_demand,
)
from .linalg import (
    hermitian_eig,
    hermitize,
    matrix_power,
    random_density_ensemble,
    random_density_matrix,
    thompson_metric_psd,
    thompson_metric_vec,
    trace_product,
)

__version__ = "0.1.0"
