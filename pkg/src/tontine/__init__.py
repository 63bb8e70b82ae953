"""Equitable multi-cohort retirement income tontines.

A tontine disburses a predetermined cash stream to a closed pool, split
among survivors in proportion to their shares. This package prices the
shares so that cohorts of different ages and stakes can share one pool
without any of them subsidizing the others: it tests when such prices
exist, computes them, quantifies the welfare effects, and simulates the
competing pooling schemes the design is usually compared against.
"""

from .equity import (
    ConvergenceError,
    EquityReport,
    FeasibilityReport,
    InfeasiblePoolError,
    SubsetCondition,
    Valuation,
    check_existence,
    equity_report,
    equity_report_to_csv,
    inequity,
    leftover_value,
    present_values,
    solve_equitable,
    solve_natural_equitable,
)
from .mortality import (
    DEFAULT_DISPERSION,
    DEFAULT_MODE_AGE,
    DEFAULT_RATE,
    MAX_AGE,
    EconomicParams,
    GompertzMortality,
    annuity_factor,
    discrete_annuity_factor,
    life_grid,
)
from .numerics import QuadratureGrid, integrate, integrate_values, solve_scalar
from .payout import (
    PayoutFunction,
    annuity_rates,
    crra_optimal_payout,
    crra_share_factor,
    flat_payout,
    natural_for_age,
    natural_payout,
    payout_to_csv,
    proportional_payout,
)
from .pool import (
    Cohort,
    JointBinomialEngine,
    ParticipationRates,
    PoolSpec,
    all_dead_probability,
    conditional_reciprocal_expectation,
    parse_pool_csv,
    pool_grid,
    pool_to_csv,
    read_pool_csv,
    wealth_fraction,
)
from .sim import (
    GsaPath,
    PafPath,
    TontinePath,
    draw_lifetimes,
    log_optimal_paf_wealth,
    path_to_csv,
    simulate_gsa,
    simulate_log_optimal_paf,
    simulate_tontine,
)
from .welfare import (
    LoadingReport,
    annuity_utility,
    certainty_equivalent,
    cohort_utility,
    crra_utility,
    loading_report,
    utility_loading,
)

__version__ = "0.1.0"
