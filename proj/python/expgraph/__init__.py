"""Online topology learning for expanding graphs.

The compiled core exposes the masked expanding covariance tracker, the
penalized Gaussian graphical objective and its solvers, the per-timestep
online learner, ground-truth synthesis, error metrics, the experiment
runner, and the contraction/tracking-bound verification checks.
"""

from ._core import (  # noqa: F401
    ArrivalEvent,
    ArrivalSchedule,
    ContractionCheckOptions,
    ContractionCheckResult,
    CovarianceTracker,
    DataError,
    DimensionError,
    GmrfParams,
    GroundTruthSequence,
    NumericalError,
    OnlineLearner,
    OnlineOptions,
    ParameterError,
    Scenario,
    SolveResult,
    TrackingBoundOptions,
    TrackingBoundResult,
    TrackingBoundSeedResult,
    attach_nodes,
    avg_cum_regret,
    build_scenario,
    combine,
    contraction_check,
    contraction_rho,
    dynamic_update,
    expanding_update,
    frob_dist,
    generate_er,
    nerr,
    objective,
    offline_solve,
    path_length,
    path_length_arrival_bound,
    percentile,
    precision_from_adjacency,
    project_feasible,
    regret_bound,
    run_experiment_json,
    sample_gmrf,
    smooth_grad,
    soft_threshold,
    stationary_update,
    symmetrize,
    tracked_step,
    tracking_bound_check,
    zero_pad,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
