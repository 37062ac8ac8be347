"""Two-stage cold-start user selection.

Pick m users for a new item, observe their ratings, update a Gaussian
belief, pick n more. The heavy lifting lives in the compiled ``_core``
module; this package just re-exports it.
"""

from ._core import (
    BudgetExceedsPool,
    CombinatorialBlowup,
    CuInstance,
    DimensionMismatch,
    DuplicatePair,
    Error,
    GaussianBelief,
    InsufficientItems,
    MfInstance,
    RatingsParseError,
    RatingsTable,
    ResultRow,
    __version__,
    analytic_three_user,
    bayes_update,
    best_rows,
    condition,
    default_lambda_grid,
    exact_policy,
    induced_rating_belief,
    load_ratings,
    policy_names,
    random_instance,
    run_ratings_log,
    run_synthetic,
    select_first_stage,
    three_user_thresholds,
    to_csv,
    toy_instance,
    two_stage_value,
)

__all__ = [
    "BudgetExceedsPool",
    "CombinatorialBlowup",
    "CuInstance",
    "DimensionMismatch",
    "DuplicatePair",
    "Error",
    "GaussianBelief",
    "InsufficientItems",
    "MfInstance",
    "RatingsParseError",
    "RatingsTable",
    "ResultRow",
    "__version__",
    "analytic_three_user",
    "bayes_update",
    "best_rows",
    "condition",
    "default_lambda_grid",
    "exact_policy",
    "induced_rating_belief",
    "load_ratings",
    "policy_names",
    "random_instance",
    "run_ratings_log",
    "run_synthetic",
    "select_first_stage",
    "three_user_thresholds",
    "to_csv",
    "toy_instance",
    "two_stage_value",
]
