"""Constrained sampling with entropy-weighted resampling."""

from ._core import (
    ConfigError,
    InputError,
    NumericalError,
    Problem,
    RunError,
    UnsupportedError,
    c0_constant,
    energy_distance,
    entropy_weights,
    initialize,
    kl_entropy,
    kl_simplex,
    knn_density,
    knn_radii,
    mean_max_slack,
    method_names,
    metric_names,
    pairwise_kl,
    phi_map,
    problem_names,
    project,
    run,
    sample,
    sinkhorn_w22,
    systematic_resample,
    tv_components,
    verify_meanfield,
)

__all__ = [name for name in dir() if not name.startswith("_")]
