"""Multi-fidelity uncertainty propagation toolkit.

Estimates the output density of an expensive high-fidelity model from many
cheap low-fidelity runs plus a handful of high-fidelity runs, with credible
intervals on the density itself. The heavy lifting lives in the compiled
extension; this package re-exports its public surface.
"""

from ._core import (  # noqa: F401
    ArtifactError,
    FeatureRanking,
    FeatureSpace,
    GaussianProcessModel,
    KLEBasis,
    NumericError,
    ReducedInputMatrix,
    UsageError,
    __version__,
    build_feature_space,
    density_mean,
    density_variance,
    field_covariance,
    gp_fit,
    gp_make,
    gp_posterior_cov,
    gp_predict,
    harness_evaluate,
    kde,
    kld,
    kle_fit_covariance,
    kle_fit_samples,
    kle_project,
    kle_reconstruct,
    lf_speedup,
    log_marginal_likelihood,
    mc_standard_error,
    mf_speedup,
    rank_features,
    relative_cost,
    run_pipeline,
    sample_field,
    sample_scalar,
    select_diverse_subset,
    standardize,
    support_grid,
)
