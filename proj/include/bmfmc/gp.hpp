#pragma once

#include "bmfmc/common.hpp"

#include <cstdint>
#include <limits>

namespace bmfmc {

/// Squared-exponential kernel hyperparameters. Positivity is enforced by
/// optimizing in log-space.
struct KernelParams {
  double length_scale = 1.0;  // ell > 0
  double signal_var = 1.0;    // sigma_0^2 > 0
  double noise_var = 0.0;     // sigma_n^2 >= 0

  void validate() const;
};

/// Prior mean function of the process.
enum class MeanMode {
  Zero,           // m(z) = 0
  LfPassthrough,  // m(z) = z[0]; assumes the LF output reflects the HF mean
};

/// Univariate predictive distribution at one test feature.
struct PredictiveGaussian {
  double mean = 0.0;
  double variance = 0.0;  // latent v_D(z*), noise not included
  double noise = 0.0;     // sigma_n^2 of the model, to be added by callers
};

/// Batch of predictive distributions.
struct GpPredictions {
  Vector mean;
  Vector variance;
  double noise_var = 0.0;

  PredictiveGaussian at(Eigen::Index i) const { return {mean[i], variance[i], noise_var}; }
  Eigen::Index size() const { return mean.size(); }
};

/// Trained Gaussian process. Immutable after construction; safe to share.
///
/// A model flagged `deterministic` represents an exactly-degenerate fit
/// (zero-variance residuals): it predicts mean m(z) + residual_shift with
/// zero latent variance and zero noise.
struct GaussianProcessModel {
  KernelParams params;
  MeanMode mean_mode = MeanMode::Zero;
  Matrix z_train;  // n x m
  Vector y_train;  // n
  Matrix chol_l;   // lower Cholesky factor of K + sigma_n^2 I
  Vector alpha;    // (K + sigma_n^2 I)^{-1} (Y - m(Z))
  bool deterministic = false;
  double residual_shift = 0.0;
  double log_marginal = -std::numeric_limits<double>::infinity();

  Eigen::Index n_train() const { return z_train.rows(); }
  Eigen::Index feature_dim() const { return z_train.cols(); }
};

/// k(z, z') = sigma_0^2 exp(-|z - z'|^2 / (2 ell^2)), isotropic over all
/// feature dimensions. Returns the n x p cross matrix.
Matrix kernel_eval(const KernelParams& params, const Matrix& z_a, const Matrix& z_b);

/// Log marginal likelihood of the data under the prior, computed through a
/// Cholesky factorization of K + sigma_n^2 I (with the shared escalating
/// jitter rescue). Exactly singular systems (duplicate feature rows with zero
/// noise) raise a numeric_error. If `grad_log` is non-null it receives the
/// analytic gradient with respect to (log ell, log sigma_0^2, log sigma_n^2).
double log_marginal_likelihood(const KernelParams& params, const Matrix& z_train,
                               const Vector& y_train, MeanMode mean_mode,
                               Vector* grad_log = nullptr);

/// Hyperparameter estimation: each restart maximizes the marginal likelihood
/// with a quasi-Newton (BFGS) search in log-space; the first restart starts
/// from the median heuristic, the rest from log-uniform draws. Across
/// restarts the solution is chosen by leave-one-out predictive density
/// (deterministic (objective, restart index) ordering) because the raw
/// marginal likelihood is unbounded whenever the posterior mean can thread
/// the targets exactly. Deterministic for fixed seed.
GaussianProcessModel gp_fit(const Matrix& z_train, const Vector& y_train, MeanMode mean_mode,
                            int restarts = 8, std::uint64_t seed = 0);

/// Model with explicitly given hyperparameters (no optimization).
GaussianProcessModel gp_make(const KernelParams& params, const Matrix& z_train,
                             const Vector& y_train, MeanMode mean_mode);

/// Posterior mean and latent variance at each test row. Variances are clamped
/// at zero (with a warning) when numerics dip below.
GpPredictions gp_predict(const GaussianProcessModel& model, const Matrix& z_test);

/// Full posterior cross-covariance block
/// k_D(a, b) = k(a, b) - k(a, Z) [K + sigma_n^2 I]^{-1} k(Z, b).
Matrix gp_posterior_cov(const GaussianProcessModel& model, const Matrix& z_a, const Matrix& z_b);

}  // namespace bmfmc
