#pragma once

#include "bmfmc/common.hpp"

namespace bmfmc {

enum class BandwidthMode {
  Silverman,  // h = 1.06 * sigma_hat * n^(-1/5)
  CvGrid,     // leave-one-out log-likelihood over 30 log-spaced candidates
};

/// Gaussian kernel density estimate; evaluable on any support grid.
struct KDEEstimate {
  Vector samples;
  double bandwidth = 0.0;

  Vector evaluate(const Vector& grid) const;
};

KDEEstimate kde_fit(const Vector& samples, BandwidthMode mode = BandwidthMode::Silverman);

/// Leave-one-out log-likelihood of the samples under a Gaussian KDE with the
/// given bandwidth. Exposed for bandwidth-selection diagnostics.
double kde_loo_log_likelihood(const Vector& samples, double bandwidth);

/// D_KL(p || q) by trapezoid quadrature on the shared grid, with q floored at
/// 1e-12 * max(q). Tiny negative results from quadrature are clamped to 0.
double kld(const Vector& grid, const Vector& p, const Vector& q);

/// Standard error of the Monte Carlo mean estimator: sigma_hat / sqrt(n).
double mc_standard_error(double sample_std, Eigen::Index n);

}  // namespace bmfmc
