#include "bmfmc/metrics.hpp"

#include <cmath>
#include <limits>

namespace bmfmc {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}

Vector KDEEstimate::evaluate(const Vector& grid) const {
  const Eigen::Index n = samples.size();
  const double inv_h = 1.0 / bandwidth;
  Vector out(grid.size());
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    PairwiseAccumulator acc;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (grid[l] - samples[i]) * inv_h;
      acc.add(std::exp(-0.5 * u * u));
    }
    out[l] = acc.total() * kInvSqrt2Pi * inv_h / static_cast<double>(n);
  }
  return out;
}

double kde_loo_log_likelihood(const Vector& samples, double bandwidth) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw usage_error("kde_loo_log_likelihood: need at least two samples");
  const double inv_h = 1.0 / bandwidth;
  const double norm = kInvSqrt2Pi * inv_h / static_cast<double>(n - 1);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double u = (samples[i] - samples[j]) * inv_h;
      s += std::exp(-0.5 * u * u);
    }
    if (s <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += std::log(norm * s);
  }
  return ll;
}

KDEEstimate kde_fit(const Vector& samples, BandwidthMode mode) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw usage_error("kde_fit: need at least two samples");
  const double mean = samples.mean();
  const double sd =
      std::sqrt((samples.array() - mean).square().sum() / static_cast<double>(n));
  if (sd == 0.0) throw usage_error("kde_fit: all samples identical");

  const double h_silverman = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  KDEEstimate kde;
  kde.samples = samples;
  kde.bandwidth = h_silverman;
  if (mode == BandwidthMode::Silverman) return kde;

  // 30 log-spaced candidates around the Silverman bandwidth
  const int n_cand = 30;
  const double lo = std::log(h_silverman / 5.0), hi = std::log(h_silverman * 5.0);
  double best_h = h_silverman;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < n_cand; ++c) {
    const double h = std::exp(lo + (hi - lo) * static_cast<double>(c) / (n_cand - 1));
    const double ll = kde_loo_log_likelihood(samples, h);
    if (ll > best_ll) {
      best_ll = ll;
      best_h = h;
    }
  }
  kde.bandwidth = best_h;
  return kde;
}

double kld(const Vector& grid, const Vector& p, const Vector& q) {
  if (grid.size() != p.size() || grid.size() != q.size())
    throw usage_error("kld: densities must share the support grid");
  const double q_max = q.maxCoeff();
  if (q_max <= 0.0) return std::numeric_limits<double>::infinity();
  const double q_floor = 1e-12 * q_max;

  Vector integrand(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (p[i] <= 0.0) {
      integrand[i] = 0.0;
      continue;
    }
    integrand[i] = p[i] * std::log(p[i] / std::max(q[i], q_floor));
  }
  const double v = trapezoid(grid, integrand);
  if (v < -1e-10) warn("kld: quadrature produced " + std::to_string(v) + "; clamping to 0");
  return std::max(v, 0.0);
}

double mc_standard_error(double sample_std, Eigen::Index n) {
  if (n < 1) throw usage_error("mc_standard_error: n must be >= 1");
  if (!(sample_std >= 0.0)) throw usage_error("mc_standard_error: std must be >= 0");
  return sample_std / std::sqrt(static_cast<double>(n));
}

}  // namespace bmfmc
