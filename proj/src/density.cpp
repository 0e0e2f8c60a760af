#include "bmfmc/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bmfmc {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2 pi)

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

}  // namespace

namespace detail {

GridComponentEvaluator::GridComponentEvaluator(const Vector& grid) : grid_(grid) {
  const Eigen::Index s = grid.size();
  weights_.resize(s);
  cell_lo_.resize(s);
  cell_hi_.resize(s);
  weights_[0] = 0.5 * (grid[1] - grid[0]);
  weights_[s - 1] = 0.5 * (grid[s - 1] - grid[s - 2]);
  for (Eigen::Index i = 1; i + 1 < s; ++i) weights_[i] = 0.5 * (grid[i + 1] - grid[i - 1]);

  cell_lo_[0] = -std::numeric_limits<double>::infinity();
  cell_hi_[s - 1] = std::numeric_limits<double>::infinity();
  min_cell_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < s; ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    cell_hi_[i] = mid;
    cell_lo_[i + 1] = mid;
    min_cell_ = std::min(min_cell_, grid[i + 1] - grid[i]);
  }
}

double GridComponentEvaluator::value(Eigen::Index l, double mean, double var) const {
  if (var <= 0.0) {
    // point mass split linearly over the two nearest nodes
    const Eigen::Index s = grid_.size();
    if (mean <= grid_[0]) return l == 0 ? 1.0 / weights_[0] : 0.0;
    if (mean >= grid_[s - 1]) return l == s - 1 ? 1.0 / weights_[s - 1] : 0.0;
    Eigen::Index k = 0;
    while (k + 1 < s && grid_[k + 1] < mean) ++k;
    const double t = (mean - grid_[k]) / (grid_[k + 1] - grid_[k]);
    if (l == k) return (1.0 - t) / weights_[k];
    if (l == k + 1) return t / weights_[k + 1];
    return 0.0;
  }
  if (var < min_cell_ * min_cell_) {
    // narrower than the grid can resolve pointwise: use the exact cell mass
    const double sd = std::sqrt(var);
    const double mass =
        normal_cdf((cell_hi_[l] - mean) / sd) - normal_cdf((cell_lo_[l] - mean) / sd);
    return mass / weights_[l];
  }
  return pointwise(l, mean, var);
}

double GridComponentEvaluator::pointwise(Eigen::Index l, double mean, double var) const {
  const double inv_sd = 1.0 / std::sqrt(var);
  const double u = (grid_[l] - mean) * inv_sd;
  return kInvSqrt2Pi * inv_sd * std::exp(-0.5 * u * u);
}

}  // namespace detail

void SupportGrid::validate() const {
  if (points.size() < 2) throw usage_error("support grid needs at least two points");
  for (Eigen::Index i = 0; i + 1 < points.size(); ++i)
    if (!(points[i] < points[i + 1]))
      throw usage_error("support grid must be strictly increasing");
}

SupportGrid SupportGrid::equispaced(double lo, double hi, Eigen::Index count) {
  if (!(lo < hi)) throw usage_error("support grid: lo must be < hi");
  if (count < 2) throw usage_error("support grid: need at least two points");
  SupportGrid g;
  g.points.resize(count);
  for (Eigen::Index i = 0; i < count; ++i)
    g.points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

SupportGrid SupportGrid::from_values_margin(const Vector& values, Eigen::Index count,
                                            double margin_rel) {
  if (values.size() < 1) throw usage_error("support grid: no values");
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  double range = hi - lo;
  if (range <= 0.0) range = std::max(std::abs(lo), 1.0);
  return equispaced(lo - margin_rel * range, hi + margin_rel * range, count);
}

SupportGrid SupportGrid::from_values_std(const Vector& values, Eigen::Index count, double z_std) {
  if (values.size() < 1) throw usage_error("support grid: no values");
  const double mean = values.mean();
  double sd = std::sqrt((values.array() - mean).square().sum() /
                        static_cast<double>(values.size()));
  if (sd <= 0.0) sd = std::max(std::abs(mean), 1.0) * 1e-3;
  return equispaced(mean - z_std * sd, mean + z_std * sd, count);
}

Vector density_mean(const GaussianProcessModel& model, const Matrix& z_star,
                    const SupportGrid& support) {
  support.validate();
  const Eigen::Index n = z_star.rows();
  if (n < 1) throw usage_error("density_mean: need at least one test feature");

  const GpPredictions pred = gp_predict(model, z_star);
  const Eigen::Index s = support.size();
  const detail::GridComponentEvaluator eval(support.points);

  // canonical processing order makes the pairwise sums permutation invariant
  const std::vector<Eigen::Index> order = lexicographic_row_order(z_star);

  std::vector<PairwiseAccumulator> acc(static_cast<std::size_t>(s));
  for (Eigen::Index oi : order) {
    const double m = pred.mean[oi];
    const double s2 = pred.variance[oi] + pred.noise_var;
    for (Eigen::Index l = 0; l < s; ++l)
      acc[static_cast<std::size_t>(l)].add(eval.value(l, m, s2));
  }

  Vector out(s);
  for (Eigen::Index l = 0; l < s; ++l)
    out[l] = acc[static_cast<std::size_t>(l)].total() / static_cast<double>(n);
  return out;
}

Vector density_variance(const GaussianProcessModel& model, const Matrix& z_star,
                        const SupportGrid& support, const Vector& mean_vec,
                        double* preclamp_min) {
  support.validate();
  const Eigen::Index n = z_star.rows();
  const Eigen::Index s = support.size();
  if (mean_vec.size() != s)
    throw usage_error("density_variance: mean vector must match the support grid");
  if (n < 1) throw usage_error("density_variance: need at least one test feature");

  if (model.deterministic) {
    // no posterior uncertainty: every realization of the density coincides
    if (preclamp_min) *preclamp_min = 0.0;
    return Vector::Zero(s);
  }

  const GpPredictions pred = gp_predict(model, z_star);
  const Matrix cov = gp_posterior_cov(model, z_star, z_star);
  const detail::GridComponentEvaluator eval(support.points);
  const std::vector<Eigen::Index> order = lexicographic_row_order(z_star);

  Vector total_var(n);
  for (Eigen::Index i = 0; i < n; ++i) total_var[i] = pred.variance[i] + pred.noise_var;

  // Pairwise-centered covariance form: with mean_vec = (1/N) sum_i comp(i, .)
  // it equals the "second moment minus squared mean" expression exactly, and
  // the pointwise block is a positive-semidefinite quadratic form, so the
  // estimate cannot go materially negative. Components too narrow for the
  // grid live in cells whose averaged value is insensitive to sub-cell
  // posterior shifts; their covariance contribution is dropped as zero.
  Matrix comp(n, s);
  std::vector<bool> pointwise_ok(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s2 = std::max(total_var[i], 0.0);
    pointwise_ok[static_cast<std::size_t>(i)] = s2 > 0.0 && !eval.narrow(s2);
    for (Eigen::Index l = 0; l < s; ++l) comp(i, l) = eval.value(l, pred.mean[i], s2);
  }

  std::vector<PairwiseAccumulator> acc(static_cast<std::size_t>(s));
  Eigen::Index rho_clamped = 0;

  for (Eigen::Index oi = 0; oi < n; ++oi) {
    const Eigen::Index i = order[static_cast<std::size_t>(oi)];
    for (Eigen::Index oj = 0; oj < n; ++oj) {
      const Eigen::Index j = order[static_cast<std::size_t>(oj)];
      if (!pointwise_ok[static_cast<std::size_t>(i)] ||
          !pointwise_ok[static_cast<std::size_t>(j)]) {
        for (Eigen::Index l = 0; l < s; ++l) acc[static_cast<std::size_t>(l)].add(0.0);
        continue;
      }
      const double s2i = total_var[i];
      const double s2j = total_var[j];
      const double mi = pred.mean[i];
      const double mj = pred.mean[j];

      double k_ij = cov(i, j);
      const double sd_prod = std::sqrt(s2i * s2j);
      if (std::abs(k_ij) > (1.0 - 1e-12) * sd_prod) ++rho_clamped;
      // evaluation cap below the repair threshold: at |rho| -> 1 the
      // bivariate density is numerically hypersensitive to the posterior
      // covariance, and rounding there would leak into the variance
      const double rho_lim = 1.0 - 1e-6;
      if (std::abs(k_ij) > rho_lim * sd_prod)
        k_ij = std::copysign(rho_lim * sd_prod, k_ij);
      // the diagonal y -> N2([y,y]; [mi,mj], Sigma) is itself an unnormalized
      // Gaussian: N(mi - mj; 0, s2i + s2j - 2k) * N(y; mu_slice, var_slice)
      const double denom = s2i + s2j - 2.0 * k_ij;
      const double det = s2i * s2j - k_ij * k_ij;
      const double var_slice = det / denom;
      const double mu_slice = (mi * (s2j - k_ij) + mj * (s2i - k_ij)) / denom;
      const double du = (mi - mj);
      const double scale =
          kInvSqrt2Pi / std::sqrt(denom) * std::exp(-0.5 * du * du / denom);
      for (Eigen::Index l = 0; l < s; ++l)
        acc[static_cast<std::size_t>(l)].add(scale * eval.pointwise(l, mu_slice, var_slice) -
                                             comp(i, l) * comp(j, l));
    }
  }

  if (rho_clamped > 0)
    warn("density_variance: clamped " + std::to_string(rho_clamped) +
         " posterior correlations to |rho| < 1");

  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  Vector out(s);
  double pre_min = 0.0;
  for (Eigen::Index l = 0; l < s; ++l) {
    const double v = acc[static_cast<std::size_t>(l)].total() / n2;
    pre_min = std::min(pre_min, v);
    out[l] = std::max(v, 0.0);
  }
  if (preclamp_min) *preclamp_min = pre_min;
  return out;
}

std::vector<Eigen::Index> variance_subsample_indices(Eigen::Index n, Eigen::Index n_v) {
  if (n_v < 1 || n_v > n)
    throw usage_error("variance_subsample_indices: require 1 <= n_v <= n");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_v));
  for (Eigen::Index i = 0; i < n_v; ++i)
    idx[static_cast<std::size_t>(i)] = (i * n) / n_v;
  return idx;
}

}  // namespace bmfmc
