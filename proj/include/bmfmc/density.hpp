#pragma once

#include "bmfmc/common.hpp"
#include "bmfmc/gp.hpp"

#include <vector>

namespace bmfmc {

/// Strictly increasing evaluation grid for the output density.
struct SupportGrid {
  Vector points;

  Eigen::Index size() const { return points.size(); }
  void validate() const;

  static SupportGrid equispaced(double lo, double hi, Eigen::Index count);
  /// [min - margin*range, max + margin*range] of the pooled values.
  static SupportGrid from_values_margin(const Vector& values, Eigen::Index count,
                                        double margin_rel = 0.15);
  /// mean +- z_std * std of the pooled values.
  static SupportGrid from_values_std(const Vector& values, Eigen::Index count, double z_std);
};

/// Posterior mean and pointwise variance of the HF output density.
struct DensityPrediction {
  SupportGrid support;
  Vector mean;      // >= 0 pointwise
  Vector variance;  // >= 0 after clamping
  Eigen::Index n_used_mean = 0;
  Eigen::Index n_used_var = 0;
  double variance_preclamp_min = 0.0;
};

/// Posterior-mean density: the exact mixture
///   (1/N) sum_j N(y; m_D(z*_j), v_D(z*_j) + sigma_n^2)
/// evaluated pointwise on the grid. Components with exactly zero total
/// variance contribute a normalized triangular hat over the two nearest grid
/// cells. Terms are summed pairwise in a canonical (lexicographic row) order,
/// so the result is exactly invariant under permutation of Z_star rows.
Vector density_mean(const GaussianProcessModel& model, const Matrix& z_star,
                    const SupportGrid& support);

/// Pointwise variance of the density estimate:
///   (1/N^2) sum_i sum_j N2([y,y]; [m_i, m_j], [[v_i+sn, k_ij],[k_ij, v_j+sn]])
///     - mean_vec^2,
/// evaluated at the diagonal points [y_l, y_l]. `mean_vec` must come from
/// density_mean on the same rows. Correlations outside (-1, 1) from numerics
/// are clamped with a warning; the pre-clamp minimum is reported through
/// `preclamp_min` when non-null.
Vector density_variance(const GaussianProcessModel& model, const Matrix& z_star,
                        const SupportGrid& support, const Vector& mean_vec,
                        double* preclamp_min = nullptr);

/// Deterministic stride subsample used to keep the O(N_v^2) variance double
/// sum tractable: indices floor(i * N / n_v) for i in [0, n_v).
std::vector<Eigen::Index> variance_subsample_indices(Eigen::Index n, Eigen::Index n_v);

namespace detail {

/// Grid-aware evaluation of one Gaussian mixture component. Components wider
/// than a grid cell are evaluated pointwise (the trapezoid rule is then
/// exact to rounding); narrower ones are represented by their exact
/// probability mass per grid cell so the density keeps integrating to one;
/// zero-width components degenerate to the triangular hat.
class GridComponentEvaluator {
 public:
  explicit GridComponentEvaluator(const Vector& grid);

  /// Density contribution of N(mean, var) at grid node l.
  double value(Eigen::Index l, double mean, double var) const;

  /// Plain pointwise normal pdf at node l (no narrow-width handling).
  double pointwise(Eigen::Index l, double mean, double var) const;

  /// True when a component of this variance is too narrow for pointwise
  /// evaluation on this grid.
  bool narrow(double var) const { return var < min_cell_ * min_cell_; }

  const Vector& node_weights() const { return weights_; }

 private:
  Vector grid_;
  Vector weights_;    // trapezoid node weights
  Vector cell_lo_;    // Voronoi cell bounds; outermost cells extend to +-inf
  Vector cell_hi_;
  double min_cell_ = 0.0;
};

}  // namespace detail

}  // namespace bmfmc
