#pragma once

#include "bmfmc/common.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace bmfmc {

/// Law of one independent scalar input.
struct ScalarDistribution {
  enum class Kind { Uniform, Lognormal, Normal };
  Kind kind = Kind::Uniform;
  // uniform: a = lo, b = hi; normal/lognormal: a = mu, b = sigma^2
  double a = 0.0;
  double b = 1.0;

  static ScalarDistribution uniform(double lo, double hi);
  static ScalarDistribution lognormal(double mu, double sigma2);
  static ScalarDistribution normal(double mu, double sigma2);

  void validate() const;  // throws usage_error
};

/// Discretized Gaussian random field with a squared-exponential base kernel
/// and a pointwise amplitude (non-stationary signal standard deviation).
struct RandomFieldSpec {
  Matrix grid;          // n_pts x coord_dim evaluation points, ordered
  Vector mean;          // n_pts
  Vector amplitude;     // n_pts, sigma_u at each point, >= 0
  double length_scale = 1.0;
  double jitter_rel = 1e-10;  // initial relative jitter; escalates x10 up to 1e-6

  Eigen::Index n_pts() const { return grid.rows(); }
  void validate() const;

  /// Equispaced 1-D grid helper; used when a spec gives only a point count.
  static Matrix equispaced(Eigen::Index count, double lo, double hi);
};

/// One column block of the sample matrix.
struct BlockSpec {
  std::string name;
  std::variant<ScalarDistribution, RandomFieldSpec> spec;

  bool is_field() const { return std::holds_alternative<RandomFieldSpec>(spec); }
  Eigen::Index width() const;
};

/// Layout entry of an assembled sample matrix.
struct BlockLayout {
  std::string name;
  bool field = false;
  Eigen::Index offset = 0;
  Eigen::Index width = 1;
};

/// N x d matrix of input realizations plus its column-block metadata.
struct SampleMatrix {
  Matrix data;
  std::vector<BlockLayout> layout;
  std::uint64_t seed = 0;

  Eigen::Index n_samples() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
  const BlockLayout& block(const std::string& name) const;
};

/// i.i.d. draws from `dist`; deterministic for fixed seed.
Vector sample_scalar(const ScalarDistribution& dist, Eigen::Index n, std::uint64_t seed);

/// K*[i][j] = sigma_u(p_i) sigma_u(p_j) exp(-|p_i - p_j|^2 / (2 l^2)).
/// Symmetric by construction; no jitter included.
Matrix field_covariance(const RandomFieldSpec& spec);

/// n realizations of the field, one per row. Sampling factors the
/// non-stationary covariance through the unit-amplitude stationary kernel:
/// row = mean + amplitude .* (L r) with L L^T = K_unit + jitter I, so points
/// with zero amplitude reproduce the mean exactly.
Matrix sample_field(const RandomFieldSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Draw all blocks independently; per-block streams are derived from the root
/// seed and the block name, so adding a block never perturbs the others.
SampleMatrix assemble_samples(const std::vector<BlockSpec>& blocks, Eigen::Index n,
                              std::uint64_t seed);

/// Cholesky with the escalating-jitter policy shared across the library:
/// start at jitter_rel * mean(diag), escalate x10 up to 1e-6 relative, then
/// fail with a numeric_error naming `label`. Returns the factor L and the
/// jitter actually applied.
Eigen::LLT<Matrix> jittered_llt(const Matrix& sym, const std::string& label,
                                double jitter_rel = 1e-10, double* jitter_used = nullptr);

}  // namespace bmfmc
