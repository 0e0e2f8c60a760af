#include "bmfmc/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bmfmc {

FeatureRanking rank_features(const ReducedInputMatrix& reduced, const Vector& y_lf,
                             bool standardize_y) {
  if (reduced.rows() != y_lf.size())
    throw usage_error("rank_features: row count of reduced inputs must match y_lf length");

  Vector y = y_lf;
  if (standardize_y) {
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size()));
    if (sd > 0.0) y = (y.array() - mean) / sd;
    else y.setZero();
  }

  FeatureRanking rank;
  rank.scores = (reduced.data.transpose() * y).cwiseAbs();
  rank.selectable.resize(static_cast<std::size_t>(reduced.cols()));
  for (Eigen::Index j = 0; j < reduced.cols(); ++j) {
    const bool ok = !reduced.scalers[static_cast<std::size_t>(j)].constant;
    rank.selectable[static_cast<std::size_t>(j)] = ok;
    if (!ok) rank.scores[j] = 0.0;
  }

  rank.order.resize(static_cast<std::size_t>(reduced.cols()));
  for (std::size_t j = 0; j < rank.order.size(); ++j) rank.order[j] = static_cast<Eigen::Index>(j);
  std::stable_sort(rank.order.begin(), rank.order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const bool sa = rank.selectable[static_cast<std::size_t>(a)];
    const bool sb = rank.selectable[static_cast<std::size_t>(b)];
    if (sa != sb) return sa;  // constant columns last
    if (rank.scores[a] != rank.scores[b]) return rank.scores[a] > rank.scores[b];
    return a < b;
  });
  return rank;
}

FeatureSpace build_feature_space(const FeatureRanking& ranking, const ReducedInputMatrix& reduced,
                                 const Vector& y_lf, Eigen::Index n_gamma,
                                 Eigen::Index n_gamma_plus) {
  if (n_gamma < 0 || n_gamma > n_gamma_plus)
    throw usage_error("build_feature_space: require 0 <= n_gamma <= n_gamma_plus");
  if (n_gamma_plus > reduced.cols())
    throw usage_error("build_feature_space: n_gamma_plus exceeds available columns");
  if (reduced.rows() != y_lf.size())
    throw usage_error("build_feature_space: row count mismatch");
  const Eigen::Index n_selectable = static_cast<Eigen::Index>(
      std::count(ranking.selectable.begin(), ranking.selectable.end(), true));
  if (n_gamma_plus > n_selectable)
    throw usage_error("build_feature_space: n_gamma_plus exceeds selectable (non-constant) columns");

  FeatureSpace fs;
  fs.n_gamma = n_gamma;
  fs.n_gamma_plus = n_gamma_plus;
  fs.selected_cols.assign(ranking.order.begin(), ranking.order.begin() + n_gamma_plus);

  const Eigen::Index n = reduced.rows();
  fs.z_matrix.resize(n, 1 + n_gamma);
  fs.z_matrix.col(0) = y_lf;  // raw units; the kernel length scale absorbs scale
  for (Eigen::Index i = 0; i < n_gamma; ++i)
    fs.z_matrix.col(1 + i) = reduced.data.col(fs.selected_cols[static_cast<std::size_t>(i)]);

  fs.gamma_plus.resize(n, n_gamma_plus);
  for (Eigen::Index i = 0; i < n_gamma_plus; ++i)
    fs.gamma_plus.col(i) = reduced.data.col(fs.selected_cols[static_cast<std::size_t>(i)]);
  return fs;
}

std::vector<Eigen::Index> select_diverse_subset(const Matrix& points, Eigen::Index n_train) {
  const Eigen::Index n = points.rows();
  if (n_train < 1 || n_train > n)
    throw usage_error("select_diverse_subset: require 1 <= n_train <= number of points");
  if (points.cols() < 1) throw usage_error("select_diverse_subset: points have no columns");

  // coordinate-wise median (average of the two central order statistics)
  Vector median(points.cols());
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = points(i, j);
    std::sort(col.begin(), col.end());
    const std::size_t h = static_cast<std::size_t>(n) / 2;
    median[j] = (n % 2 == 1) ? col[h] : 0.5 * (col[h - 1] + col[h]);
  }

  Eigen::Index first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (points.row(i).transpose() - median).squaredNorm();
    if (d < best) {
      best = d;
      first = i;
    }
  }

  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(n_train));
  chosen.push_back(first);
  Vector min_dist2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    min_dist2[i] = (points.row(i) - points.row(first)).squaredNorm();

  while (static_cast<Eigen::Index>(chosen.size()) < n_train) {
    Eigen::Index arg = 0;
    double far = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (min_dist2[i] > far) {
        far = min_dist2[i];
        arg = i;
      }
    }
    chosen.push_back(arg);
    for (Eigen::Index i = 0; i < n; ++i)
      min_dist2[i] = std::min(min_dist2[i], (points.row(i) - points.row(arg)).squaredNorm());
  }
  return chosen;
}

TrainingSet assemble_training_set(const SampleMatrix& samples, const FeatureSpace& features,
                                  const std::vector<Eigen::Index>& indices, const Vector& y_hf) {
  const Eigen::Index n = samples.n_samples();
  if (features.z_matrix.rows() != n)
    throw usage_error("assemble_training_set: feature space rows must match sample count");
  if (static_cast<Eigen::Index>(indices.size()) != y_hf.size())
    throw usage_error("assemble_training_set: one HF output per selected index required");
  if (indices.empty()) throw usage_error("assemble_training_set: empty selection");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Eigen::Index idx : indices) {
    if (idx < 0 || idx >= n) throw usage_error("assemble_training_set: index out of range");
    if (seen[static_cast<std::size_t>(idx)])
      throw usage_error("assemble_training_set: duplicate selection index");
    seen[static_cast<std::size_t>(idx)] = true;
  }
  if (10 * static_cast<Eigen::Index>(indices.size()) > n)
    throw usage_error("assemble_training_set: n_train must not exceed N_sample/10");

  TrainingSet ts;
  ts.selection_indices = indices;
  const Eigen::Index k = static_cast<Eigen::Index>(indices.size());
  ts.x.resize(k, samples.dim());
  ts.z_lf.resize(k, features.z_matrix.cols());
  ts.y_hf = y_hf;
  for (Eigen::Index i = 0; i < k; ++i) {
    ts.x.row(i) = samples.data.row(indices[static_cast<std::size_t>(i)]);
    ts.z_lf.row(i) = features.z_matrix.row(indices[static_cast<std::size_t>(i)]);
  }
  return ts;
}

}  // namespace bmfmc
