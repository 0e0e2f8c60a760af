#pragma once

#include "bmfmc/common.hpp"
#include "bmfmc/dimreduce.hpp"
#include "bmfmc/inputs.hpp"

#include <vector>

namespace bmfmc {

/// Correlation-based ranking of reduced-input columns against the LF output.
struct FeatureRanking {
  Vector scores;                     // r[j] = |sum_n xhat[n][j] * y_lf[n]|, >= 0
  std::vector<Eigen::Index> order;   // columns by descending score; constant
                                     // columns always sort last
  std::vector<bool> selectable;      // false for constant (zero-variance) columns
};

/// LF feature vectors for all samples: z = [y_LF, gamma_1..gamma_ng] plus the
/// extended set gamma+ used for training-point selection.
struct FeatureSpace {
  Matrix z_matrix;     // N x (1 + n_gamma); column 0 is the raw LF output
  Matrix gamma_plus;   // N x n_gamma_plus, standardized input features only
  std::vector<Eigen::Index> selected_cols;  // reduced-input column per gamma+, ranked order
  Eigen::Index n_gamma = 0;
  Eigen::Index n_gamma_plus = 0;
};

/// Rows selected for high-fidelity evaluation plus their gathered data.
struct TrainingSet {
  Matrix x;     // n_train x d original inputs
  Matrix z_lf;  // n_train x (1 + n_gamma)
  Vector y_hf;  // n_train
  std::vector<Eigen::Index> selection_indices;
};

/// Scores each reduced-input column by |x_hat_j . y_lf|; y_lf is standardized
/// first when standardize_y is set, which makes the ranking invariant under
/// positive rescaling of the LF output. Ties break toward the lower column
/// index. Constant columns score zero and are never selectable.
FeatureRanking rank_features(const ReducedInputMatrix& reduced, const Vector& y_lf,
                             bool standardize_y = true);

/// Assembles z = [y_LF, top n_gamma columns] and the extended gamma+ matrix
/// from the top n_gamma_plus columns. Requires n_gamma <= n_gamma_plus <=
/// number of selectable columns.
FeatureSpace build_feature_space(const FeatureRanking& ranking, const ReducedInputMatrix& reduced,
                                 const Vector& y_lf, Eigen::Index n_gamma,
                                 Eigen::Index n_gamma_plus);

/// Greedy max-min (farthest point) subset of `points` rows: starts with the
/// row nearest the coordinate-wise median, then repeatedly adds the row
/// maximizing the minimum Euclidean distance to the chosen set. Deterministic;
/// ties break toward the lower row index. Selections are nested: the result
/// for a smaller n_train is a prefix of the result for a larger one.
std::vector<Eigen::Index> select_diverse_subset(const Matrix& points, Eigen::Index n_train);

/// Gathers the selected rows of the inputs and feature space together with the
/// externally computed HF outputs (one per selected index, same order).
TrainingSet assemble_training_set(const SampleMatrix& samples, const FeatureSpace& features,
                                  const std::vector<Eigen::Index>& indices, const Vector& y_hf);

}  // namespace bmfmc
