#pragma once

#include "bmfmc/common.hpp"

#include <vector>

namespace bmfmc {

/// Truncated Karhunen-Loeve basis of one correlated input block.
struct KLEBasis {
  Vector eigenvalues;   // full spectrum, descending, clamped at 0
  Matrix eigenvectors;  // columns orthonormal, matching order
  Vector mean;          // field mean over the grid
  Eigen::Index n_trunc = 0;
  double explained = 0.0;  // retained-variance fraction at n_trunc

  Matrix retained() const { return eigenvectors.leftCols(n_trunc); }
};

/// Per-column affine scaler of the standardization operator.
struct ColumnScaler {
  double mean = 0.0;
  double std = 1.0;      // population convention (1/N); 1 for constant columns
  bool constant = false; // constant columns map to zero and are never selectable
};

/// Standardized reduced-input matrix: uncorrelated columns followed by KLE
/// coefficient columns, each scaled to zero mean / unit (population) std.
struct ReducedInputMatrix {
  Matrix data;
  std::vector<ColumnScaler> scalers;

  Eigen::Index cols() const { return data.cols(); }
  Eigen::Index rows() const { return data.rows(); }
};

/// Basis from a known field covariance (preferred when the generating spec is
/// available). `threshold` in (0,1]; n_trunc is the smallest order reaching it,
/// capped at max_order.
KLEBasis kle_fit_covariance(const Matrix& covariance, const Vector& mean, double threshold,
                            Eigen::Index max_order);

/// Basis from field realizations (rows); uses the empirical mean and the
/// population (1/N) covariance.
KLEBasis kle_fit_samples(const Matrix& field_rows, double threshold, Eigen::Index max_order);

/// Coefficients of each row in the retained basis: c = V_trunc^T (x - mean).
Matrix kle_project(const KLEBasis& basis, const Matrix& field_rows);

/// Reconstruction mean + V_trunc c; exact up to discarded-mode energy.
Matrix kle_reconstruct(const KLEBasis& basis, const Matrix& coeffs);

/// Column-wise standardization with population std; constant columns map to
/// zero with a recorded unit scaler.
ReducedInputMatrix standardize(const Matrix& m);

/// Apply previously fitted scalers to held-out rows.
Matrix apply_scalers(const std::vector<ColumnScaler>& scalers, const Matrix& m);

}  // namespace bmfmc
