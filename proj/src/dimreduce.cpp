#include "bmfmc/dimreduce.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace bmfmc {

namespace {

KLEBasis decompose(const Matrix& covariance, const Vector& mean, double threshold,
                   Eigen::Index max_order) {
  if (covariance.rows() != covariance.cols())
    throw usage_error("kle_fit: covariance must be square");
  if (mean.size() != covariance.rows())
    throw usage_error("kle_fit: mean length must match covariance");
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw usage_error("kle_fit: threshold must lie in (0, 1]");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw usage_error("kle_fit: covariance must be symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  if (eig.info() != Eigen::Success) throw numeric_error("kle_fit: eigendecomposition failed");

  const Eigen::Index m = covariance.rows();
  KLEBasis basis;
  basis.mean = mean;
  basis.eigenvalues.resize(m);
  basis.eigenvectors.resize(m, m);
  // SelfAdjointEigenSolver returns ascending order; flip to descending
  for (Eigen::Index j = 0; j < m; ++j) {
    basis.eigenvalues[j] = eig.eigenvalues()[m - 1 - j];
    basis.eigenvectors.col(j) = eig.eigenvectors().col(m - 1 - j);
  }
  const double lmax = basis.eigenvalues.size() ? std::max(basis.eigenvalues[0], 0.0) : 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (basis.eigenvalues[j] < -1e-10 * lmax)
      throw numeric_error("kle_fit: covariance is not positive semidefinite");
    basis.eigenvalues[j] = std::max(basis.eigenvalues[j], 0.0);
  }

  const double total = basis.eigenvalues.sum();
  max_order = std::min(max_order, m);
  if (max_order < 1) throw usage_error("kle_fit: max_order must be >= 1");
  if (total <= 0.0) {
    basis.n_trunc = 1;
    basis.explained = 1.0;  // degenerate zero field: single (irrelevant) mode
    return basis;
  }
  double cum = 0.0;
  Eigen::Index n_trunc = max_order;
  for (Eigen::Index j = 0; j < max_order; ++j) {
    cum += basis.eigenvalues[j];
    if (cum / total >= threshold) {
      n_trunc = j + 1;
      break;
    }
  }
  basis.n_trunc = n_trunc;
  basis.explained = basis.eigenvalues.head(n_trunc).sum() / total;
  return basis;
}

}  // namespace

KLEBasis kle_fit_covariance(const Matrix& covariance, const Vector& mean, double threshold,
                            Eigen::Index max_order) {
  return decompose(covariance, mean, threshold, max_order);
}

KLEBasis kle_fit_samples(const Matrix& field_rows, double threshold, Eigen::Index max_order) {
  if (field_rows.rows() < 2) throw usage_error("kle_fit: need at least two sample rows");
  const double n = static_cast<double>(field_rows.rows());
  const Vector mean = field_rows.colwise().mean();
  Matrix centered = field_rows.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / n;
  cov = 0.5 * (cov + cov.transpose());  // enforce exact symmetry
  return decompose(cov, mean, threshold, max_order);
}

Matrix kle_project(const KLEBasis& basis, const Matrix& field_rows) {
  if (field_rows.cols() != basis.mean.size())
    throw usage_error("kle_project: row width must match basis dimension");
  const Matrix centered = field_rows.rowwise() - basis.mean.transpose();
  return centered * basis.retained();
}

Matrix kle_reconstruct(const KLEBasis& basis, const Matrix& coeffs) {
  if (coeffs.cols() != basis.n_trunc)
    throw usage_error("kle_reconstruct: coefficient width must equal n_trunc");
  return (coeffs * basis.retained().transpose()).rowwise() + basis.mean.transpose();
}

ReducedInputMatrix standardize(const Matrix& m) {
  if (m.rows() < 2) throw usage_error("standardize: need at least two rows");
  const double n = static_cast<double>(m.rows());
  ReducedInputMatrix out;
  out.data.resize(m.rows(), m.cols());
  out.scalers.resize(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    ColumnScaler& sc = out.scalers[static_cast<std::size_t>(j)];
    sc.mean = m.col(j).mean();
    const double var = (m.col(j).array() - sc.mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
      sc.std = 1.0;
      sc.constant = true;
      out.data.col(j).setZero();
    } else {
      sc.std = sd;
      out.data.col(j) = (m.col(j).array() - sc.mean) / sc.std;
    }
  }
  return out;
}

Matrix apply_scalers(const std::vector<ColumnScaler>& scalers, const Matrix& m) {
  if (static_cast<std::size_t>(m.cols()) != scalers.size())
    throw usage_error("apply_scalers: column count mismatch");
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const ColumnScaler& sc = scalers[static_cast<std::size_t>(j)];
    if (sc.constant) out.col(j).setZero();
    else out.col(j) = (m.col(j).array() - sc.mean) / sc.std;
  }
  return out;
}

}  // namespace bmfmc
