#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bmfmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid argument, bad configuration, or misuse of an operation.
/// Maps to CLI exit code 2.
class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (factorization breakdown, divergent optimization, ...).
/// Maps to CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required pipeline artifact is missing or stale. Maps to CLI exit code 4.
class artifact_error : public std::runtime_error {
 public:
  explicit artifact_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-fatal diagnostics (variance clamps, correlation clamps). Written to
/// stderr; kept out of artifacts so outputs stay byte-reproducible.
void warn(const std::string& msg);

// ---------------------------------------------------------------------------
// Hashing

/// FNV-1a 64-bit over raw bytes. Stable across platforms and runs; used for
/// seed derivation and artifact content hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Hash rendered as a fixed-width lowercase hex string.
std::string hash_hex(std::uint64_t h);

// ---------------------------------------------------------------------------
// Random numbers
//
// All sampling goes through RngStream so that results are reproducible from
// (seed, stream-name) alone and independent of the C++ standard library's
// distribution implementations. Normals use Box-Muller on 53-bit uniforms.

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  /// Stream derived from a root seed and a label; adding streams with other
  /// labels never perturbs this one.
  RngStream(std::uint64_t root_seed, std::string_view label);

  /// Uniform on [0, 1).
  double uniform01();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal draw.
  double normal01();

  std::uint64_t next_u64();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Summation

/// Streaming pairwise (tree) summation with a fixed reduction shape:
/// the result depends only on the order terms are pushed, and carries
/// O(log n) rounding error instead of O(n).
class PairwiseAccumulator {
 public:
  void add(double x);
  double total() const;
  void reset();

 private:
  std::vector<double> partials_;  // partials_[k] holds a block of 2^k terms
  std::uint64_t count_ = 0;
};

/// Pairwise sum of a contiguous range.
double pairwise_sum(const double* data, std::size_t n);

/// Indices 0..n-1 sorted so that rows of `m` appear in lexicographic order
/// (stable). Used to make mixture sums exactly permutation invariant.
std::vector<Eigen::Index> lexicographic_row_order(const Matrix& m);

/// Trapezoid quadrature on an ordered grid.
double trapezoid(const Vector& grid, const Vector& values);

}  // namespace bmfmc
