#include "bmfmc/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>

namespace bmfmc {

void warn(const std::string& msg) { std::cerr << "[bmfmc] warning: " << msg << "\n"; }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

// SplitMix64: tiny, well-mixed generator with full 64-bit state. Chosen over
// std::mt19937_64 plus std::normal_distribution because the standard leaves
// distribution algorithms implementation-defined.
inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : state_(seed) {
  // decorrelate trivially related seeds
  for (int i = 0; i < 4; ++i) (void)splitmix64(state_);
}

RngStream::RngStream(std::uint64_t root_seed, std::string_view label)
    : RngStream(fnv1a64(label, root_seed ^ 0x5bf03635f0935ad1ull)) {}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RngStream::normal01() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 shifted into (0,1] so log stays finite
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

void PairwiseAccumulator::add(double x) {
  ++count_;
  // carry-propagate: merge equal-size blocks, like binary increment
  std::uint64_t c = count_;
  std::size_t k = 0;
  while ((c & 1u) == 0u) {
    x += partials_[k];
    partials_[k] = 0.0;
    ++k;
    c >>= 1;
  }
  if (k == partials_.size()) partials_.push_back(x);
  else partials_[k] = x;
}

double PairwiseAccumulator::total() const {
  double s = 0.0;
  for (double p : partials_) s += p;
  return s;
}

void PairwiseAccumulator::reset() {
  partials_.clear();
  count_ = 0;
}

double pairwise_sum(const double* data, std::size_t n) {
  PairwiseAccumulator acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(data[i]);
  return acc.total();
}

std::vector<Eigen::Index> lexicographic_row_order(const Matrix& m) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(a, j) < m(b, j)) return true;
      if (m(a, j) > m(b, j)) return false;
    }
    return false;
  });
  return idx;
}

double trapezoid(const Vector& grid, const Vector& values) {
  if (grid.size() != values.size()) throw usage_error("trapezoid: grid/value size mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
    s += 0.5 * (grid[i + 1] - grid[i]) * (values[i] + values[i + 1]);
  return s;
}

}  // namespace bmfmc
