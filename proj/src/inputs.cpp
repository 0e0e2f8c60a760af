#include "bmfmc/inputs.hpp"

#include <cmath>

namespace bmfmc {

ScalarDistribution ScalarDistribution::uniform(double lo, double hi) {
  ScalarDistribution d{Kind::Uniform, lo, hi};
  d.validate();
  return d;
}

ScalarDistribution ScalarDistribution::lognormal(double mu, double sigma2) {
  ScalarDistribution d{Kind::Lognormal, mu, sigma2};
  d.validate();
  return d;
}

ScalarDistribution ScalarDistribution::normal(double mu, double sigma2) {
  ScalarDistribution d{Kind::Normal, mu, sigma2};
  d.validate();
  return d;
}

void ScalarDistribution::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw usage_error("scalar distribution: non-finite parameter");
  if (kind == Kind::Uniform && !(a < b))
    throw usage_error("uniform distribution requires lo < hi");
  if (kind != Kind::Uniform && !(b > 0.0))
    throw usage_error("normal/lognormal distribution requires sigma^2 > 0");
}

void RandomFieldSpec::validate() const {
  const Eigen::Index n = grid.rows();
  if (n < 1) throw usage_error("random field: empty grid");
  if (mean.size() != n || amplitude.size() != n)
    throw usage_error("random field: mean/amplitude length must match grid");
  if (!(length_scale > 0.0)) throw usage_error("random field: length scale must be > 0");
  if ((amplitude.array() < 0.0).any())
    throw usage_error("random field: amplitude must be >= 0 pointwise");
  if (!grid.allFinite() || !mean.allFinite() || !amplitude.allFinite())
    throw usage_error("random field: non-finite spec entry");
}

Matrix RandomFieldSpec::equispaced(Eigen::Index count, double lo, double hi) {
  Matrix g(count, 1);
  if (count == 1) {
    g(0, 0) = lo;
    return g;
  }
  for (Eigen::Index i = 0; i < count; ++i)
    g(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

Eigen::Index BlockSpec::width() const {
  if (is_field()) return std::get<RandomFieldSpec>(spec).n_pts();
  return 1;
}

const BlockLayout& SampleMatrix::block(const std::string& name) const {
  for (const auto& b : layout)
    if (b.name == name) return b;
  throw usage_error("sample matrix has no block named '" + name + "'");
}

Vector sample_scalar(const ScalarDistribution& dist, Eigen::Index n, std::uint64_t seed) {
  dist.validate();
  if (n < 1) throw usage_error("sample_scalar: n must be >= 1");
  RngStream rng(seed);
  Vector out(n);
  switch (dist.kind) {
    case ScalarDistribution::Kind::Uniform:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.uniform(dist.a, dist.b);
      break;
    case ScalarDistribution::Kind::Normal: {
      const double s = std::sqrt(dist.b);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = dist.a + s * rng.normal01();
      break;
    }
    case ScalarDistribution::Kind::Lognormal: {
      const double s = std::sqrt(dist.b);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = std::exp(dist.a + s * rng.normal01());
      break;
    }
  }
  return out;
}

Matrix field_covariance(const RandomFieldSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.n_pts();
  const double inv2l2 = 1.0 / (2.0 * spec.length_scale * spec.length_scale);
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d2 = (spec.grid.row(i) - spec.grid.row(j)).squaredNorm();
      const double v = spec.amplitude[i] * spec.amplitude[j] * std::exp(-d2 * inv2l2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  if (!k.allFinite()) throw numeric_error("field covariance has non-finite entries");
  return k;
}

Eigen::LLT<Matrix> jittered_llt(const Matrix& sym, const std::string& label, double jitter_rel,
                                double* jitter_used) {
  const Eigen::Index n = sym.rows();
  const double scale = sym.trace() / static_cast<double>(n);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    if (jitter_used) *jitter_used = 0.0;
    return llt;
  }
  double rel = jitter_rel;
  while (rel <= 1e-6 * (1.0 + 1e-12)) {
    llt.compute(sym + rel * scale * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = rel * scale;
      return llt;
    }
    rel *= 10.0;
  }
  throw numeric_error("Cholesky factorization of " + label +
                      " failed after jitter escalation to 1e-6 relative");
}

Matrix sample_field(const RandomFieldSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw usage_error("sample_field: n must be >= 1");
  const Eigen::Index m = spec.n_pts();

  Matrix out(n, m);
  if ((spec.amplitude.array() == 0.0).all()) {
    // degenerate field: deterministic mean
    out.rowwise() = spec.mean.transpose();
    return out;
  }

  // unit-amplitude stationary kernel; amplitude is applied after the solve
  RandomFieldSpec unit = spec;
  unit.amplitude.setOnes();
  const Matrix k_unit = field_covariance(unit);
  const Eigen::LLT<Matrix> llt = jittered_llt(k_unit, "field covariance", spec.jitter_rel);
  const Matrix l = llt.matrixL();

  RngStream rng(seed);
  Vector r(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) r[j] = rng.normal01();
    out.row(i) = (spec.mean.array() + spec.amplitude.array() * (l * r).array()).transpose();
  }
  return out;
}

SampleMatrix assemble_samples(const std::vector<BlockSpec>& blocks, Eigen::Index n,
                              std::uint64_t seed) {
  if (blocks.empty()) throw usage_error("assemble_samples: at least one block required");
  if (n < 1) throw usage_error("assemble_samples: n must be >= 1");

  Eigen::Index d = 0;
  for (const auto& b : blocks) d += b.width();

  SampleMatrix sm;
  sm.data.resize(n, d);
  sm.seed = seed;

  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    const std::uint64_t block_seed = fnv1a64(b.name, seed);
    BlockLayout lay{b.name, b.is_field(), offset, b.width()};
    if (b.is_field()) {
      sm.data.middleCols(offset, lay.width) =
          sample_field(std::get<RandomFieldSpec>(b.spec), n, block_seed);
    } else {
      sm.data.col(offset) = sample_scalar(std::get<ScalarDistribution>(b.spec), n, block_seed);
    }
    sm.layout.push_back(lay);
    offset += lay.width;
  }
  return sm;
}

}  // namespace bmfmc
