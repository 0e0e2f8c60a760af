#include "bmfmc/inputs.hpp"
#include "bmfmc/io.hpp"

#include <doctest.h>

#include <cmath>

using namespace bmfmc;

namespace {

RandomFieldSpec inflow_spec(Eigen::Index n_pts) {
  // parabolic channel profile with 12.5% relative amplitude
  const double h_chan = 0.41, u_max = 1.5;
  RandomFieldSpec spec;
  spec.grid = RandomFieldSpec::equispaced(n_pts, 0.0, h_chan);
  spec.mean.resize(n_pts);
  for (Eigen::Index i = 0; i < n_pts; ++i) {
    const double y = spec.grid(i, 0);
    spec.mean[i] = u_max * 4.0 * y * (h_chan - y) / (h_chan * h_chan);
  }
  spec.amplitude = 0.125 * spec.mean;
  spec.length_scale = 0.08 * h_chan;
  return spec;
}

}  // namespace

TEST_CASE("uniform sample lies in [lo, hi)") {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const Vector v = sample_scalar(ScalarDistribution::uniform(0.0, 1.0), 1, seed);
    CHECK(v[0] >= 0.0);
    CHECK(v[0] < 1.0);
  }
}

TEST_CASE("lognormal matches the 600 +- 7% parameterization") {
  const auto dist = ScalarDistribution::lognormal(6.392, 0.00498);
  const Vector v = sample_scalar(dist, 1000000, 20240601);
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
  CHECK(mean > 594.0);
  CHECK(mean < 606.0);
  CHECK(sd / mean > 0.065);
  CHECK(sd / mean < 0.076);
  CHECK(v.minCoeff() > 0.0);
}

TEST_CASE("standard normal sample mean obeys the CLT bound") {
  const Vector v = sample_scalar(ScalarDistribution::normal(0.0, 1.0), 1000000, 77);
  CHECK(std::abs(v.mean()) < 4.0 / std::sqrt(1e6));
}

TEST_CASE("invalid scalar parameters raise configuration errors") {
  CHECK_THROWS_AS(ScalarDistribution::uniform(1.0, 1.0), usage_error);
  CHECK_THROWS_AS(ScalarDistribution::normal(0.0, 0.0), usage_error);
  CHECK_THROWS_AS(ScalarDistribution::lognormal(0.0, -1.0), usage_error);
  CHECK_THROWS_AS(sample_scalar(ScalarDistribution::uniform(0.0, 1.0), 0, 1), usage_error);
}

TEST_CASE("field covariance closed forms") {
  SUBCASE("single point, unit amplitude") {
    RandomFieldSpec spec;
    spec.grid = RandomFieldSpec::equispaced(1, 0.0, 0.0);
    spec.mean = Vector::Zero(1);
    spec.amplitude = Vector::Ones(1);
    spec.length_scale = 1.0;
    const Matrix k = field_covariance(spec);
    CHECK(k.rows() == 1);
    CHECK(k(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("coincident points give a constant block") {
    RandomFieldSpec spec;
    spec.grid = Matrix::Zero(2, 1);
    spec.mean = Vector::Zero(2);
    spec.amplitude = Vector::Constant(2, 3.0);
    spec.length_scale = 0.5;
    const Matrix k = field_covariance(spec);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) CHECK(k(i, j) == doctest::Approx(9.0));
  }
  SUBCASE("length scale equal to spacing gives exp(-1/2) off-diagonal") {
    RandomFieldSpec spec;
    spec.grid = RandomFieldSpec::equispaced(3, 0.0, 2.0);  // spacing 1
    spec.mean = Vector::Zero(3);
    spec.amplitude = Vector::Ones(3);
    spec.length_scale = 1.0;
    const Matrix k = field_covariance(spec);
    CHECK(k(0, 1) / k(0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(k(0, 2) / k(0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  }
}

TEST_CASE("field covariance is symmetric with nonnegative spectrum") {
  const RandomFieldSpec spec = inflow_spec(40);
  const Matrix k = field_covariance(spec);
  CHECK(k == k.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST_CASE("zero amplitude reproduces the mean exactly") {
  RandomFieldSpec spec = inflow_spec(25);
  spec.amplitude.setZero();
  const Matrix rows = sample_field(spec, 8, 5);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    CHECK((rows.row(i).transpose() - spec.mean).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("field sampler converges to the target covariance and mean") {
  RandomFieldSpec spec = inflow_spec(15);
  const Eigen::Index n = 10000;
  const Matrix rows = sample_field(spec, n, 99);
  const Matrix k_target = field_covariance(spec);

  const Vector emp_mean = rows.colwise().mean();
  for (Eigen::Index p = 0; p < spec.n_pts(); ++p)
    CHECK(std::abs(emp_mean[p] - spec.mean[p]) <=
          5.0 * spec.amplitude[p] / std::sqrt(static_cast<double>(n)) + 1e-12);

  Matrix centered = rows.rowwise() - emp_mean.transpose();
  const Matrix emp_cov = (centered.transpose() * centered) / static_cast<double>(n);
  const double bound = 5.0 * k_target.maxCoeff() * std::sqrt(2.0 / static_cast<double>(n));
  CHECK((emp_cov - k_target).cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("inflow realizations stay mostly within 25% of the mean") {
  const RandomFieldSpec spec = inflow_spec(30);
  const Eigen::Index n = 4000;
  const Matrix rows = sample_field(spec, n, 2024);
  for (Eigen::Index p = 2; p < spec.n_pts() - 2; ++p) {
    Eigen::Index inside = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(rows(i, p) - spec.mean[p]) <= 0.25 * spec.mean[p]) ++inside;
    const double frac = static_cast<double>(inside) / static_cast<double>(n);
    CHECK(frac > 0.935);  // 2-sigma band holds ~95.4%
  }
}

TEST_CASE("assemble_samples layouts") {
  SUBCASE("one uniform block") {
    const SampleMatrix sm =
        assemble_samples({{"u", ScalarDistribution::uniform(0.0, 1.0)}}, 5, 1);
    CHECK(sm.data.rows() == 5);
    CHECK(sm.data.cols() == 1);
  }
  SUBCASE("cylinder-style layout reaches d=203") {
    std::vector<BlockSpec> blocks;
    blocks.push_back({"inflow", inflow_spec(200)});
    blocks.push_back({"viscosity", ScalarDistribution::uniform(9.5e-4, 1.5e-3)});
    blocks.push_back({"radius", ScalarDistribution::uniform(0.035, 0.07)});
    blocks.push_back({"position", ScalarDistribution::uniform(0.16, 0.24)});
    const SampleMatrix sm = assemble_samples(blocks, 3, 7);
    CHECK(sm.dim() == 203);
    CHECK(sm.block("inflow").width == 200);
  }
  SUBCASE("bending-wall layout reaches d=201") {
    std::vector<BlockSpec> blocks;
    blocks.push_back({"inflow", inflow_spec(200)});
    blocks.push_back({"youngs", ScalarDistribution::lognormal(6.392, 0.00498)});
    const SampleMatrix sm = assemble_samples(blocks, 3, 7);
    CHECK(sm.dim() == 201);
  }
}

TEST_CASE("sampling is deterministic and blocks are stream-independent") {
  std::vector<BlockSpec> two{{"a", ScalarDistribution::normal(0.0, 1.0)},
                             {"b", ScalarDistribution::uniform(0.0, 1.0)}};
  std::vector<BlockSpec> three = two;
  three.push_back({"c", ScalarDistribution::normal(1.0, 2.0)});

  const SampleMatrix s1 = assemble_samples(two, 64, 11);
  const SampleMatrix s2 = assemble_samples(two, 64, 11);
  CHECK(s1.data == s2.data);

  // appending a block must not perturb existing columns
  const SampleMatrix s3 = assemble_samples(three, 64, 11);
  CHECK(s3.data.leftCols(2) == s1.data);
}

TEST_CASE("sample matrix csv headers carry block kind, name and index") {
  std::vector<BlockSpec> blocks{{"r", ScalarDistribution::uniform(0.0, 1.0)}};
  RandomFieldSpec field;
  field.grid = RandomFieldSpec::equispaced(3, 0.0, 1.0);
  field.mean = Vector::Zero(3);
  field.amplitude = Vector::Ones(3);
  field.length_scale = 0.5;
  blocks.push_back({"inflow", field});
  const SampleMatrix sm = assemble_samples(blocks, 4, 2);

  // the csv writer prefixes every column with <kind>:<name>:<index>
  const auto headers = sample_headers(sm);
  REQUIRE(headers.size() == 4);
  CHECK(headers[0] == "uncorrelated:r:0");
  CHECK(headers[1] == "field:inflow:0");
  CHECK(headers[3] == "field:inflow:2");
}
