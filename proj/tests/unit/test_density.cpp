#include "bmfmc/density.hpp"
#include "bmfmc/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace bmfmc;

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double y, double m, double v) {
  const double u = (y - m) / std::sqrt(v);
  return kInvSqrt2Pi / std::sqrt(v) * std::exp(-0.5 * u * u);
}

double binormal_diag(double y, double m1, double m2, double s11, double s22, double s12) {
  const double det = s11 * s22 - s12 * s12;
  const double d1 = y - m1, d2 = y - m2;
  const double q = (d1 * d1 * s22 - 2.0 * d1 * d2 * s12 + d2 * d2 * s11) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

// near-deterministic latent function with explicit observation noise
GaussianProcessModel point_model(double noise_var) {
  Matrix z(2, 1);
  z << -5.0, 5.0;
  Vector y(2);
  y << -5.0, 5.0;
  return gp_make(KernelParams{1.0, 1e-30, noise_var}, z, y, MeanMode::LfPassthrough);
}

GaussianProcessModel smooth_model(Eigen::Index n_train, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix z(n_train, 1);
  Vector y(n_train);
  for (Eigen::Index i = 0; i < n_train; ++i) {
    z(i, 0) = rng.uniform(-3.0, 3.0);
    y[i] = std::sin(z(i, 0)) + 0.3 * rng.normal01();
  }
  return gp_make(KernelParams{1.0, 0.8, 0.09}, z, y, MeanMode::Zero);
}

}  // namespace

TEST_CASE("a single sharp component reproduces the component density") {
  const double s = 0.04;  // sigma_n^2
  const GaussianProcessModel m = point_model(s);
  Matrix z_star(1, 1);
  z_star << 1.3;
  const SupportGrid grid = SupportGrid::equispaced(-1.0, 4.0, 101);
  const Vector dens = density_mean(m, z_star, grid);
  for (Eigen::Index l = 0; l < grid.size(); ++l)
    CHECK(std::abs(dens[l] - normal_pdf(grid.points[l], 1.3, s)) <= 1e-12);
}

TEST_CASE("two tight components produce a symmetric bimodal density") {
  const GaussianProcessModel m = point_model(0.01);
  Matrix z_star(2, 1);
  z_star << -1.0, 1.0;
  const SupportGrid grid = SupportGrid::equispaced(-2.0, 2.0, 201);
  const Vector dens = density_mean(m, z_star, grid);

  Eigen::Index l_neg = 0, l_pos = 0;
  (grid.points.array() + 1.0).abs().minCoeff(&l_neg);
  (grid.points.array() - 1.0).abs().minCoeff(&l_pos);
  const Eigen::Index arg_neg =
      std::distance(dens.data(), std::max_element(dens.data(), dens.data() + 100));
  const Eigen::Index arg_pos =
      std::distance(dens.data(), std::max_element(dens.data() + 101, dens.data() + 201));
  CHECK(arg_neg == l_neg);
  CHECK(arg_pos == l_pos);
  CHECK(dens[l_neg] == doctest::Approx(dens[l_pos]).epsilon(1e-9));
}

TEST_CASE("density mean matches a brute-force mixture oracle") {
  const GaussianProcessModel m = smooth_model(20, 50);
  RngStream rng(51);
  const Eigen::Index n = 1000;
  Matrix z_star(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) z_star(i, 0) = rng.uniform(-3.0, 3.0);
  const SupportGrid grid = SupportGrid::equispaced(-4.0, 4.0, 120);
  const Vector dens = density_mean(m, z_star, grid);

  // independent summation order: plain loop over rows as given
  const GpPredictions pred = gp_predict(m, z_star);
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      acc += normal_pdf(grid.points[l], pred.mean[j], pred.variance[j] + pred.noise_var);
    CHECK(std::abs(dens[l] - acc / static_cast<double>(n)) <= 1e-12);
  }
}

TEST_CASE("density mean is exactly invariant under row permutation") {
  const GaussianProcessModel m = smooth_model(15, 60);
  RngStream rng(61);
  const Eigen::Index n = 257;
  Matrix z_star(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) z_star(i, 0) = rng.uniform(-3.0, 3.0);
  const SupportGrid grid = SupportGrid::equispaced(-4.0, 4.0, 64);
  const Vector a = density_mean(m, z_star, grid);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(99));
  Matrix shuffled(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = z_star.row(perm[static_cast<std::size_t>(i)]);
  const Vector b = density_mean(m, shuffled, grid);
  CHECK(a == b);  // bitwise
}

TEST_CASE("widened support integrates to one") {
  const GaussianProcessModel m = smooth_model(25, 70);
  RngStream rng(71);
  Matrix z_star(400, 1);
  for (Eigen::Index i = 0; i < 400; ++i) z_star(i, 0) = rng.normal01();
  const GpPredictions pred = gp_predict(m, z_star);
  Vector pooled = pred.mean;
  const SupportGrid grid = SupportGrid::from_values_std(pooled, 200, 8.0);
  const Vector dens = density_mean(m, z_star, grid);
  const double integral = trapezoid(grid.points, dens);
  CHECK(integral >= 0.999);
  CHECK(integral <= 1.001);
}

TEST_CASE("fully determined models give zero density variance") {
  const GaussianProcessModel m = point_model(0.09);
  RngStream rng(80);
  Matrix z_star(40, 1);
  for (Eigen::Index i = 0; i < 40; ++i) z_star(i, 0) = rng.uniform(-2.0, 2.0);
  const SupportGrid grid = SupportGrid::equispaced(-3.0, 3.0, 80);
  const Vector mean = density_mean(m, z_star, grid);
  const Vector var = density_variance(m, z_star, grid, mean);
  CHECK(var.maxCoeff() <= 1e-10);
}

TEST_CASE("two-component variance matches the closed-form bivariate oracle") {
  const GaussianProcessModel m = smooth_model(8, 90);
  Matrix z_v(2, 1);
  z_v << -0.7, 1.2;
  const SupportGrid grid = SupportGrid::equispaced(-3.0, 3.0, 50);
  const Vector mean = density_mean(m, z_v, grid);
  const Vector var = density_variance(m, z_v, grid, mean);

  const GpPredictions pred = gp_predict(m, z_v);
  const Matrix cov = gp_posterior_cov(m, z_v, z_v);
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    const double y = grid.points[l];
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        acc += binormal_diag(y, pred.mean[i], pred.mean[j],
                             pred.variance[i] + pred.noise_var,
                             pred.variance[j] + pred.noise_var, cov(i, j));
    const double expected = std::max(acc / 4.0 - mean[l] * mean[l], 0.0);
    CHECK(std::abs(var[l] - expected) <= 1e-12);
  }
}

TEST_CASE("a perfectly correlated pair behaves as one effective component") {
  const GaussianProcessModel m = smooth_model(6, 91);
  Matrix z_v(2, 1);
  z_v << 0.4, 0.4;  // identical rows: k_D = v_D, equal means
  const SupportGrid grid = SupportGrid::equispaced(-3.0, 3.0, 60);
  const Vector mean = density_mean(m, z_v, grid);
  const Vector var = density_variance(m, z_v, grid, mean);

  const GpPredictions pred = gp_predict(m, z_v);
  const double v = pred.variance[0] + pred.noise_var;
  const double k = pred.variance[0];  // latent covariance of the pair
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    const double y = grid.points[l];
    const double e_nn = binormal_diag(y, pred.mean[0], pred.mean[0], v, v, k);
    const double expected = std::max(e_nn - mean[l] * mean[l], 0.0);
    CHECK(std::abs(var[l] - expected) <= 1e-12);
  }
}

TEST_CASE("density variance is nonnegative after clamping with a tame floor") {
  const GaussianProcessModel m = smooth_model(12, 92);
  RngStream rng(93);
  Matrix z_star(60, 1);
  for (Eigen::Index i = 0; i < 60; ++i) z_star(i, 0) = rng.uniform(-3.0, 3.0);
  const SupportGrid grid = SupportGrid::equispaced(-4.0, 4.0, 70);
  const Vector mean = density_mean(m, z_star, grid);
  double preclamp = 0.0;
  const Vector var = density_variance(m, z_star, grid, mean, &preclamp);
  CHECK(var.minCoeff() >= 0.0);
  CHECK(preclamp >= -1e-8);
}

TEST_CASE("estimator matches the literal nested-loop transcription") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GaussianProcessModel m = smooth_model(10, 300 + seed);
    RngStream rng(400 + seed);
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(seed);
    Matrix z_star(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) z_star(i, 0) = rng.uniform(-3.0, 3.0);
    const SupportGrid grid = SupportGrid::equispaced(-4.0, 4.0, 64);

    const auto [oracle_mean, oracle_var] = algorithm3_oracle(m, z_star, grid);
    const Vector mean = density_mean(m, z_star, grid);
    const Vector var = density_variance(m, z_star, grid, mean);
    CHECK((mean - oracle_mean).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index l = 0; l < grid.size(); ++l)
      CHECK(std::abs(var[l] - std::max(oracle_var[l], 0.0)) <= 1e-10);
  }
}

TEST_CASE("variance subsampling is a deterministic stride") {
  const auto idx = variance_subsample_indices(10, 4);
  CHECK(idx == std::vector<Eigen::Index>{0, 2, 5, 7});
  const auto all = variance_subsample_indices(5, 5);
  CHECK(all == std::vector<Eigen::Index>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(variance_subsample_indices(3, 4), usage_error);
}

TEST_CASE("support grid validation") {
  CHECK_THROWS_AS(SupportGrid::equispaced(1.0, 1.0, 10), usage_error);
  SupportGrid g;
  g.points.resize(3);
  g.points << 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(g.validate(), usage_error);
}
