#include "bmfmc/gp.hpp"

#include "bmfmc/inputs.hpp"  // jittered_llt

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bmfmc {

namespace {

Vector mean_function(MeanMode mode, const Matrix& z) {
  if (mode == MeanMode::LfPassthrough) {
    if (z.cols() < 1) throw usage_error("lf-passthrough mean requires at least one feature column");
    return z.col(0);
  }
  return Vector::Zero(z.rows());
}

bool has_duplicate_rows(const Matrix& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = i + 1; j < z.rows(); ++j)
      if (z.row(i) == z.row(j)) return true;
  return false;
}

Eigen::Index count_distinct_rows(const Matrix& z) {
  Eigen::Index distinct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j = 0; j < i && !dup; ++j) dup = (z.row(i) == z.row(j));
    if (!dup) ++distinct;
  }
  return distinct;
}

Matrix squared_distances(const Matrix& z_a, const Matrix& z_b) {
  Matrix d2(z_a.rows(), z_b.rows());
  for (Eigen::Index i = 0; i < z_a.rows(); ++i)
    for (Eigen::Index j = 0; j < z_b.rows(); ++j)
      d2(i, j) = (z_a.row(i) - z_b.row(j)).squaredNorm();
  return d2;
}

struct LmlResult {
  double value;
  Vector grad;  // w.r.t. (log ell, log s0^2, log sn^2)
};

LmlResult lml_impl(const KernelParams& p, const Matrix& z, const Vector& y, MeanMode mode,
                   bool want_grad) {
  p.validate();
  const Eigen::Index n = z.rows();
  if (n < 1) throw usage_error("log_marginal_likelihood: need at least one training point");
  if (y.size() != n) throw usage_error("log_marginal_likelihood: Z/Y size mismatch");
  if (p.noise_var == 0.0 && has_duplicate_rows(z))
    throw numeric_error("kernel matrix is singular: duplicate feature rows with zero noise");

  const Matrix d2 = squared_distances(z, z);
  const Matrix k = p.signal_var * (-d2 / (2.0 * p.length_scale * p.length_scale)).array().exp();
  const Matrix a = k + p.noise_var * Matrix::Identity(n, n);
  const Eigen::LLT<Matrix> llt = jittered_llt(a, "GP kernel matrix");

  const Vector r = y - mean_function(mode, z);
  const Vector alpha = llt.solve(r);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  logdet *= 2.0;

  LmlResult res;
  res.value = -0.5 * r.dot(alpha) - 0.5 * logdet -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (want_grad) {
    // d lml / d theta = 0.5 tr((alpha alpha^T - A^{-1}) dA/dtheta)
    const Matrix a_inv = llt.solve(Matrix::Identity(n, n));
    const Matrix w = alpha * alpha.transpose() - a_inv;
    const Matrix dk_dlog_ell = k.cwiseProduct(d2) / (p.length_scale * p.length_scale);
    res.grad.resize(3);
    res.grad[0] = 0.5 * w.cwiseProduct(dk_dlog_ell).sum();
    res.grad[1] = 0.5 * w.cwiseProduct(k).sum();
    res.grad[2] = 0.5 * p.noise_var * w.trace();
  }
  return res;
}

// Backtracking-Armijo BFGS minimizer for the negative log marginal likelihood
// over theta = (log ell, log s0^2, log sn^2), clipped to a generous box.
struct OptResult {
  Vector theta;
  double objective;  // maximized lml
  bool ok = false;
};

OptResult maximize_lml(Vector theta, const Vector& lo, const Vector& hi, const Matrix& z,
                       const Vector& y, MeanMode mode) {
  const auto clip = [&](Vector t) {
    for (Eigen::Index i = 0; i < 3; ++i) t[i] = std::clamp(t[i], lo[i], hi[i]);
    return t;
  };
  const auto eval = [&](const Vector& t, Vector* g) -> double {
    KernelParams p{std::exp(t[0]), std::exp(t[1]), std::exp(t[2])};
    try {
      LmlResult r = lml_impl(p, z, y, mode, g != nullptr);
      if (!std::isfinite(r.value)) return std::numeric_limits<double>::infinity();
      if (g) *g = -r.grad;
      return -r.value;
    } catch (const numeric_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  theta = clip(theta);
  Vector grad(3);
  double f = eval(theta, &grad);
  OptResult out;
  if (!std::isfinite(f)) return out;

  Matrix h_inv = Matrix::Identity(3, 3);
  const int max_iter = 120;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < 1e-9 * std::max(1.0, std::abs(f))) break;
    Vector dir = -(h_inv * grad);
    if (dir.dot(grad) >= 0.0) {  // not a descent direction; reset
      h_inv.setIdentity();
      dir = -grad;
    }
    double step = 1.0;
    Vector theta_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      theta_new = clip(theta + step * dir);
      f_new = eval(theta_new, nullptr);
      if (f_new <= f + 1e-4 * grad.dot(theta_new - theta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new < f)) break;
    Vector grad_new(3);
    const double f_check = eval(theta_new, &grad_new);
    if (!std::isfinite(f_check)) break;
    const Vector s = theta_new - theta;
    const Vector dy = grad_new - grad;
    const double sy = s.dot(dy);
    if (sy > 1e-12 * s.norm() * dy.norm()) {
      const Matrix id = Matrix::Identity(3, 3);
      const Matrix v = id - (s * dy.transpose()) / sy;
      h_inv = v * h_inv * v.transpose() + (s * s.transpose()) / sy;
    }
    theta = theta_new;
    f = f_new;
    grad = grad_new;
    if (s.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  out.theta = theta;
  out.objective = -f;
  out.ok = std::isfinite(f);
  return out;
}

double median_pairwise_distance(const Matrix& z) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(z.rows() * (z.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = i + 1; j < z.rows(); ++j)
      d.push_back((z.row(i) - z.row(j)).norm());
  std::sort(d.begin(), d.end());
  double med = d.empty() ? 1.0 : d[d.size() / 2];
  if (med <= 0.0) {
    double pos = 0.0;
    std::size_t count = 0;
    for (double x : d)
      if (x > 0.0) {
        pos += x;
        ++count;
      }
    med = count ? pos / static_cast<double>(count) : 1.0;
  }
  return med;
}

double median_nearest_neighbor_distance(const Matrix& z) {
  std::vector<double> nn(static_cast<std::size_t>(z.rows()),
                         std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      if (i == j) continue;
      const double d = (z.row(i) - z.row(j)).norm();
      nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], d);
    }
  std::sort(nn.begin(), nn.end());
  return nn[nn.size() / 2];
}

// Mean leave-one-out log predictive density at fixed hyperparameters
// (closed form via the inverse kernel matrix). Used to pick among restart
// solutions: the marginal likelihood alone is unbounded when the posterior
// mean can thread contradictory targets with collapsing noise, while the
// LOO score ranks such fits where they belong.
double loo_log_predictive(const KernelParams& p, const Matrix& z, const Vector& y,
                          MeanMode mode) {
  const Eigen::Index n = z.rows();
  const Matrix k = kernel_eval(p, z, z);
  const Eigen::LLT<Matrix> llt =
      jittered_llt(k + p.noise_var * Matrix::Identity(n, n), "GP kernel matrix");
  const Matrix a_inv = llt.solve(Matrix::Identity(n, n));
  const Vector r = y - mean_function(mode, z);
  const Vector alpha = llt.solve(r);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = 1.0 / a_inv(i, i);
    const double res = alpha[i] * v;
    acc += -0.5 * (std::log(2.0 * std::numbers::pi * v) + res * res / v);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

void KernelParams::validate() const {
  if (!(length_scale > 0.0) || !(signal_var > 0.0) || !(noise_var >= 0.0) ||
      !std::isfinite(length_scale) || !std::isfinite(signal_var) || !std::isfinite(noise_var))
    throw usage_error("kernel parameters: require ell > 0, sigma_0^2 > 0, sigma_n^2 >= 0");
}

Matrix kernel_eval(const KernelParams& params, const Matrix& z_a, const Matrix& z_b) {
  params.validate();
  if (z_a.cols() != z_b.cols()) throw usage_error("kernel_eval: feature dimension mismatch");
  const Matrix d2 = squared_distances(z_a, z_b);
  return params.signal_var *
         (-d2 / (2.0 * params.length_scale * params.length_scale)).array().exp();
}

double log_marginal_likelihood(const KernelParams& params, const Matrix& z_train,
                               const Vector& y_train, MeanMode mean_mode, Vector* grad_log) {
  LmlResult r = lml_impl(params, z_train, y_train, mean_mode, grad_log != nullptr);
  if (grad_log) *grad_log = r.grad;
  return r.value;
}

GaussianProcessModel gp_make(const KernelParams& params, const Matrix& z_train,
                             const Vector& y_train, MeanMode mean_mode) {
  params.validate();
  if (z_train.rows() != y_train.size()) throw usage_error("gp_make: Z/Y size mismatch");
  if (z_train.rows() < 1) throw usage_error("gp_make: empty training set");
  if (params.noise_var == 0.0 && has_duplicate_rows(z_train))
    throw numeric_error("kernel matrix is singular: duplicate feature rows with zero noise");

  GaussianProcessModel m;
  m.params = params;
  m.mean_mode = mean_mode;
  m.z_train = z_train;
  m.y_train = y_train;
  const Eigen::Index n = z_train.rows();
  const Matrix k = kernel_eval(params, z_train, z_train);
  const Eigen::LLT<Matrix> llt =
      jittered_llt(k + params.noise_var * Matrix::Identity(n, n), "GP kernel matrix");
  m.chol_l = llt.matrixL();
  const Vector r = y_train - mean_function(mean_mode, z_train);
  m.alpha = llt.solve(r);
  m.log_marginal = log_marginal_likelihood(params, z_train, y_train, mean_mode);
  return m;
}

GaussianProcessModel gp_fit(const Matrix& z_train, const Vector& y_train, MeanMode mean_mode,
                            int restarts, std::uint64_t seed) {
  const Eigen::Index n = z_train.rows();
  if (n != y_train.size()) throw usage_error("gp_fit: Z/Y size mismatch");
  if (count_distinct_rows(z_train) < 2)
    throw usage_error("gp_fit: need at least two distinct training rows");
  if (restarts < 1) throw usage_error("gp_fit: restarts must be >= 1");

  const Vector residual = y_train - mean_function(mean_mode, z_train);
  const double res_mean = residual.mean();
  const double res_var = (residual.array() - res_mean).square().sum() / static_cast<double>(n);
  const double y_mean = y_train.mean();
  const double y_var = (y_train.array() - y_mean).square().sum() / static_cast<double>(n);

  // Exactly degenerate data: the conditional is a point mass. A Dirac model
  // keeps the downstream density estimate honest instead of letting the
  // marginal likelihood diverge.
  if (res_var <= 1e-13 * (y_var + res_mean * res_mean) + 1e-300) {
    GaussianProcessModel m;
    m.mean_mode = mean_mode;
    m.z_train = z_train;
    m.y_train = y_train;
    m.deterministic = true;
    m.residual_shift = res_mean;
    m.params = KernelParams{1.0, 1.0, 0.0};
    m.log_marginal = std::numeric_limits<double>::infinity();
    return m;
  }

  const double med = median_pairwise_distance(z_train);
  // the GP models the residual, so its variance sets the hyperparameter scale
  const double vy = std::max(res_var, 1e-300);

  // Below a couple of nearest-neighbor spacings the marginal likelihood is
  // unbounded: the posterior mean can thread every target exactly while the
  // noise collapses, and the kernel degenerates into a second diagonal term.
  // Bounding ell at the resolvable scale keeps the noise estimate meaningful.
  const double ell_floor =
      std::max(1e-4 * med, 2.0 * median_nearest_neighbor_distance(z_train));

  Vector lo(3), hi(3);
  lo << std::log(ell_floor), std::log(1e-10 * vy), std::log(1e-12 * vy);
  hi << std::log(1e4 * med), std::log(1e4 * vy), std::log(1e2 * vy);

  RngStream rng(seed, "gp-fit-restarts");
  OptResult best;
  double best_loo = -std::numeric_limits<double>::infinity();
  int best_restart = -1;
  std::ostringstream diag;
  for (int rs = 0; rs < restarts; ++rs) {
    Vector theta0(3);
    if (rs == 0) {
      // deterministic median-heuristic start; the remaining restarts explore
      theta0 << std::log(med), std::log(vy), std::log(0.5 * vy);
    } else {
      theta0[0] = rng.uniform(std::log(1e-2 * med), std::log(1e2 * med));
      theta0[1] = rng.uniform(std::log(1e-2 * vy), std::log(1e2 * vy));
      theta0[2] = rng.uniform(std::log(1e-6 * vy), std::log(vy));
    }
    OptResult r = maximize_lml(theta0, lo, hi, z_train, y_train, mean_mode);
    if (!r.ok) {
      diag << "restart " << rs << ": failed; ";
      continue;
    }
    double loo;
    try {
      loo = loo_log_predictive(KernelParams{std::exp(r.theta[0]), std::exp(r.theta[1]),
                                            std::exp(r.theta[2])},
                               z_train, y_train, mean_mode);
    } catch (const numeric_error&) {
      diag << "restart " << rs << ": loo failed; ";
      continue;
    }
    if (best_restart < 0 || loo > best_loo) {
      best = r;
      best_loo = loo;
      best_restart = rs;
    }
  }
  if (best_restart < 0)
    throw numeric_error("gp_fit: all restarts failed (" + diag.str() + ")");

  KernelParams params{std::exp(best.theta[0]), std::exp(best.theta[1]), std::exp(best.theta[2])};
  return gp_make(params, z_train, y_train, mean_mode);
}

GpPredictions gp_predict(const GaussianProcessModel& model, const Matrix& z_test) {
  const Eigen::Index p = z_test.rows();
  GpPredictions out;
  if (model.deterministic) {
    out.mean = mean_function(model.mean_mode, z_test).array() + model.residual_shift;
    out.variance = Vector::Zero(p);
    out.noise_var = 0.0;
    return out;
  }
  if (z_test.cols() != model.feature_dim())
    throw usage_error("gp_predict: feature dimension mismatch");

  const Matrix k_star = kernel_eval(model.params, model.z_train, z_test);  // n x p
  out.mean = mean_function(model.mean_mode, z_test) + k_star.transpose() * model.alpha;
  const Matrix w = model.chol_l.triangularView<Eigen::Lower>().solve(k_star);
  out.variance = (model.params.signal_var - w.colwise().squaredNorm().array()).matrix();
  Eigen::Index clamped = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    if (out.variance[i] < 0.0) {
      out.variance[i] = 0.0;
      ++clamped;
    }
  if (clamped > 0)
    warn("gp_predict: clamped " + std::to_string(clamped) + " negative predictive variances to 0");
  out.noise_var = model.params.noise_var;
  return out;
}

Matrix gp_posterior_cov(const GaussianProcessModel& model, const Matrix& z_a, const Matrix& z_b) {
  if (model.deterministic) return Matrix::Zero(z_a.rows(), z_b.rows());
  if (z_a.cols() != model.feature_dim() || z_b.cols() != model.feature_dim())
    throw usage_error("gp_posterior_cov: feature dimension mismatch");
  const Matrix ka = kernel_eval(model.params, model.z_train, z_a);
  const Matrix kb = kernel_eval(model.params, model.z_train, z_b);
  const Matrix wa = model.chol_l.triangularView<Eigen::Lower>().solve(ka);
  const Matrix wb = model.chol_l.triangularView<Eigen::Lower>().solve(kb);
  return kernel_eval(model.params, z_a, z_b) - wa.transpose() * wb;
}

}  // namespace bmfmc
