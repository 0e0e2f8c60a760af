#include "bmfmc/harness.hpp"

#include "bmfmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bmfmc {

namespace {

double knob(const nlohmann::json& knobs, const std::string& key, double fallback) {
  if (knobs.contains(key)) return knobs.at(key).get<double>();
  return fallback;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

SyntheticFamily make_family(const std::string& name, const nlohmann::json& knobs) {
  SyntheticFamily fam;
  fam.name = name;

  if (name == "identical") {
    fam.dim = 3;
    fam.dependency = 1.0;
    auto g = [](const Vector& x) { return x[0] + 0.4 * std::sin(2.0 * x[1]) + 0.2 * x[2]; };
    fam.hf_fn = g;
    fam.lf_fn = g;
  } else if (name == "noisy-linear") {
    fam.dim = 3;
    const double amp = knob(knobs, "amplitude", 0.15);
    const double dep = knob(knobs, "dependency", 0.0);
    fam.dependency = dep;
    auto lf = [](const Vector& x) { return x[0] + 0.5 * x[1]; };
    fam.lf_fn = lf;
    // deterministic high-frequency term; looks like noise through y_LF alone
    fam.hf_fn = [lf, amp, dep](const Vector& x) {
      return lf(x) + (1.0 - dep) * amp * std::sin(9.0 * x[0] + 7.0 * x[1] + 5.0 * x[2]);
    };
    fam.hidden_dims = {2};
  } else if (name == "hidden-bimodal") {
    fam.dim = 3;
    const double amp = knob(knobs, "amplitude", 0.6);
    const double dep = knob(knobs, "dependency", 0.0);
    fam.dependency = dep;
    const double c1 = knob(knobs, "c1", 0.6);
    const double c2 = knob(knobs, "c2", 0.35);
    // lf_skew > 0 pushes the driving coordinate through (exp(s x) - 1)/s,
    // giving the LF output a sharp shoulder and a heavy tail
    const double skew = knob(knobs, "lf_skew", 0.7);
    auto lf = [c1, c2, skew](const Vector& x) {
      const double g = skew > 0.0 ? (std::exp(skew * x[0]) - 1.0) / skew : x[0];
      return g + c1 * x[1] + c2 * x[2];
    };
    fam.lf_fn = lf;
    // sign discrepancy on x0: p(y_HF | y_LF) is a two-point mixture, but the
    // discrepancy becomes deterministic once x0 is an explicit feature
    fam.hf_fn = [lf, amp, dep](const Vector& x) {
      return lf(x) + (1.0 - dep) * amp * sign(x[0]);
    };
    fam.hidden_dims = {0};
  } else if (name == "indep") {
    fam.dim = 3;
    const double dep = knob(knobs, "dependency", 0.0);
    fam.dependency = dep;
    auto s = [](const Vector& x) { return x[0] + 0.6 * x[1]; };
    fam.hf_fn = s;
    // blends toward a pure-noise coordinate the HF map never sees
    fam.lf_fn = [s, dep](const Vector& x) { return dep * s(x) + (1.0 - dep) * 1.2 * x[2]; };
    fam.hidden_dims = {0, 1};
  } else if (name == "kle-field") {
    const Eigen::Index n_field = static_cast<Eigen::Index>(knob(knobs, "n_field", 50));
    const Eigen::Index n_scalar = static_cast<Eigen::Index>(knob(knobs, "n_scalar", 1));
    if (n_field < 4 || n_scalar < 0) throw usage_error("kle-field: invalid block sizes");
    fam.dim = n_field + n_scalar;
    fam.field_width = n_field;
    const double amp = knob(knobs, "amplitude", 0.4);
    // smooth low-order weight and a higher-order one; their field projections
    // track the leading KLE coefficients
    Vector w_low(n_field), w_high(n_field);
    for (Eigen::Index i = 0; i < n_field; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n_field - 1);
      w_low[i] = std::sin(std::numbers::pi * t);
      w_high[i] = std::sin(3.0 * std::numbers::pi * t);
    }
    w_low /= static_cast<double>(n_field);
    w_high /= static_cast<double>(n_field);
    auto lf = [w_low, n_field, n_scalar](const Vector& x) {
      double v = 4.0 * w_low.dot(x.head(w_low.size()));
      if (n_scalar > 0) v += 0.5 * x[n_field];
      return v;
    };
    fam.lf_fn = lf;
    fam.hf_fn = [lf, w_high, amp](const Vector& x) {
      return lf(x) + amp * std::tanh(6.0 * w_high.dot(x.head(w_high.size())));
    };
  } else {
    throw usage_error("unknown synthetic family '" + name + "'");
  }

  if (fam.dependency >= 1.0) fam.lf_fn = fam.hf_fn;  // exact identity at full dependency
  return fam;
}

std::vector<BlockSpec> default_blocks(const SyntheticFamily& family) {
  std::vector<BlockSpec> blocks;
  if (family.field_width > 0) {
    const Eigen::Index n_field = family.field_width;
    const Eigen::Index n_scalar = family.dim - n_field;
    RandomFieldSpec field;
    field.grid = RandomFieldSpec::equispaced(n_field, 0.0, 1.0);
    field.mean = Vector::Zero(n_field);
    field.amplitude = Vector::Ones(n_field);
    field.length_scale = 0.2;
    blocks.push_back({"field", field});
    for (Eigen::Index i = 0; i < n_scalar; ++i)
      blocks.push_back({"s" + std::to_string(i), ScalarDistribution::normal(0.0, 1.0)});
  } else {
    for (Eigen::Index i = 0; i < family.dim; ++i)
      blocks.push_back({"x" + std::to_string(i), ScalarDistribution::normal(0.0, 1.0)});
  }
  return blocks;
}

Vector harness_evaluate(const SyntheticFamily& family, Fidelity which, const Matrix& x) {
  if (x.cols() != family.dim)
    throw usage_error("harness_evaluate: input dimension " + std::to_string(x.cols()) +
                      " does not match family dimension " + std::to_string(family.dim));
  const auto& fn = (which == Fidelity::HF) ? family.hf_fn : family.lf_fn;
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = fn(x.row(i).transpose());
  if (which == Fidelity::HF) family.hf_budget->fetch_add(static_cast<long>(x.rows()));
  return out;
}

Vector reference_density(const SyntheticFamily& family, const std::vector<BlockSpec>& blocks,
                         Eigen::Index n_ref, std::uint64_t seed, const SupportGrid& support) {
  if (n_ref < 2) throw usage_error("reference_density: n_ref must be >= 2");
  const SampleMatrix samples = assemble_samples(blocks, n_ref, seed);
  if (samples.dim() != family.dim)
    throw usage_error("reference_density: block layout does not match family dimension");
  // ground-truth diagnostic; deliberately not counted against the HF budget
  Vector y(samples.n_samples());
  for (Eigen::Index i = 0; i < samples.n_samples(); ++i)
    y[i] = family.hf_fn(samples.data.row(i).transpose());
  const KDEEstimate kde = kde_fit(y, BandwidthMode::Silverman);
  return kde.evaluate(support.points);
}

std::pair<Vector, Vector> algorithm3_oracle(const GaussianProcessModel& model,
                                            const Matrix& z_star, const SupportGrid& support) {
  const Eigen::Index n = z_star.rows();
  if (n > 100) throw usage_error("algorithm3_oracle: limited to N <= 100 (quadratic cost)");
  if (n < 1) throw usage_error("algorithm3_oracle: empty test set");
  support.validate();

  const GpPredictions pred = gp_predict(model, z_star);
  const Vector& g = support.points;
  const Eigen::Index s = g.size();
  const double sn2 = pred.noise_var;
  // same per-component grid rule as the estimator; what this oracle pins down
  // is the plain-loop accumulation structure and normalization
  const detail::GridComponentEvaluator eval(g);

  Vector p_mean = Vector::Zero(s);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = pred.variance[j] + sn2;
    for (Eigen::Index l = 0; l < s; ++l) p_mean[l] += eval.value(l, pred.mean[j], v);
  }
  p_mean /= static_cast<double>(n);

  const Matrix k_d = gp_posterior_cov(model, z_star, z_star);
  Vector p_var = Vector::Zero(s);
  long h = 0;  // accumulated-term counter
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v1 = pred.variance[j] + sn2;
      const double v2 = pred.variance[i] + sn2;
      const double m1 = pred.mean[j];
      const double m2 = pred.mean[i];
      if (v1 <= 0.0 || v2 <= 0.0) {
        for (Eigen::Index l = 0; l < s; ++l)
          p_var[l] += eval.value(l, m1, std::max(v1, 0.0)) * eval.value(l, m2, std::max(v2, 0.0));
      } else {
        double k_ij = k_d(i, j);
        const double rho_lim = 1.0 - 1e-6;  // same evaluation cap as the estimator
        if (std::abs(k_ij) > rho_lim * std::sqrt(v1 * v2))
          k_ij = std::copysign(rho_lim * std::sqrt(v1 * v2), k_ij);
        const double denom = v1 + v2 - 2.0 * k_ij;
        const double det = v1 * v2 - k_ij * k_ij;
        const double du = m1 - m2;
        const double scale = std::exp(-0.5 * du * du / denom) /
                             std::sqrt(2.0 * std::numbers::pi * denom);
        const double mu_slice = (m1 * (v2 - k_ij) + m2 * (v1 - k_ij)) / denom;
        const double var_slice = det / denom;
        for (Eigen::Index l = 0; l < s; ++l)
          p_var[l] += scale * eval.pointwise(l, mu_slice, var_slice);
      }
      ++h;
    }
  }
  for (Eigen::Index l = 0; l < s; ++l)
    p_var[l] = p_var[l] / static_cast<double>(h) - p_mean[l] * p_mean[l];
  return {p_mean, p_var};
}

std::vector<Eigen::Index> select_binned_subset(const Vector& y_lf, Eigen::Index n_train,
                                               Eigen::Index n_bins, std::uint64_t seed) {
  const Eigen::Index n = y_lf.size();
  if (n_train < 1 || n_train > n)
    throw usage_error("select_binned_subset: require 1 <= n_train <= N");
  if (n_bins < 1) throw usage_error("select_binned_subset: need at least one bin");

  const double lo = y_lf.minCoeff(), hi = y_lf.maxCoeff();
  const double width = (hi > lo) ? (hi - lo) : 1.0;
  std::vector<std::vector<Eigen::Index>> bins(static_cast<std::size_t>(n_bins));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto b = static_cast<Eigen::Index>((y_lf[i] - lo) / width * static_cast<double>(n_bins));
    b = std::clamp<Eigen::Index>(b, 0, n_bins - 1);
    bins[static_cast<std::size_t>(b)].push_back(i);
  }

  RngStream rng(seed, "binned-selection");
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(n_train));
  // round-robin over non-empty bins, random draw without replacement per bin
  while (static_cast<Eigen::Index>(chosen.size()) < n_train) {
    bool advanced = false;
    for (auto& bin : bins) {
      if (static_cast<Eigen::Index>(chosen.size()) >= n_train) break;
      if (bin.empty()) continue;
      const auto pick = static_cast<std::size_t>(rng.next_u64() % bin.size());
      chosen.push_back(bin[pick]);
      bin.erase(bin.begin() + static_cast<std::ptrdiff_t>(pick));
      advanced = true;
    }
    if (!advanced) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace bmfmc
