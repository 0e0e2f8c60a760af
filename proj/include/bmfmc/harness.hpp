#pragma once

#include "bmfmc/common.hpp"
#include "bmfmc/density.hpp"
#include "bmfmc/gp.hpp"
#include "bmfmc/inputs.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bmfmc {

enum class Fidelity { HF, LF };

/// Closed-form two-fidelity model pair standing in for a PDE solver pair at
/// desk scale. HF evaluations are counted through a shared budget so
/// pipelines can prove how many they spent.
struct SyntheticFamily {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Vector&)> hf_fn;
  std::function<double(const Vector&)> lf_fn;
  double dependency = 1.0;                  // 0 = independent, 1 = identical
  std::vector<Eigen::Index> hidden_dims;    // inputs driving the HF-LF discrepancy
  Eigen::Index field_width = 0;             // leading field-block columns, 0 if none
  std::shared_ptr<std::atomic<long>> hf_budget = std::make_shared<std::atomic<long>>(0);

  long budget() const { return hf_budget->load(); }
  void reset_budget() const { hf_budget->store(0); }
};

/// Families: identical | noisy-linear | hidden-bimodal | indep | kle-field.
/// Knobs (JSON object) override per-family defaults, e.g. {"dependency": 0.5},
/// {"amplitude": 0.6}, {"n_field": 50, "n_scalar": 1}.
SyntheticFamily make_family(const std::string& name, const nlohmann::json& knobs = {});

/// Canonical input blocks matching a family's declared dimension.
std::vector<BlockSpec> default_blocks(const SyntheticFamily& family);

/// Row-wise deterministic evaluation; HF calls increment the budget ledger.
Vector harness_evaluate(const SyntheticFamily& family, Fidelity which, const Matrix& x);

/// Ground-truth analog of the HF output density: Gaussian KDE of n_ref direct
/// HF draws, evaluated on the grid.
Vector reference_density(const SyntheticFamily& family, const std::vector<BlockSpec>& blocks,
                         Eigen::Index n_ref, std::uint64_t seed, const SupportGrid& support);

/// Literal nested-loop transcription of the posterior-statistics recipe
/// (plain accumulation in loop order, normalization by the term count,
/// squared-mean subtraction). Reference implementation for equivalence tests
/// against density_mean / density_variance; refuses N > 100.
std::pair<Vector, Vector> algorithm3_oracle(const GaussianProcessModel& model,
                                            const Matrix& z_star, const SupportGrid& support);

/// Binning-based training-point selection baseline: split y_lf into
/// `n_bins` equal-width bins and draw an equal share from each, seeded.
/// Comparison mode only; the pipeline uses the diverse-subset strategy.
std::vector<Eigen::Index> select_binned_subset(const Vector& y_lf, Eigen::Index n_train,
                                               Eigen::Index n_bins, std::uint64_t seed);

}  // namespace bmfmc
