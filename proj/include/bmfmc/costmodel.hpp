#pragma once

#include "bmfmc/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmfmc {

/// Discretization and solver parameters entering the analytic cost model for
/// Galerkin-type solvers with CFL-limited time stepping.
struct CostSpec {
  int poly_degree = 1;        // k >= 1
  double mesh_size = 1.0;     // h > 0
  int dim = 2;                // spatial dimension, 1..3
  double solver_tol = 1e-6;   // epsilon in (0, 1)
  int precision = 1;          // 1 = double, 2 = single (halves cost)
  double cfl_exponent = 1.5;  // gamma in [1, 2]

  void validate() const;
};

/// cost proportional to DoFs * time steps * iterations / efficiency:
///   ((k+1)/h)^d * (k^gamma / h) * (-ln eps) / p.
double relative_cost(const CostSpec& spec);

/// Cost ratio HF/LF. Cross-dimension comparison is refused unless explicitly
/// allowed; no worked case in the cost model changes d.
double lf_speedup(const CostSpec& hf, const CostSpec& lf, bool allow_dim_mismatch = false);

/// End-to-end multi-fidelity speed-up against plain HF Monte Carlo:
///   n_mc * f / (n_mc + n_train * f), with N_MC,HF = N_MC,LF = n_mc.
double mf_speedup(double f_hf_lf, double n_mc, double n_train);

/// One row of the speed-up table: either an explicit measured cost ratio or a
/// pair of cost specs it is derived from.
struct SpeedupRow {
  std::string label;
  std::optional<double> f_hf_lf;  // takes precedence when set
  std::optional<CostSpec> hf;
  std::optional<CostSpec> lf;
  double n_mc = 0;
  double n_train = 0;
};

/// CSV with columns: label, f_hf_lf, n_mc, n_train, speedup_mf.
std::string speedup_table_csv(const std::vector<SpeedupRow>& rows);

}  // namespace bmfmc
