#include "bmfmc/costmodel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bmfmc {

void CostSpec::validate() const {
  if (poly_degree < 1) throw usage_error("cost spec: polynomial degree must be >= 1");
  if (!(mesh_size > 0.0)) throw usage_error("cost spec: mesh size must be > 0");
  if (dim < 1 || dim > 3) throw usage_error("cost spec: dimension must be 1, 2 or 3");
  if (!(solver_tol > 0.0 && solver_tol < 1.0))
    throw usage_error("cost spec: solver tolerance must lie in (0, 1)");
  if (precision != 1 && precision != 2)
    throw usage_error("cost spec: precision factor must be 1 (double) or 2 (single)");
  if (!(cfl_exponent >= 1.0 && cfl_exponent <= 2.0))
    throw usage_error("cost spec: CFL exponent must lie in [1, 2]");
}

double relative_cost(const CostSpec& s) {
  s.validate();
  const double k = static_cast<double>(s.poly_degree);
  const double dofs = std::pow((k + 1.0) / s.mesh_size, static_cast<double>(s.dim));
  const double steps = std::pow(k, s.cfl_exponent) / s.mesh_size;
  const double iters = -std::log(s.solver_tol);
  return dofs * steps * iters / static_cast<double>(s.precision);
}

double lf_speedup(const CostSpec& hf, const CostSpec& lf, bool allow_dim_mismatch) {
  hf.validate();
  lf.validate();
  if (hf.dim != lf.dim && !allow_dim_mismatch)
    throw usage_error("lf_speedup: HF and LF dimensions differ; pass the override to compare");
  return relative_cost(hf) / relative_cost(lf);
}

double mf_speedup(double f_hf_lf, double n_mc, double n_train) {
  if (!(f_hf_lf > 0.0)) throw usage_error("mf_speedup: cost ratio must be > 0");
  if (!(n_mc > 0.0) || !(n_train > 0.0))
    throw usage_error("mf_speedup: sample counts must be > 0");
  return n_mc * f_hf_lf / (n_mc + n_train * f_hf_lf);
}

std::string speedup_table_csv(const std::vector<SpeedupRow>& rows) {
  std::ostringstream out;
  out << "label,f_hf_lf,n_mc,n_train,speedup_mf\n";
  char buf[64];
  for (const auto& row : rows) {
    double f;
    if (row.f_hf_lf) {
      f = *row.f_hf_lf;
    } else if (row.hf && row.lf) {
      f = lf_speedup(*row.hf, *row.lf);
    } else {
      throw usage_error("speedup table row '" + row.label +
                        "': need either f_hf_lf or both cost specs");
    }
    const double s = mf_speedup(f, row.n_mc, row.n_train);
    out << row.label << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", f);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", row.n_mc);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", row.n_train);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", s);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace bmfmc
