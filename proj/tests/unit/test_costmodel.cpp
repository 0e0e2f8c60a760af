#include "bmfmc/costmodel.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace bmfmc;

namespace {

CostSpec spec(int k, double h, int d, double eps, int prec, double gamma) {
  CostSpec s;
  s.poly_degree = k;
  s.mesh_size = h;
  s.dim = d;
  s.solver_tol = eps;
  s.precision = prec;
  s.cfl_exponent = gamma;
  return s;
}

}  // namespace

TEST_CASE("relative cost unit case") {
  CHECK(relative_cost(spec(1, 1.0, 1, std::exp(-1.0), 1, 1.0)) == doctest::Approx(2.0));
}

TEST_CASE("doubling the mesh size in 2-D cuts cost by eight") {
  const CostSpec fine = spec(3, 0.1, 2, 1e-6, 1, 1.0);
  CostSpec coarse = fine;
  coarse.mesh_size = 0.2;
  CHECK(relative_cost(fine) / relative_cost(coarse) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("single precision halves the cost exactly") {
  const CostSpec dbl = spec(4, 0.05, 3, 1e-8, 1, 1.5);
  CostSpec sng = dbl;
  sng.precision = 2;
  CHECK(relative_cost(dbl) == doctest::Approx(2.0 * relative_cost(sng)).epsilon(1e-15));
}

TEST_CASE("identical specs give unit speed-up") {
  const CostSpec s = spec(5, 0.02, 2, 1e-7, 1, 1.3);
  CHECK(lf_speedup(s, s) == doctest::Approx(1.0));
}

TEST_CASE("polynomial-degree relaxation 6 -> 3 gives roughly eight") {
  const CostSpec hf = spec(6, 1.0, 2, 1e-6, 1, 1.5);
  const CostSpec lf = spec(3, 1.0, 2, 1e-6, 1, 1.5);
  CHECK(lf_speedup(hf, lf) == doctest::Approx(8.662).epsilon(1e-3));

  // gamma sweep stays within the documented window
  for (double g : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    CostSpec h2 = hf, l2 = lf;
    h2.cfl_exponent = g;
    l2.cfl_exponent = g;
    const double f = lf_speedup(h2, l2);
    CHECK(f >= 6.1);
    CHECK(f <= 12.25);
  }
}

TEST_CASE("tolerance relaxation follows the log ratio") {
  const CostSpec hf = spec(2, 1.0, 2, 1e-6, 1, 1.0);
  const CostSpec lf = spec(2, 1.0, 2, 1e-4, 1, 1.0);
  CHECK(lf_speedup(hf, lf) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("dimension mismatch requires the override") {
  const CostSpec a = spec(2, 1.0, 2, 1e-6, 1, 1.0);
  const CostSpec b = spec(2, 1.0, 3, 1e-6, 1, 1.0);
  CHECK_THROWS_AS(lf_speedup(a, b), usage_error);
  CHECK(lf_speedup(a, b, true) > 0.0);
}

TEST_CASE("cost-ratio transitivity") {
  const CostSpec a = spec(6, 0.5, 2, 1e-8, 1, 1.5);
  const CostSpec b = spec(4, 0.7, 2, 1e-6, 2, 1.5);
  const CostSpec c = spec(2, 1.0, 2, 1e-4, 1, 1.5);
  CHECK(lf_speedup(a, b) * lf_speedup(b, c) ==
        doctest::Approx(lf_speedup(a, c)).epsilon(1e-12));
}

TEST_CASE("multi-fidelity speed-up values") {
  CHECK(mf_speedup(4.5, 7000, 50) == doctest::Approx(4.36).epsilon(2e-3));
  CHECK(mf_speedup(10.0, 7000, 50) == doctest::Approx(9.33).epsilon(2e-3));
  CHECK(mf_speedup(28.0, 7000, 50) == doctest::Approx(23.33).epsilon(2e-3));
  // printed table rounds to one decimal
  CHECK(std::abs(mf_speedup(4.5, 7000, 50) - 4.4) <= 0.05);
  CHECK(std::abs(mf_speedup(10.0, 7000, 50) - 9.3) <= 0.05);
  CHECK(std::abs(mf_speedup(28.0, 7000, 50) - 23.3) <= 0.05);
}

TEST_CASE("multi-fidelity speed-up bounds and monotonicity") {
  for (double f : {1.5, 4.5, 28.0, 100.0}) {
    CHECK(mf_speedup(f, 7000, 50) < f);
    CHECK(mf_speedup(f, 14000, 50) > mf_speedup(f, 7000, 50));
    CHECK(mf_speedup(f, 7000, 100) < mf_speedup(f, 7000, 50));
  }
}

TEST_CASE("speed-up table emitter") {
  std::vector<SpeedupRow> rows;
  rows.push_back({"LF 1", 4.5, {}, {}, 7000, 50});
  rows.push_back({"LF 2", 10.0, {}, {}, 7000, 50});
  SpeedupRow derived;
  derived.label = "poly";
  derived.hf = spec(6, 1.0, 2, 1e-6, 1, 1.5);
  derived.lf = spec(3, 1.0, 2, 1e-6, 1, 1.5);
  derived.n_mc = 10000;
  derived.n_train = 150;
  rows.push_back(derived);

  const std::string csv = speedup_table_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "label,f_hf_lf,n_mc,n_train,speedup_mf");
  std::getline(in, line);
  CHECK(line.find("LF 1,4.5,") == 0);
  CHECK(line.find("4.359") != std::string::npos);

  SpeedupRow bad;
  bad.label = "incomplete";
  bad.n_mc = 10;
  bad.n_train = 1;
  CHECK_THROWS_AS(speedup_table_csv({bad}), usage_error);
}

TEST_CASE("cost spec validation") {
  CHECK_THROWS_AS(relative_cost(spec(0, 1.0, 2, 1e-6, 1, 1.5)), usage_error);
  CHECK_THROWS_AS(relative_cost(spec(1, 0.0, 2, 1e-6, 1, 1.5)), usage_error);
  CHECK_THROWS_AS(relative_cost(spec(1, 1.0, 4, 1e-6, 1, 1.5)), usage_error);
  CHECK_THROWS_AS(relative_cost(spec(1, 1.0, 2, 1.5, 1, 1.5)), usage_error);
  CHECK_THROWS_AS(relative_cost(spec(1, 1.0, 2, 1e-6, 3, 1.5)), usage_error);
  CHECK_THROWS_AS(relative_cost(spec(1, 1.0, 2, 1e-6, 1, 2.5)), usage_error);
  CHECK_THROWS_AS(mf_speedup(0.0, 100, 10), usage_error);
}
