#include "bmfmc/costmodel.hpp"
#include "bmfmc/density.hpp"
#include "bmfmc/dimreduce.hpp"
#include "bmfmc/features.hpp"
#include "bmfmc/gp.hpp"
#include "bmfmc/harness.hpp"
#include "bmfmc/metrics.hpp"
#include "bmfmc/pipeline.hpp"
#include "bmfmc/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace bmfmc;

namespace {

ScalarDistribution scalar_from_name(const std::string& kind, double a, double b) {
  if (kind == "uniform") return ScalarDistribution::uniform(a, b);
  if (kind == "normal") return ScalarDistribution::normal(a, b);
  if (kind == "lognormal") return ScalarDistribution::lognormal(a, b);
  throw usage_error("unknown distribution kind '" + kind + "'");
}

RandomFieldSpec make_field_spec(const Matrix& grid, const Vector& mean, const Vector& amplitude,
                                double length_scale) {
  RandomFieldSpec s;
  s.grid = grid;
  s.mean = mean;
  s.amplitude = amplitude;
  s.length_scale = length_scale;
  s.validate();
  return s;
}

MeanMode mean_mode_from_name(const std::string& name) {
  if (name == "zero") return MeanMode::Zero;
  if (name == "lf-passthrough") return MeanMode::LfPassthrough;
  throw usage_error("unknown mean mode '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-fidelity uncertainty propagation: sampling, feature discovery, "
            "GP conditionals, and output-density estimation";
  m.attr("__version__") = kVersion;

  py::register_exception<usage_error>(m, "UsageError", PyExc_ValueError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<artifact_error>(m, "ArtifactError", PyExc_FileNotFoundError);

  // ---- inputs
  m.def("sample_scalar",
        [](const std::string& kind, double a, double b, Eigen::Index n, std::uint64_t seed) {
          return sample_scalar(scalar_from_name(kind, a, b), n, seed);
        },
        py::arg("kind"), py::arg("a"), py::arg("b"), py::arg("n"), py::arg("seed"),
        "Draw i.i.d. samples; kind is 'uniform' (lo,hi), 'normal' or 'lognormal' (mu,sigma2)");
  m.def("field_covariance",
        [](const Matrix& grid, const Vector& mean, const Vector& amplitude, double ell) {
          return field_covariance(make_field_spec(grid, mean, amplitude, ell));
        },
        py::arg("grid"), py::arg("mean"), py::arg("amplitude"), py::arg("length_scale"));
  m.def("sample_field",
        [](const Matrix& grid, const Vector& mean, const Vector& amplitude, double ell,
           Eigen::Index n, std::uint64_t seed) {
          return sample_field(make_field_spec(grid, mean, amplitude, ell), n, seed);
        },
        py::arg("grid"), py::arg("mean"), py::arg("amplitude"), py::arg("length_scale"),
        py::arg("n"), py::arg("seed"));

  // ---- dimension reduction
  py::class_<KLEBasis>(m, "KLEBasis")
      .def_readonly("eigenvalues", &KLEBasis::eigenvalues)
      .def_readonly("eigenvectors", &KLEBasis::eigenvectors)
      .def_readonly("mean", &KLEBasis::mean)
      .def_readonly("n_trunc", &KLEBasis::n_trunc)
      .def_readonly("explained", &KLEBasis::explained);
  m.def("kle_fit_covariance", &kle_fit_covariance, py::arg("covariance"), py::arg("mean"),
        py::arg("threshold") = 0.95, py::arg("max_order") = 1000);
  m.def("kle_fit_samples", &kle_fit_samples, py::arg("rows"), py::arg("threshold") = 0.95,
        py::arg("max_order") = 1000);
  m.def("kle_project", &kle_project, py::arg("basis"), py::arg("rows"));
  m.def("kle_reconstruct", &kle_reconstruct, py::arg("basis"), py::arg("coeffs"));

  py::class_<ReducedInputMatrix>(m, "ReducedInputMatrix")
      .def_readonly("data", &ReducedInputMatrix::data)
      .def("column_means",
           [](const ReducedInputMatrix& r) {
             Vector v(r.cols());
             for (Eigen::Index j = 0; j < r.cols(); ++j)
               v[j] = r.scalers[static_cast<std::size_t>(j)].mean;
             return v;
           })
      .def("column_stds", [](const ReducedInputMatrix& r) {
        Vector v(r.cols());
        for (Eigen::Index j = 0; j < r.cols(); ++j)
          v[j] = r.scalers[static_cast<std::size_t>(j)].std;
        return v;
      });
  m.def("standardize", &standardize, py::arg("matrix"));

  // ---- features
  py::class_<FeatureRanking>(m, "FeatureRanking")
      .def_readonly("scores", &FeatureRanking::scores)
      .def_readonly("order", &FeatureRanking::order);
  m.def("rank_features", &rank_features, py::arg("reduced"), py::arg("y_lf"),
        py::arg("standardize_y") = true);
  py::class_<FeatureSpace>(m, "FeatureSpace")
      .def_readonly("z_matrix", &FeatureSpace::z_matrix)
      .def_readonly("gamma_plus", &FeatureSpace::gamma_plus)
      .def_readonly("selected_cols", &FeatureSpace::selected_cols);
  m.def("build_feature_space", &build_feature_space, py::arg("ranking"), py::arg("reduced"),
        py::arg("y_lf"), py::arg("n_gamma"), py::arg("n_gamma_plus"));
  m.def("select_diverse_subset", &select_diverse_subset, py::arg("points"), py::arg("n_train"));

  // ---- gaussian process
  py::class_<GaussianProcessModel>(m, "GaussianProcessModel")
      .def_property_readonly("length_scale",
                             [](const GaussianProcessModel& g) { return g.params.length_scale; })
      .def_property_readonly("signal_var",
                             [](const GaussianProcessModel& g) { return g.params.signal_var; })
      .def_property_readonly("noise_var",
                             [](const GaussianProcessModel& g) { return g.params.noise_var; })
      .def_readonly("deterministic", &GaussianProcessModel::deterministic)
      .def_readonly("log_marginal", &GaussianProcessModel::log_marginal);
  m.def("gp_fit",
        [](const Matrix& z, const Vector& y, const std::string& mean_mode, int restarts,
           std::uint64_t seed) {
          return gp_fit(z, y, mean_mode_from_name(mean_mode), restarts, seed);
        },
        py::arg("z_train"), py::arg("y_train"), py::arg("mean_mode") = "lf-passthrough",
        py::arg("restarts") = 8, py::arg("seed") = 0);
  m.def("gp_make",
        [](double ell, double signal_var, double noise_var, const Matrix& z, const Vector& y,
           const std::string& mean_mode) {
          return gp_make(KernelParams{ell, signal_var, noise_var}, z, y,
                         mean_mode_from_name(mean_mode));
        },
        py::arg("length_scale"), py::arg("signal_var"), py::arg("noise_var"), py::arg("z_train"),
        py::arg("y_train"), py::arg("mean_mode") = "zero");
  m.def("gp_predict",
        [](const GaussianProcessModel& model, const Matrix& z_test) {
          const GpPredictions p = gp_predict(model, z_test);
          return py::make_tuple(p.mean, p.variance, p.noise_var);
        },
        py::arg("model"), py::arg("z_test"),
        "Returns (mean, latent_variance, noise_var); add noise_var for the predictive law");
  m.def("gp_posterior_cov", &gp_posterior_cov, py::arg("model"), py::arg("z_a"), py::arg("z_b"));
  m.def("log_marginal_likelihood",
        [](double ell, double signal_var, double noise_var, const Matrix& z, const Vector& y,
           const std::string& mean_mode) {
          return log_marginal_likelihood(KernelParams{ell, signal_var, noise_var}, z, y,
                                         mean_mode_from_name(mean_mode));
        },
        py::arg("length_scale"), py::arg("signal_var"), py::arg("noise_var"), py::arg("z_train"),
        py::arg("y_train"), py::arg("mean_mode") = "zero");

  // ---- density estimation
  m.def("support_grid", [](double lo, double hi, Eigen::Index n) {
    return SupportGrid::equispaced(lo, hi, n).points;
  });
  m.def("density_mean",
        [](const GaussianProcessModel& model, const Matrix& z_star, const Vector& support) {
          SupportGrid g{support};
          return density_mean(model, z_star, g);
        },
        py::arg("model"), py::arg("z_star"), py::arg("support"));
  m.def("density_variance",
        [](const GaussianProcessModel& model, const Matrix& z_star, const Vector& support,
           const Vector& mean_vec) {
          SupportGrid g{support};
          return density_variance(model, z_star, g, mean_vec);
        },
        py::arg("model"), py::arg("z_star"), py::arg("support"), py::arg("mean_vec"));

  // ---- metrics
  m.def("kde",
        [](const Vector& samples, const Vector& grid, const std::string& mode) {
          const BandwidthMode bw =
              mode == "cv-grid" ? BandwidthMode::CvGrid : BandwidthMode::Silverman;
          return kde_fit(samples, bw).evaluate(grid);
        },
        py::arg("samples"), py::arg("grid"), py::arg("bandwidth_mode") = "silverman");
  m.def("kld", &kld, py::arg("grid"), py::arg("p"), py::arg("q"));
  m.def("mc_standard_error", &mc_standard_error, py::arg("sample_std"), py::arg("n"));

  // ---- cost model
  m.def("relative_cost",
        [](int k, double h, int d, double eps, int precision, double cfl_exponent) {
          return relative_cost(CostSpec{k, h, d, eps, precision, cfl_exponent});
        },
        py::arg("k"), py::arg("h") = 1.0, py::arg("d") = 2, py::arg("eps") = 1e-6,
        py::arg("precision") = 1, py::arg("cfl_exponent") = 1.5);
  m.def("lf_speedup",
        [](int k0, int k, double h0, double h, int d, double eps0, double eps, int p0, int p,
           double cfl_exponent) {
          return lf_speedup(CostSpec{k0, h0, d, eps0, p0, cfl_exponent},
                            CostSpec{k, h, d, eps, p, cfl_exponent});
        },
        py::arg("k_hf"), py::arg("k_lf"), py::arg("h_hf") = 1.0, py::arg("h_lf") = 1.0,
        py::arg("d") = 2, py::arg("eps_hf") = 1e-6, py::arg("eps_lf") = 1e-6,
        py::arg("precision_hf") = 1, py::arg("precision_lf") = 1,
        py::arg("cfl_exponent") = 1.5);
  m.def("mf_speedup", &mf_speedup, py::arg("f_hf_lf"), py::arg("n_mc"), py::arg("n_train"));

  // ---- harness
  m.def("harness_evaluate",
        [](const std::string& family, const std::string& knobs_json, const std::string& which,
           const Matrix& x) {
          const SyntheticFamily fam =
              make_family(family, knobs_json.empty() ? json::object() : json::parse(knobs_json));
          return harness_evaluate(fam, which == "hf" ? Fidelity::HF : Fidelity::LF, x);
        },
        py::arg("family"), py::arg("knobs_json"), py::arg("which"), py::arg("x"));

  // ---- pipeline
  m.def("run_pipeline",
        [](const std::string& config_json, const std::string& out_dir, bool force) {
          const RunConfig cfg = config_from_json(json::parse(config_json));
          Pipeline pipeline(cfg, out_dir, force);
          const PipelineResult res = pipeline.run_all();
          py::dict out;
          out["support"] = res.density.support.points;
          out["mean"] = res.density.mean;
          out["variance"] = res.density.variance;
          out["hf_evals"] = res.hf_evals;
          out["out_dir"] = res.out_dir.string();
          return out;
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("force") = false,
        "Run all pipeline stages; returns the density prediction and artifact directory");
}
