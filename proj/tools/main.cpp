#include "bmfmc/costmodel.hpp"
#include "bmfmc/pipeline.hpp"
#include "bmfmc/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using bmfmc::json;

bmfmc::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_flag) {
  if (path.empty()) throw bmfmc::usage_error("--config is required for this subcommand");
  bmfmc::RunConfig cfg = bmfmc::config_from_json(bmfmc::read_json_file(path));
  if (seed_flag) cfg.seed = *seed_flag;  // flags take precedence over the file
  return cfg;
}

bmfmc::CostSpec cost_spec_from_json(const json& j) {
  bmfmc::CostSpec s;
  s.poly_degree = j.at("k").get<int>();
  s.mesh_size = j.value("h", 1.0);
  s.dim = j.at("d").get<int>();
  s.solver_tol = j.value("eps", 1e-6);
  s.precision = j.value("precision", 1);
  s.cfl_exponent = j.value("cfl_exponent", 1.5);
  s.validate();
  return s;
}

int run_speedup(const std::string& config_path, const std::string& out_dir) {
  if (config_path.empty()) throw bmfmc::usage_error("--config is required for 'speedup'");
  const json spec = bmfmc::read_json_file(config_path);
  std::vector<bmfmc::SpeedupRow> rows;
  for (const auto& r : spec.at("rows")) {
    bmfmc::SpeedupRow row;
    row.label = r.at("label").get<std::string>();
    if (r.contains("f_hf_lf")) row.f_hf_lf = r.at("f_hf_lf").get<double>();
    if (r.contains("hf")) row.hf = cost_spec_from_json(r.at("hf"));
    if (r.contains("lf")) row.lf = cost_spec_from_json(r.at("lf"));
    row.n_mc = r.at("n_mc").get<double>();
    row.n_train = r.at("n_train").get<double>();
    rows.push_back(std::move(row));
  }
  const std::string csv = bmfmc::speedup_table_csv(rows);
  std::filesystem::create_directories(out_dir);
  bmfmc::write_text_file(std::filesystem::path(out_dir) / "speedup.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity uncertainty propagation pipeline"};
  app.set_version_flag("--version", bmfmc::kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // common flags may follow the subcommand name

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_flag;
  bool force = false;
  app.add_option("--config", config_path, "JSON configuration file")->envname("BMFMC_CONFIG");
  app.add_option("--out", out_dir, "Artifact output directory");
  app.add_option("--seed", seed_flag, "Override the configured seed");
  app.add_flag("--force", force, "Recompute even when artifacts are up to date");

  auto* cmd_sample = app.add_subcommand("sample", "Draw the Monte Carlo input samples");
  auto* cmd_lf = app.add_subcommand("lf", "Evaluate the low-fidelity model on all samples");
  auto* cmd_select = app.add_subcommand(
      "select", "Reduce inputs, rank features, pick training points, run the HF model");
  auto* cmd_fit = app.add_subcommand("fit", "Train the Gaussian process on the training set");
  auto* cmd_predict =
      app.add_subcommand("predict", "Compute the posterior density mean and variance");
  auto* cmd_metrics = app.add_subcommand("metrics", "Score the prediction and append the ledger");
  auto* cmd_speedup = app.add_subcommand("speedup", "Emit a multi-fidelity speed-up table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_speedup->parsed()) return run_speedup(config_path, out_dir);

    bmfmc::Pipeline pipeline(load_config(config_path, seed_flag), out_dir, force);
    if (cmd_sample->parsed()) pipeline.stage_sample();
    else if (cmd_lf->parsed()) pipeline.stage_lf();
    else if (cmd_select->parsed()) pipeline.stage_select();
    else if (cmd_fit->parsed()) pipeline.stage_fit();
    else if (cmd_predict->parsed()) pipeline.stage_predict();
    else if (cmd_metrics->parsed()) pipeline.stage_metrics();
    return 0;
  } catch (const bmfmc::artifact_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const bmfmc::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const bmfmc::usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
