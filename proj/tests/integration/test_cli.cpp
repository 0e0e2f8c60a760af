#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bmfmc/io.hpp"
#include "bmfmc/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

using namespace bmfmc;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("BMFMC_CLI");
  REQUIRE_MESSAGE(p != nullptr, "BMFMC_CLI must point at the CLI binary");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("bmfmc_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_config_json() {
  return {{"seed", 21},
          {"n_sample", 500},
          {"n_train", 25},
          {"n_gamma", 1},
          {"n_gamma_plus", 3},
          {"n_variance", 60},
          {"support", {{"points", 80}, {"margin_rel", 0.15}}},
          {"model", {{"source", "harness"}, {"family", "hidden-bimodal"}, {"knobs", json::object()}}},
          {"reference", {{"n_ref", 3000}, {"seed", 424242}}}};
}

}  // namespace

TEST_CASE("stage-by-stage run succeeds and is idempotent") {
  const fs::path dir = fresh_dir("stages");
  const fs::path cfg = dir / "config.json";
  write_json_file(cfg, small_config_json());
  const std::string common = "--config " + cfg.string() + " --out " + (dir / "out").string();

  CHECK(run("sample " + common) == 0);
  CHECK(run("lf " + common) == 0);
  CHECK(run("select " + common) == 0);
  CHECK(run("fit " + common) == 0);
  CHECK(run("predict " + common) == 0);
  CHECK(run("metrics " + common) == 0);

  const std::string density = read_text_file(dir / "out" / "density.json");
  CHECK(run("predict " + common) == 0);  // no-op rerun
  CHECK(read_text_file(dir / "out" / "density.json") == density);

  fs::remove_all(dir);
}

TEST_CASE("missing artifacts exit with code 4") {
  const fs::path dir = fresh_dir("missing");
  const fs::path cfg = dir / "config.json";
  write_json_file(cfg, small_config_json());
  CHECK(run("fit --config " + cfg.string() + " --out " + (dir / "out").string()) == 4);
  fs::remove_all(dir);
}

TEST_CASE("usage problems exit with code 2") {
  const fs::path dir = fresh_dir("usage");
  CHECK(run("sample --out " + (dir / "out").string()) == 2);  // no config
  json bad = small_config_json();
  bad["n_train"] = 400;  // violates n_train <= n_sample/10
  const fs::path cfg = dir / "bad.json";
  write_json_file(cfg, bad);
  CHECK(run("sample --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("speedup subcommand reproduces the published table") {
  const fs::path dir = fresh_dir("speedup");
  const fs::path cfg = dir / "table.json";
  write_json_file(
      cfg, {{"rows",
             {{{"label", "LF 1"}, {"f_hf_lf", 4.5}, {"n_mc", 7000}, {"n_train", 50}},
              {{"label", "LF 2"}, {"f_hf_lf", 10.0}, {"n_mc", 7000}, {"n_train", 50}},
              {{"label", "LF 3"}, {"f_hf_lf", 28.0}, {"n_mc", 7000}, {"n_train", 50}}}}});

  CHECK(run("speedup --config " + cfg.string() + " --out " + dir.string()) == 0);
  const std::string csv = read_text_file(dir / "speedup.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  const double printed[3] = {4.4, 9.3, 23.3};
  for (double expected : printed) {
    REQUIRE(std::getline(in, line));
    const double got = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(std::abs(got - expected) <= 0.05);
  }
  fs::remove_all(dir);
}

TEST_CASE("unknown flags and subcommands exit with code 2") {
  CHECK(run("frobnicate") == 2);
  CHECK(run("sample --no-such-flag") == 2);
}
