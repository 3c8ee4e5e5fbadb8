// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <iostream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "psytraj/cli.hpp"
#include "psytraj/signal.hpp"
#include "psytraj/util.hpp"

using namespace psytraj;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "psytraj_cli_tests";
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code = 0;
  std::string out;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("psytraj");
  for (const auto& a : args) argv.push_back(a.c_str());

  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  CliResult res;
  res.code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  res.out = captured.str();
  return res;
}

// Six-channel mini spec (A1/A2 present so the SNR-floor curriculum works).
std::string write_mini_spec(const fs::path& path, const std::string& condition) {
  signal::SynthSpec spec;
  spec.sample_rate_hz = 300.0;
  spec.duration_s = 3.0;
  spec.noise_amplitude = 0.02;
  spec.condition = condition;
  spec.channels = {
      {"A1", {{7.3, 1.0, 0.4}}},
      {"A2", {{7.3, 1.0, 0.4}}},
      {"Cz", {{1.3, 1.0, 0.0}, {2.7, 0.4, 1.0}}},
      {"Pz", {{1.3, -0.6, 0.0}, {2.7, 0.8, 1.0}}},
      {"O1", {{2.7, 1.0, 1.0}, {4.1, 0.5, 2.0}}},
      {"ECG", {{1.1, 1.2, 0.2}}},
  };
  write_file_text(path, spec.to_json_text());
  return path.string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits 0, unknown flags exit 1") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"synth", "--bogus-flag", "x"}).code == 1);
  CHECK(run_cli({"nonexistent-subcommand"}).code == 1);
  CHECK(run_cli({}).code == 1);
}

TEST_CASE("missing or unreadable data exits 2") {
  const fs::path dir = temp_dir();
  CHECK(run_cli({"inspect", "--model", (dir / "missing.ckpt").string()}).code == 2);
  CHECK(run_cli({"synth", "--spec", (dir / "missing.json").string(), "--out",
                 (dir / "out.csv").string()})
            .code == 2);
}

TEST_CASE("synth writes the recording plus sidecar and reports JSON") {
  const fs::path dir = temp_dir();
  const std::string spec = write_mini_spec(dir / "spec.json", "rest");
  const fs::path out = dir / "rest.csv";
  const CliResult res = run_cli({"synth", "--spec", spec, "--seed", "5", "--out", out.string()});
  REQUIRE(res.code == 0);
  CHECK(fs::exists(out));
  CHECK(fs::exists(signal::sidecar_path(out)));
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("frames").get<std::size_t>() == 900);
  CHECK(j.at("channels").get<std::size_t>() == 6);
  CHECK(j.at("condition").get<std::string>() == "rest");
}

TEST_CASE("the full pipeline runs and is byte-deterministic") {
  const fs::path dir = temp_dir() / "pipeline";
  fs::create_directories(dir);
  const std::string rest_spec = write_mini_spec(dir / "rest.json", "rest");
  const std::string high_spec = write_mini_spec(dir / "high.json", "high");
  const std::string low_spec = write_mini_spec(dir / "low.json", "low");

  auto run_pipeline = [&](const fs::path& sub) {
    fs::create_directories(sub);
    REQUIRE(run_cli({"synth", "--spec", rest_spec, "--seed", "1", "--out",
                     (sub / "rest.csv").string()})
                .code == 0);
    REQUIRE(run_cli({"synth", "--spec", high_spec, "--seed", "2", "--out",
                     (sub / "high.csv").string()})
                .code == 0);
    REQUIRE(run_cli({"synth", "--spec", low_spec, "--seed", "3", "--out",
                     (sub / "low.csv").string()})
                .code == 0);
    REQUIRE(run_cli({"train", "--data", (sub / "rest.csv").string(), "--out",
                     (sub / "model.ckpt").string(), "--max-epochs", "3", "--batch-size", "32",
                     "--seed", "7", "--threads", "1"})
                .code == 0);
    REQUIRE(run_cli({"encode", "--model", (sub / "model.ckpt").string(), "--data",
                     (sub / "high.csv").string(), "--out", (sub / "high_latents.csv").string()})
                .code == 0);
    REQUIRE(run_cli({"track", "--model", (sub / "model.ckpt").string(), "--resting",
                     (sub / "rest.csv").string(), "--task", (sub / "high.csv").string(),
                     "--filter-ms", "100", "--out", (sub / "high_traj.csv").string(), "--svg",
                     (sub / "high_traj.svg").string()})
                .code == 0);
    REQUIRE(run_cli({"track", "--model", (sub / "model.ckpt").string(), "--resting",
                     (sub / "rest.csv").string(), "--task", (sub / "low.csv").string(),
                     "--filter-ms", "100", "--out", (sub / "low_traj.csv").string()})
                .code == 0);
    REQUIRE(run_cli({"compare", "--traj-a", (sub / "high_traj.csv").string(), "--traj-b",
                     (sub / "low_traj.csv").string(), "--out", (sub / "report.json").string()})
                .code == 0);
  };

  run_pipeline(dir / "run1");
  run_pipeline(dir / "run2");

  for (const char* name : {"rest.csv", "model.ckpt", "high_latents.csv", "high_traj.csv",
                           "low_traj.csv", "high_traj.svg"}) {
    CAPTURE(name);
    CHECK(read_file_bytes(dir / "run1" / name) == read_file_bytes(dir / "run2" / name));
  }
  // The report embeds the argv input paths, which differ per run directory;
  // every numeric field must still agree bit-for-bit.
  auto r1 = nlohmann::json::parse(read_file_text(dir / "run1" / "report.json"));
  auto r2 = nlohmann::json::parse(read_file_text(dir / "run2" / "report.json"));
  r1.erase("traj_a");
  r1.erase("traj_b");
  r2.erase("traj_a");
  r2.erase("traj_b");
  CHECK(r1.dump() == r2.dump());

  // Inspect echoes the stored convergence flag and angles.
  const CliResult inspect =
      run_cli({"inspect", "--model", (dir / "run1" / "model.ckpt").string()});
  REQUIRE(inspect.code == 0);
  const auto j = nlohmann::json::parse(inspect.out);
  CHECK(j.contains("converged"));
  CHECK(j.at("epochs_run").get<std::size_t>() == 3);
  CHECK(j.at("network").at("latent_dim").get<std::size_t>() == 3);

  // The report carries the separation fields.
  const auto report =
      nlohmann::json::parse(read_file_text(dir / "run1" / "report.json"));
  CHECK(report.contains("separation_ratio"));
  CHECK(report.at("condition_a").get<std::string>() == "high");
  CHECK(report.at("condition_b").get<std::string>() == "low");
}

TEST_CASE("track supports the nearest-point displacement mode") {
  const fs::path dir = temp_dir() / "nearest";
  fs::create_directories(dir);
  const std::string rest_spec = write_mini_spec(dir / "rest.json", "rest");
  const std::string task_spec = write_mini_spec(dir / "task.json", "high");
  REQUIRE(run_cli({"synth", "--spec", rest_spec, "--seed", "1", "--out",
                   (dir / "rest.csv").string()})
              .code == 0);
  REQUIRE(run_cli({"synth", "--spec", task_spec, "--seed", "2", "--out",
                   (dir / "task.csv").string()})
              .code == 0);
  REQUIRE(run_cli({"train", "--data", (dir / "rest.csv").string(), "--out",
                   (dir / "model.ckpt").string(), "--max-epochs", "2", "--batch-size", "32",
                   "--threads", "1"})
              .code == 0);
  // Nearest-point against an 900-point manifold is quadratic; keep it small
  // by filtering to a short window.
  const CliResult res =
      run_cli({"track", "--model", (dir / "model.ckpt").string(), "--resting",
               (dir / "rest.csv").string(), "--task", (dir / "task.csv").string(), "--filter-ms",
               "100", "--displacement-mode", "nearest", "--out", (dir / "traj.csv").string()});
  REQUIRE(res.code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("displacement_mode").get<std::string>() == "nearest");

  // Unknown mode is a data error.
  CHECK(run_cli({"track", "--model", (dir / "model.ckpt").string(), "--resting",
                 (dir / "rest.csv").string(), "--task", (dir / "task.csv").string(),
                 "--displacement-mode", "sideways", "--out", (dir / "traj2.csv").string()})
            .code == 2);
}

TEST_CASE("training divergence exits 3") {
  const fs::path dir = temp_dir() / "diverge";
  fs::create_directories(dir);
  const std::string spec = write_mini_spec(dir / "spec.json", "rest");
  REQUIRE(run_cli({"synth", "--spec", spec, "--seed", "1", "--out", (dir / "rest.csv").string()})
              .code == 0);
  CHECK(run_cli({"train", "--data", (dir / "rest.csv").string(), "--out",
                 (dir / "model.ckpt").string(), "--max-epochs", "5", "--batch-size", "32",
                 "--lr", "1e9", "--threads", "1"})
            .code == 3);
}

}  // TEST_SUITE
