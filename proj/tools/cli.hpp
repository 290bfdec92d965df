#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "affdim/attractor.hpp"
#include "affdim/ergodic.hpp"
#include "affdim/pressure.hpp"
#include "affdim/words.hpp"

namespace affdim::cli {

inline constexpr const char* kSchemaVersion = "affdim.result/1";

// Everything read from a config file, validated at parse time.
struct JobConfig {
  std::optional<MatrixTuple> tuple;
  std::optional<std::vector<Vector>> translations;
  std::optional<MeasureSpec> measure;
  std::optional<Subspace> subspace;

  std::vector<std::size_t> schedule;
  std::optional<std::size_t> depth;
  double tolerance = 1e-4;
  std::size_t trials = 100;
  std::size_t mc_length = 2000;
  std::size_t samples = 200;
  std::size_t path_length = 2000;
  std::uint64_t seed = 1;
  std::size_t points = 1000000;
  std::size_t experiment_trials = 10;
  double translation_radius = 1.0;
  std::vector<double> scales;
  std::vector<double> radii;
  std::size_t centers = 500;
  std::size_t address_length = 0;
  bool export_points = false;
  double s_lo = 0.0;
  std::optional<double> s_hi;
  std::size_t s_steps = 21;

  nlohmann::json raw;
};

// Flags that override config values.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<double> tolerance;
  std::optional<std::size_t> max_n;
  std::optional<std::size_t> depth;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> q;
  std::optional<std::uint64_t> budget;
};

struct CsvTable {
  std::string name;
  std::string content;
};

// Throws Error(invalid_input) with a message that starts with the field path.
JobConfig parse_job_config(const nlohmann::json& config);

// The configuration of the worked Markov example shipped with the tool.
JobConfig example_8_1_config();

// Runs one subcommand; `tables` receives CSV side outputs.
nlohmann::json run_command(const std::string& command, const JobConfig& config, const RunOptions& options,
                           std::vector<CsvTable>& tables);

// Full front end: argument parsing, file IO and exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace affdim::cli
