#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssf/bench/config.hpp"
#include "ssf/dataset.hpp"

namespace ssfcli {

// Stable process exit codes.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kValidation = 3,
  kConvergence = 4,
  kCapability = 5,
  kBenchShortfall = 6,
};

// Thrown by commands that finish their work but must signal a non-zero exit.
struct ExitStatus : std::runtime_error {
  int code;
  ExitStatus(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Flags shared by every command.
struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void add(CLI::App& app, bool with_out, bool out_required = true, bool with_threads = true);
};

// Keys a run config may carry in addition to the scenario settings.
struct RunConfig {
  std::string model = "dnn";
  std::string formula = ".";
  std::string feature;  // spline feature; first feature when empty
  std::string embed;    // "<individual|opponent>:<dim>", empty for none
  nlohmann::json scenario_overrides = nlohmann::json::object();

  // Scenario settings for scenario k: defaults, then the file, then flags
  // are applied by the caller.
  ssf::bench::ScenarioConfig scenario(int k) const;
};

// Strict parse of a run config file ("" gives the defaults).
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const std::string& text, const std::string& origin);

// Every default as a run config document.
std::string default_run_config(int scenario);

// Applies --seed/--threads when given on the command line.
void apply_common(const CommonFlags& f, ssf::bench::ScenarioConfig& c);

// Reads and validates a dataset; prints the report and throws ExitStatus(3)
// on violations. Uncentered data is centered with its own pooled means.
ssf::StrataDataset load_dataset(const std::string& path, bool quiet = false);

std::vector<int> parse_int_list(const std::string& text, const std::string& flag);
std::vector<std::string> split(const std::string& text, char sep);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void ensure_dir(const std::string& path);

}  // namespace ssfcli
