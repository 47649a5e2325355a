#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfsim::cli {

struct ProcessConfig {
  std::string family = "fbm";
  double alpha = 1.0;
  double K = 1.0;
  int k = 1;
};

struct GridConfig {
  std::optional<std::size_t> n;  // overrides density
  double density = 16.0;         // points per unit time
  std::string scheme = "uniform";
};

struct McConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  int levels = 2;
  std::optional<std::string> strategy;  // command default when unset
  std::string method = "auto";
};

struct ExceedanceConfig {
  double a = 1.0;
  double b = 1.0;
  double beta = 1.0;
  std::size_t n_paths = 0;  // 0: sized from the pilot batch
  std::size_t pilot_paths = 20000;
  std::size_t max_paths = 10'000'000;
  std::size_t reference_paths = 100000;
};

struct OutputConfig {
  std::string format = "csv";
  std::string path;  // empty: $SELFSIM_OUTPUT_DIR/<command>-<family>.<ext> or stdout
};

struct RunConfig {
  std::string command;
  ProcessConfig process;
  std::vector<double> R{1.0};
  std::optional<double> T;
  std::vector<double> T_list{10.0, 20.0, 40.0};
  std::vector<double> u_list{2.5, 3.0, 3.5};
  GridConfig grid;
  McConfig mc;
  ExceedanceConfig exceedance;
  std::optional<double> H_ref;
  OutputConfig output;
  int threads = 0;
};

enum ExitCode : int {
  kOk = 0,
  kValidationError = 1,
  kComputeError = 2,
  kVerificationFailure = 3,
};

/// Strict parse of a JSON config: unknown keys and wrong types are rejected
/// with the offending field path. Throws ParameterError.
RunConfig parse_config(std::string_view json_text);

/// The config with defaults filled in, as compact JSON. Worker count and
/// output path are left out so that outputs do not depend on them.
std::string resolved_config(const RunConfig& config);

/// Validates, runs and writes the outputs of one command.
int run(const RunConfig& config);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace selfsim::cli
