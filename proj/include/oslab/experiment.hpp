#pragma once

// Declarative experiment runner: configuration schema, validation, pipeline
// execution and report emission.

#include "oslab/cocycle.hpp"
#include "oslab/ldtlab.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oslab {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes of the runner.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDegenerate = 3, kExitIo = 4 };

enum class OutputFormat { csv, json };

struct OseledetsSection {
  std::size_t phases = 16;
  std::int64_t n = 0;  ///< 0 selects the largest scale
  std::vector<std::int64_t> convergence_scales;  ///< empty selects n/32, 2n/32, ..., n/2
  std::int64_t n0 = 16;                          ///< avalanche base scale
  double avalanche_eps = 0.0;                    ///< 0 selects kappa / 20
};

struct ContinuitySection {
  std::string family = "energy_shift";  ///< energy_shift | entry
  std::vector<double> h;
  std::int64_t n = 0;  ///< 0 selects the largest scale
  std::size_t samples = 0;  ///< 0 selects the top-level sample count
  ContinuityTarget target = ContinuityTarget::direction;
  double alpha_trial = 1.0;
  int row = 0;  ///< entry family: perturbed entry (row, col)
  int col = 1;
  std::optional<std::vector<int>> tau_b;
};

struct DeviationSection {
  std::vector<double> eps{0.05, 0.1};
  std::size_t samples = 0;
};

struct ExceptionalSection {
  std::int64_t n = 0;  ///< 0 selects the smallest scale
  std::size_t samples = 0;
  std::int64_t speed_n_max = 0;  ///< 0 selects min(n^2, 4096)
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0 defers to the command line and OSL_LAB_THREADS
  std::size_t samples = 100;
  std::vector<std::int64_t> scales;
  nlohmann::json base;
  std::string cocycle;
  nlohmann::json cocycle_params;
  std::optional<std::vector<int>> tau;
  std::vector<std::string> pipelines;
  OseledetsSection oseledets;
  ContinuitySection continuity;
  DeviationSection deviation;
  ExceptionalSection exceptional;
  std::string output_dir = "oslab-out";
  bool plots = true;
  OutputFormat format = OutputFormat::csv;
  std::vector<std::string> warnings;

  bool has(const std::string& pipeline) const;
};

/// Names accepted in "pipelines".
const std::vector<std::string>& pipeline_names();

/// Schema check of a parsed document. Throws ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON file, or a TOML file (".toml") through python3 and tomli;
/// OSLAB_PYTHON overrides the interpreter. Throws ConfigError for malformed
/// input and Error for unreadable files.
nlohmann::json load_config_file(const std::string& path);

BaseSystem build_base(const nlohmann::json& base, const std::string& path = "base");
Cocycle build_cocycle(const ExperimentConfig& cfg);

/// Cross-field checks without running any pipeline: the cocycle evaluates on
/// the base, tau fits the dimension, windows cover the requested scales.
/// Appends warnings to cfg.warnings; throws ConfigError.
void validate_config(ExperimentConfig& cfg);

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;  ///< 0: config value, then OSL_LAB_THREADS, then 1
  std::optional<OutputFormat> format;
};

/// Executes the selected pipelines and writes the reports. Returns an
/// ExitCode; progress goes to `log`.
int run_experiment(ExperimentConfig cfg, const RunOptions& options, std::ostream& log);

/// Human-readable contract of a catalog cocycle, base system or pipeline
/// ("pipelines" lists them). Throws InvalidArgument for unknown names.
std::string describe(const std::string& name);

/// 64-bit FNV-1a hash, printed in hex in run manifests.
std::uint64_t fnv1a(const std::string& text);

}  // namespace oslab
