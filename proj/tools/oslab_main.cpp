// oslab command line: run, validate and describe experiments.

#include "oslab/errors.hpp"
#include "oslab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Common {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string format;
};

std::optional<oslab::ExperimentConfig> load(const std::string& path, int& code) {
  try {
    return oslab::parse_config(oslab::load_config_file(path));
  } catch (const oslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    code = oslab::kExitConfig;
  } catch (const oslab::Error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    code = oslab::kExitIo;
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oslab: finite-scale Oseledets, large-deviation and continuity experiments"};
  app.set_version_flag("--version", std::string(oslab::kVersion));
  app.require_subcommand(1);

  Common opt;
  auto* run = app.add_subcommand("run", "Run the pipelines of a JSON config");
  run->add_option("-c,--config", opt.config, "Config file (JSON)")->required();
  run->add_option("-o,--out-dir", opt.out_dir, "Output directory (overrides output.dir)");
  run->add_option("--seed", opt.seed, "Master seed (overrides seed)");
  run->add_option("-j,--threads", opt.threads, "Worker threads (default: config, then OSL_LAB_THREADS, then 1)")
      ->check(CLI::PositiveNumber);
  run->add_option("--format", opt.format, "Table format")->check(CLI::IsMember({"csv", "json"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("-c,--config", validate_path, "Config file (JSON)")->required();

  std::string topic;
  auto* describe = app.add_subcommand("describe", "Show the contract of a cocycle, base, pipeline or check");
  describe->add_option("name", topic, "Catalog name, base kind, pipeline, 'ap' or 'pipelines'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oslab::kExitConfig;
  }

  if (*describe) {
    try {
      std::cout << oslab::describe(topic);
      return oslab::kExitOk;
    } catch (const oslab::Error& e) {
      std::cerr << e.what() << "\n";
      return oslab::kExitConfig;
    }
  }

  int code = oslab::kExitOk;
  if (*validate) {
    auto cfg = load(validate_path, code);
    if (!cfg) return code;
    try {
      oslab::validate_config(*cfg);
    } catch (const oslab::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return oslab::kExitConfig;
    }
    for (const auto& w : cfg->warnings) std::cout << "warning: " << w << "\n";
    std::cout << "ok: " << cfg->cocycle << " over " << cfg->base["kind"].get<std::string>() << ", pipelines:";
    for (const auto& p : cfg->pipelines) std::cout << " " << p;
    std::cout << "\n";
    return oslab::kExitOk;
  }

  auto cfg = load(opt.config, code);
  if (!cfg) return code;
  oslab::RunOptions ro;
  if (!opt.out_dir.empty()) ro.out_dir = opt.out_dir;
  ro.seed = opt.seed;
  ro.threads = opt.threads;
  if (opt.format == "csv") ro.format = oslab::OutputFormat::csv;
  if (opt.format == "json") ro.format = oslab::OutputFormat::json;
  return oslab::run_experiment(*cfg, ro, std::cerr);
}
