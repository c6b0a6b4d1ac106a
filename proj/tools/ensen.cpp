// Command-line front end: runs sensitivity-map experiments from JSON configs
// or bundled presets, verifies them against the direct-sensitivity oracle,
// and produces convergence-sweep tables.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ensen/config.hpp"
#include "ensen/presets.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON, or a manifest)");
  cmd->add_option("--preset", args.preset, "bundled preset name (see --list-presets)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides the config)");
  cmd->add_option("--seed", args.seed, "RNG seed (overrides the config)");
  cmd->add_option("--threads", args.threads, "worker threads for oracle runs and explicit windows");
}

ensen::ExperimentConfig load(const CommonArgs& args) {
  if (args.config_path.empty() == args.preset.empty())
    throw ensen::ConfigError("give exactly one of --config or --preset");
  ensen::json j = args.config_path.empty()
                      ? ensen::presets::get(args.preset)
                      : ensen::load_config_file(args.config_path);
  if (args.seed) j["method"]["seed"] = *args.seed;
  if (!args.out_dir.empty()) {
    j["output"]["directory"] = args.out_dir;
  } else if (!args.preset.empty()) {
    if (!j.contains("output") || !j["output"].contains("directory"))
      j["output"]["directory"] = "runs/" + args.preset;
  }
  ensen::ExperimentConfig cfg = ensen::parse_experiment(j);
  cfg.threads = std::max(cfg.threads, std::max(1, args.threads));
  return cfg;
}

void write_error_record(const std::filesystem::path& dir, const std::string& type,
                        const std::string& message) {
  try {
    std::filesystem::create_directories(dir);
    ensen::json err{{"error", type}, {"message", message}};
    ensen::io::write_text_file(dir / "error.json", err.dump(2) + "\n");
  } catch (...) {
    // the stderr record below is the fallback
  }
}

int run_guarded(const CommonArgs& args, int (*body)(const CommonArgs&)) {
  const std::filesystem::path out_dir = args.out_dir.empty() ? "out" : args.out_dir;
  std::string type;
  std::string message;
  int code = kExitOk;
  try {
    return body(args);
  } catch (const ensen::ConfigError& e) {
    type = "ConfigError";
    message = e.what();
    code = kExitConfig;
  } catch (const ensen::WindowMisalignment& e) {
    type = "WindowMisalignment";
    message = e.what();
    code = kExitConfig;
  } catch (const ensen::IoError& e) {
    type = "IoError";
    message = e.what();
    code = kExitIo;
  } catch (const ensen::Error& e) {
    type = "NumericalError";
    message = e.what();
    code = kExitNumerical;
  } catch (const std::exception& e) {
    type = "Error";
    message = e.what();
    code = kExitNumerical;
  }
  write_error_record(out_dir, type, message);
  std::cerr << "{\"error\":\"" << type << "\",\"message\":\"" << message << "\"}\n";
  return code;
}

int do_run(const CommonArgs& args) {
  ensen::ExperimentConfig cfg = load(args);
  ensen::RunArtifacts artifacts = ensen::run_experiment(cfg);
  std::printf("wrote %zu map file(s) under %s\n", artifacts.map_files.size(),
              cfg.out_dir.string().c_str());
  for (const auto& row : artifacts.metrics)
    std::printf("level %6d: l2_rel_error=%.6e cosine=%.6f peak_offset=%d\n", row.level,
                row.comparison.l2_rel_error, row.comparison.cosine_similarity,
                row.comparison.peak_offset_cells);
  return kExitOk;
}

int do_verify(const CommonArgs& args) {
  ensen::ExperimentConfig cfg = load(args);
  ensen::RunArtifacts artifacts = ensen::run_experiment(cfg, /*force_metrics=*/true);
  std::printf("level   l2_rel_error   cosine     peak_offset  zero\n");
  for (const auto& row : artifacts.metrics)
    std::printf("%5d   %.6e   %8.5f   %5d        %d\n", row.level,
                row.comparison.l2_rel_error, row.comparison.cosine_similarity,
                row.comparison.peak_offset_cells, row.comparison.zero_flag ? 1 : 0);
  std::printf("report written to %s\n", artifacts.metrics_file.string().c_str());
  return kExitOk;
}

int do_sweep(const CommonArgs& args) {
  ensen::ExperimentConfig cfg = load(args);
  const std::filesystem::path path = ensen::run_sweep(cfg);
  std::printf("sweep table written to %s\n", path.string().c_str());
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal-based ensemble sensitivity maps"};
  app.require_subcommand(0, 1);

  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "list bundled presets and exit");

  CommonArgs run_args, verify_args, sweep_args;
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment and write map files");
  add_common(run_cmd, run_args);
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run an experiment and compare against the oracle");
  add_common(verify_cmd, verify_args);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "convergence sweep over ensemble sizes and variants");
  add_common(sweep_cmd, sweep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (list_presets) {
    for (const auto& [name, cfg] : ensen::presets::all()) std::printf("%s\n", name.c_str());
    return kExitOk;
  }
  if (run_cmd->parsed()) return run_guarded(run_args, do_run);
  if (verify_cmd->parsed()) return run_guarded(verify_args, do_verify);
  if (sweep_cmd->parsed()) return run_guarded(sweep_args, do_sweep);
  std::puts(app.help().c_str());
  return kExitConfig;
}
