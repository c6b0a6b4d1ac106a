#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensen/engine.hpp"
#include "ensen/io.hpp"
#include "ensen/models/advection1d.hpp"
#include "ensen/models/advection2d.hpp"
#include "ensen/oracle.hpp"
#include "ensen/sweep.hpp"
#include "ensen/time_windows.hpp"

namespace ensen {

using nlohmann::json;

enum class MethodMode { Plain, Reorth, WindowsSequential, WindowsExplicit };

struct ExperimentConfig {
  json raw;                  // canonical config echo for the manifest
  json model_block;
  json functional_block;
  json method_block;
  json output_block;

  MethodMode mode = MethodMode::Plain;
  EngineConfig engine;
  int every_n = 1;
  int window_count = 0;      // one of the two window specs may be set
  int steps_per_window = 0;
  std::filesystem::path out_dir = "out";
  bool write_metrics = false;
  int threads = 1;

  // sweep block (sweep subcommand only)
  std::vector<int> sweep_sizes;
  std::vector<SweepVariant> sweep_variants;
  std::vector<std::uint64_t> sweep_seeds;
};

namespace detail_cfg {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline void require_object(const json& j, const char* name) {
  if (!j.is_object()) throw ConfigError(std::string(name) + " block must be an object");
}

} // namespace detail_cfg

inline std::unique_ptr<ForwardModel> build_model(const json& m) {
  using detail_cfg::get_or;
  detail_cfg::require_object(m, "model");
  const std::string type = m.value("type", "");
  try {
    if (type == "advection1d") {
      models::Advection1DConfig c;
      c.n_cells = get_or(m, "n_cells", c.n_cells);
      c.domain_length = get_or(m, "domain_length", c.domain_length);
      c.dt = get_or(m, "dt", c.dt);
      c.n_steps = get_or(m, "n_steps", c.n_steps);
      c.velocity = get_or(m, "velocity", c.velocity);
      c.inflow_value = get_or(m, "inflow_value", c.inflow_value);
      c.initial_value = get_or(m, "initial_value", c.initial_value);
      const std::string scheme = m.value("scheme", "upwind");
      if (scheme == "upwind")
        c.scheme = models::Scheme1D::Upwind;
      else if (scheme == "nvd")
        c.scheme = models::Scheme1D::Nvd;
      else
        throw ConfigError("unknown 1d scheme: " + scheme);
      return std::make_unique<models::Advection1D>(c);
    }
    if (type == "advection2d") {
      models::Advection2DConfig c;
      c.nodes_per_side = get_or(m, "nodes_per_side", c.nodes_per_side);
      c.domain_size = get_or(m, "domain_size", c.domain_size);
      c.dt = get_or(m, "dt", c.dt);
      c.t_final = get_or(m, "t_final", c.t_final);
      c.velocity_x = get_or(m, "velocity_x", c.velocity_x);
      c.initial_value = get_or(m, "initial_value", c.initial_value);
      c.inflow_value = get_or(m, "inflow_value", c.inflow_value);
      return std::make_unique<models::Advection2D>(c);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model block: ") + e.what());
  }
  throw ConfigError("model.type must be advection1d or advection2d");
}

// Cell/node indices in config files are 1-based, matching the map-file rows;
// internal indices are 0-based.
inline Functional build_functional(const json& f, const ForwardModel& model) {
  detail_cfg::require_object(f, "functional");
  const std::string kind = f.value("kind", "point-value-at-final-time");
  try {
    auto target_from = [&](const json& blk) -> int {
      if (blk.contains("target_point")) {
        const auto* m2 = dynamic_cast<const models::Advection2D*>(&model);
        if (!m2) throw ConfigError("target_point requires the 2d model");
        auto pt = blk.at("target_point").get<std::vector<double>>();
        if (pt.size() != 2) throw ConfigError("target_point must be [x, y]");
        return m2->nearest_node(pt[0], pt[1]);
      }
      for (const char* key : {"target_cell", "target_node", "node"})
        if (blk.contains(key)) return blk.at(key).get<int>() - 1;
      throw ConfigError("functional: missing target");
    };
    Functional out = [&] {
      if (kind == "point-value-at-final-time")
        return Functional::point_at_final_time(target_from(f));
      if (kind == "time-integral-at-node")
        return Functional::time_integral_at_node(target_from(f));
      if (kind == "custom") {
        std::map<int, std::vector<double>> w;
        for (const json& entry : f.at("weights")) {
          const int level = entry.at("level").get<int>();
          w[level] = entry.at("values").get<std::vector<double>>();
        }
        return Functional::custom(std::move(w));
      }
      throw ConfigError("unknown functional kind: " + kind);
    }();
    out.validate_for(model.dof_count(), model.step_count());
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("functional block: ") + e.what());
  }
}

inline ExperimentConfig parse_experiment(const json& j) {
  using detail_cfg::get_or;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("model") || !j.contains("functional") || !j.contains("method"))
    throw ConfigError("config needs model, functional and method blocks");
  cfg.model_block = j.at("model");
  cfg.functional_block = j.at("functional");
  cfg.method_block = j.at("method");
  cfg.output_block = j.value("output", json::object());

  try {
    const json& m = cfg.method_block;
    const std::string mode = m.value("mode", "plain");
    if (mode == "plain")
      cfg.mode = MethodMode::Plain;
    else if (mode == "reorth")
      cfg.mode = MethodMode::Reorth;
    else if (mode == "windows-sequential")
      cfg.mode = MethodMode::WindowsSequential;
    else if (mode == "windows-explicit")
      cfg.mode = MethodMode::WindowsExplicit;
    else
      throw ConfigError("unknown method.mode: " + mode);

    cfg.engine.ensemble_size = get_or(m, "ensemble_size", 10);
    cfg.engine.perturbation.epsilon = get_or(m, "epsilon", 1e-4);
    cfg.engine.perturbation.weighting_enabled = get_or(m, "weighting", true);
    cfg.engine.perturbation.orthogonalise_enabled = get_or(m, "orthogonalise", true);
    cfg.engine.perturbation.rng_seed = get_or<std::uint64_t>(m, "seed", 0);
    cfg.engine.perturbation.retry_budget = get_or(m, "retry_budget", 5);
    if (m.contains("smoothing_steps") && !m.at("smoothing_steps").is_string())
      cfg.engine.perturbation.smoothing_steps = m.at("smoothing_steps").get<int>();

    // regularization default: on for the plain mode, off for the time-window
    // and re-orthogonalisation modes
    if (m.contains("alpha_s") && !m.at("alpha_s").is_string()) {
      cfg.engine.regularization.alpha_s = m.at("alpha_s").get<double>();
      cfg.engine.regularization.enabled = cfg.engine.regularization.alpha_s > 0.0;
    } else {
      cfg.engine.regularization.enabled = cfg.mode == MethodMode::Plain;
      cfg.engine.regularization.alpha_s = 1e-14;
    }

    cfg.every_n = get_or(m, "every_n", 1);
    if (m.contains("windows")) {
      const json& w = m.at("windows");
      cfg.window_count = get_or(w, "count", 0);
      cfg.steps_per_window = get_or(w, "steps_per_window", 0);
      if ((cfg.window_count > 0) == (cfg.steps_per_window > 0))
        throw ConfigError("windows: give exactly one of count or steps_per_window");
    } else if (cfg.mode == MethodMode::WindowsSequential ||
               cfg.mode == MethodMode::WindowsExplicit) {
      throw ConfigError("window modes need a method.windows block");
    }

    const json& o = cfg.output_block;
    if (o.contains("levels") && !o.at("levels").is_string())
      cfg.engine.output_levels = o.at("levels").get<std::vector<int>>();
    cfg.out_dir = o.value("directory", std::string("out"));
    cfg.write_metrics = get_or(o, "write_metrics", false);
    cfg.threads = get_or(o, "threads", 1);

    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      cfg.sweep_sizes = s.at("ensemble_sizes").get<std::vector<int>>();
      for (const json& v : s.at("variants"))
        cfg.sweep_variants.push_back(
            SweepVariant{v.value("goal_based", true), v.value("reorth", false)});
      for (const json& v : s.at("seeds")) cfg.sweep_seeds.push_back(v.get<std::uint64_t>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("method/output block: ") + e.what());
  }
  return cfg;
}

// Resolve the scaling rule from the model dimension unless the config pins it.
inline void finalize_for_model(ExperimentConfig& cfg, const ForwardModel& model) {
  const std::string rule = cfg.method_block.value("scaling_rule", "auto");
  if (rule == "norm-1d")
    cfg.engine.perturbation.scaling_rule = ScalingRule::Norm1D;
  else if (rule == "range-2d3d")
    cfg.engine.perturbation.scaling_rule = ScalingRule::Range2D3D;
  else if (rule == "auto")
    cfg.engine.perturbation.scaling_rule =
        model.coord_dim() == 1 ? ScalingRule::Norm1D : ScalingRule::Range2D3D;
  else
    throw ConfigError("unknown scaling_rule: " + rule);
}

inline std::vector<TimeWindow> resolve_windows(const ExperimentConfig& cfg, int n_steps) {
  if (cfg.window_count > 0) return make_windows_by_count(n_steps, cfg.window_count);
  return make_windows_by_steps(n_steps, cfg.steps_per_window);
}

inline std::vector<SensitivityMap> run_method(const ExperimentConfig& cfg,
                                              const ForwardModel& model,
                                              const Functional& functional) {
  switch (cfg.mode) {
    case MethodMode::Plain:
      return run_single_window_goalbased(model, functional, cfg.engine);
    case MethodMode::Reorth:
      return run_with_reorthogonalisation(model, functional, cfg.engine, cfg.every_n);
    case MethodMode::WindowsSequential:
      return run_time_windows(model, functional, resolve_windows(cfg, model.step_count()),
                              WindowMode::SequentialBackward, cfg.engine, cfg.threads);
    case MethodMode::WindowsExplicit:
      return run_time_windows(model, functional, resolve_windows(cfg, model.step_count()),
                              WindowMode::Explicit, cfg.engine, cfg.threads);
  }
  throw ConfigError("unhandled method mode");
}

inline OracleConfig oracle_for(const ExperimentConfig& cfg, const ForwardModel& model) {
  OracleConfig o;
  // central differences for the non-linear scheme, forward elsewhere
  const auto* m1 = dynamic_cast<const models::Advection1D*>(&model);
  if (m1 && m1->config().scheme == models::Scheme1D::Nvd)
    o.mode = OracleConfig::Mode::Central;
  o.threads = cfg.threads;
  return o;
}

struct RunArtifacts {
  std::vector<std::filesystem::path> map_files;
  std::filesystem::path manifest_file;
  std::filesystem::path metrics_file; // empty when metrics were not requested
  std::vector<io::MetricsRow> metrics;
};

// Runs the configured experiment and writes per-level map files, a manifest
// (config echo + seed + content hash) and, when requested, oracle metrics.
inline RunArtifacts run_experiment(const ExperimentConfig& cfg, bool force_metrics = false) {
  std::unique_ptr<ForwardModel> model = build_model(cfg.model_block);
  Functional functional = build_functional(cfg.functional_block, *model);
  ExperimentConfig resolved = cfg;
  finalize_for_model(resolved, *model);
  resolved.engine.validate();

  const std::string config_hash = io::sha1_hex(cfg.raw.dump());
  std::filesystem::create_directories(cfg.out_dir);

  std::vector<SensitivityMap> maps = run_method(resolved, *model, functional);

  RunArtifacts artifacts;
  json manifest;
  manifest["config"] = cfg.raw;
  manifest["seed"] = resolved.engine.perturbation.rng_seed;
  manifest["config_hash"] = config_hash;
  json outputs = json::array();
  for (const SensitivityMap& g : maps) {
    char name[40];
    std::snprintf(name, sizeof(name), "g_level_%06d.dat", g.time_level);
    const std::filesystem::path path = cfg.out_dir / name;
    io::write_map_file(path, g, *model, config_hash);
    artifacts.map_files.push_back(path);
    outputs.push_back(name);
  }

  if (cfg.write_metrics || force_metrics) {
    const Trajectory baseline = run_baseline(*model, functional);
    const OracleConfig ocfg = oracle_for(resolved, *model);
    for (const SensitivityMap& g : maps) {
      SensitivityMap truth =
          direct_sensitivity(*model, functional, g.time_level, baseline, ocfg);
      artifacts.metrics.push_back({g.time_level, compare_maps(truth, g)});
    }
    artifacts.metrics_file = cfg.out_dir / "metrics.csv";
    io::write_text_file(artifacts.metrics_file, io::metrics_csv(artifacts.metrics));
    outputs.push_back("metrics.csv");
  }

  manifest["outputs"] = outputs;
  artifacts.manifest_file = cfg.out_dir / "manifest.json";
  io::write_text_file(artifacts.manifest_file, manifest.dump(2) + "\n");
  return artifacts;
}

inline std::filesystem::path run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_sizes.empty() && cfg.sweep_variants.empty())
    throw ConfigError("sweep subcommand needs a sweep block");
  std::unique_ptr<ForwardModel> model = build_model(cfg.model_block);
  Functional functional = build_functional(cfg.functional_block, *model);
  ExperimentConfig resolved = cfg;
  finalize_for_model(resolved, *model);

  std::vector<SweepVariant> variants = cfg.sweep_variants;
  if (variants.empty()) variants.push_back(SweepVariant{});
  std::vector<std::uint64_t> seeds = cfg.sweep_seeds;
  if (seeds.empty()) seeds.push_back(resolved.engine.perturbation.rng_seed);

  SweepTable table = convergence_sweep(*model, functional, cfg.sweep_sizes, variants, seeds,
                                       resolved.engine, oracle_for(resolved, *model));
  std::ostringstream os;
  os << "ensemble_size,variant,seed,max_g0,l2_rel_error,failed,error\n";
  for (const SweepRow& r : table.rows) {
    os << r.ensemble_size << ',' << r.variant.name() << ',' << r.seed << ','
       << io::format_double(r.max_g0) << ',' << io::format_double(r.l2_rel_error) << ','
       << (r.failed ? 1 : 0) << ",\"" << r.error << "\"\n";
  }
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path path = cfg.out_dir / "sweep.csv";
  io::write_text_file(path, os.str());
  return path;
}

// Accepts either a raw experiment config or a previously written manifest
// (re-running a manifest reproduces the original outputs bitwise).
inline json load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash"))
    return j.at("config");
  return j;
}

} // namespace ensen
