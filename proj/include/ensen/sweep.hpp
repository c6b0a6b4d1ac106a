#pragma once

#include <string>
#include <vector>

#include "ensen/engine.hpp"
#include "ensen/oracle.hpp"

namespace ensen {

struct SweepVariant {
  bool goal_based = true;
  bool reorth = false;

  std::string name() const {
    std::string s = goal_based ? "goal-based" : "non-goal-based";
    s += reorth ? "+reorth" : "";
    return s;
  }
};

struct SweepRow {
  int ensemble_size = 0;
  SweepVariant variant;
  std::uint64_t seed = 0;
  double max_g0 = 0.0;        // maximum value of ghat at t = 0
  double l2_rel_error = 0.0;  // vs the direct-sensitivity oracle at level 0
  bool failed = false;
  std::string error;
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

// For each (ensemble size, variant, seed): run the engine, record max ghat^0
// and the L2 error against the oracle map at level 0. Failures (singular
// systems, exhausted retries) are recorded, not fatal.
inline SweepTable convergence_sweep(const ForwardModel& model, const Functional& functional,
                                    const std::vector<int>& ensemble_sizes,
                                    const std::vector<SweepVariant>& variants,
                                    const std::vector<std::uint64_t>& seeds,
                                    const EngineConfig& base_cfg,
                                    const OracleConfig& oracle_cfg = {}) {
  SweepTable table;
  if (ensemble_sizes.empty()) return table;

  const SensitivityMap truth = direct_sensitivity(model, functional, 0, oracle_cfg);

  for (int e : ensemble_sizes) {
    for (const SweepVariant& variant : variants) {
      for (std::uint64_t seed : seeds) {
        SweepRow row;
        row.ensemble_size = e;
        row.variant = variant;
        row.seed = seed;
        EngineConfig cfg = base_cfg;
        cfg.ensemble_size = e;
        cfg.perturbation.weighting_enabled = variant.goal_based;
        cfg.perturbation.rng_seed = seed;
        cfg.output_levels = {0};
        try {
          const std::vector<SensitivityMap> maps =
              variant.reorth ? run_with_reorthogonalisation(model, functional, cfg,
                                                            base_cfg.reorth_every)
                             : run_single_window_goalbased(model, functional, cfg);
          const SensitivityMap& g0 = maps.front();
          double mx = g0.values.empty() ? 0.0 : g0.values.front();
          for (double v : g0.values) mx = std::max(mx, v);
          row.max_g0 = mx;
          row.l2_rel_error = compare_maps(truth, g0).l2_rel_error;
        } catch (const Error& err) {
          row.failed = true;
          row.error = err.what();
        }
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

} // namespace ensen
