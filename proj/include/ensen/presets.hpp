#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensen/errors.hpp"

namespace ensen::presets {

using nlohmann::json;

// Bundled experiment presets, one per figure-scale study: the 1D upwind and
// NVD runs, the mesh-refinement series, the time-window and explicit-window
// series, the convergence sweep, and the 2D one-vs-seven-window runs.
inline const std::map<std::string, json>& all() {
  static const std::map<std::string, json> presets = [] {
    std::map<std::string, json> p;

    auto model_1d = [](const char* scheme, int n_cells, double dt, int n_steps) {
      return json{{"type", "advection1d"}, {"scheme", scheme}, {"n_cells", n_cells},
                  {"domain_length", 100.0}, {"dt", dt},        {"n_steps", n_steps}};
    };
    auto func_1d = [](int n_cells) {
      return json{{"kind", "point-value-at-final-time"},
                  {"target_cell", static_cast<int>(0.85 * n_cells)}};
    };
    const json model_2d{{"type", "advection2d"}};
    const json func_2d{{"kind", "point-value-at-final-time"},
                       {"target_point", {4.0, 1.5}}};

    // upwind, 10 sampled levels
    p["fig2a"] = {{"model", model_1d("upwind", 101, 0.1, 600)},
                  {"functional", func_1d(101)},
                  {"method", {{"mode", "plain"}, {"ensemble_size", 10}, {"epsilon", 1.0},
                              {"seed", 101}}}};
    p["fig2b"] = p["fig2a"];
    p["fig2b"]["method"]["weighting"] = false;
    p["fig2c"] = p["fig2a"];
    p["fig2c"]["method"]["mode"] = "reorth";
    p["fig2d"] = {{"model", model_1d("upwind", 101, 0.1, 600)},
                  {"functional", func_1d(101)},
                  {"method", {{"mode", "reorth"}, {"ensemble_size", 101}, {"epsilon", 1.0},
                              {"seed", 11}}},
                  {"output", {{"write_metrics", true}}}};

    // long-horizon NVD with re-orthogonalisation
    for (auto [name, e] : {std::pair{"fig3a", 20}, {"fig3b", 40}, {"fig3c", 101}}) {
      p[name] = {{"model", model_1d("nvd", 101, 0.1, 3600)},
                 {"functional", func_1d(101)},
                 {"method", {{"mode", "reorth"}, {"ensemble_size", e}, {"epsilon", 1.0},
                             {"seed", 9}}}};
    }

    // mesh refinement at constant Courant number
    for (auto [name, n] : {std::pair{"fig4a", 101}, {"fig4b", 401}, {"fig4c", 1001}}) {
      const double dx = 100.0 / (n - 1);
      p[name] = {{"model", model_1d("nvd", n, 0.1 * dx, 600 * (n - 1) / 100)},
                 {"functional", func_1d(n)},
                 {"method", {{"mode", "plain"}, {"ensemble_size", 20}, {"epsilon", 1.0},
                             {"seed", 77}}}};
    }

    // sequential one-step time windows
    for (auto [name, e] : {std::pair{"fig5a", 5}, {"fig5b", 10}, {"fig5c", 20},
                           {"fig5d", 101}}) {
      p[name] = {{"model", model_1d("nvd", 101, 0.1, 600)},
                 {"functional", func_1d(101)},
                 {"method", {{"mode", "windows-sequential"}, {"ensemble_size", e},
                             {"epsilon", 1.0}, {"seed", 5},
                             {"windows", {{"steps_per_window", 1}}}}}};
    }

    // explicit one-step time windows
    for (auto [name, e, goal] : {std::tuple{"fig6a", 25, true}, {"fig6b", 30, false},
                                 {"fig6c", 30, true}, {"fig6d", 50, true}}) {
      p[name] = {{"model", model_1d("nvd", 101, 0.1, 600)},
                 {"functional", func_1d(101)},
                 {"method", {{"mode", "windows-explicit"}, {"ensemble_size", e},
                             {"epsilon", 1.0}, {"seed", 7}, {"weighting", goal},
                             {"windows", {{"steps_per_window", 1}}}}}};
    }

    // convergence of max ghat^0 with ensemble size
    p["fig7"] = {{"model", model_1d("nvd", 101, 0.1, 600)},
                 {"functional", func_1d(101)},
                 {"method", {{"mode", "reorth"}, {"epsilon", 1.0}, {"seed", 101}}},
                 {"sweep", {{"ensemble_sizes", {5, 10, 20, 30, 40, 60, 80, 101}},
                            {"variants", json::array({{{"goal_based", true}, {"reorth", true}},
                                                      {{"goal_based", false}, {"reorth", true}}})},
                            {"seeds", {101, 202, 303}}}}};

    // 2D: one bare window vs seven windows with all features
    for (auto [name, e] : {std::pair{"fig9-1w", 20}, {"fig10-1w", 40}}) {
      p[name] = {{"model", model_2d},
                 {"functional", func_2d},
                 {"method", {{"mode", "plain"}, {"ensemble_size", e}, {"seed", 3},
                             {"smoothing_steps", 0}, {"weighting", false},
                             {"orthogonalise", false}}},
                 {"output", {{"levels", {0, 14, 28}}}}};
    }
    for (auto [name, e] : {std::pair{"fig9-7w", 20}, {"fig10-7w", 40}}) {
      p[name] = {{"model", model_2d},
                 {"functional", func_2d},
                 {"method", {{"mode", "windows-sequential"}, {"ensemble_size", e},
                             {"seed", 3}, {"smoothing_steps", 3},
                             {"windows", {{"count", 7}}}}},
                 {"output", {{"levels", {0, 14, 28}}}}};
    }
    return p;
  }();
  return presets;
}

inline json get(const std::string& name) {
  const auto& p = all();
  auto it = p.find(name);
  if (it == p.end()) {
    std::string names;
    for (const auto& [k, v] : p) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
  }
  return it->second;
}

} // namespace ensen::presets
