#pragma once

#include <cmath>
#include <cstdlib>
#include <future>
#include <vector>

#include "ensen/engine.hpp"

namespace ensen {

// Brute-force ground truth: perturb each control in turn and difference the
// functional.
struct OracleConfig {
  enum class Mode { Forward, Central };
  double fd_epsilon = 1e-6; // multiplied by max(1, |baseline level state|_inf)
  Mode mode = Mode::Forward;
  int threads = 1;

  void validate() const {
    if (!(fd_epsilon > 0.0)) throw ConfigError("oracle: fd_epsilon must be positive");
  }
};

struct MapComparison {
  double l2_rel_error = 0.0;
  double cosine_similarity = 0.0;
  int peak_offset_cells = 0;
  bool zero_flag = false; // set when either map is identically zero
};

// entry i = (F(trajectory with state_i at `level` perturbed) - Fbar)/eps,
// or the central variant. States before `level` are the unperturbed ones.
inline SensitivityMap direct_sensitivity(const ForwardModel& model, const Functional& functional,
                                         int level, const Trajectory& baseline,
                                         const OracleConfig& cfg = {}) {
  cfg.validate();
  const int n_steps = model.step_count();
  if (level < 0 || level > n_steps) throw ConfigError("oracle: level outside [0, n_steps]");
  const int n = model.dof_count();
  const double dt = model.dt();

  double prefix = 0.0; // functional contributions from the untouched levels
  for (int k = 0; k < level; ++k)
    prefix += functional.level_value(k, baseline.at(k).values, dt, n_steps);

  double scale = 1.0;
  for (double v : baseline.at(level).values) scale = std::max(scale, std::fabs(v));
  const double eps = cfg.fd_epsilon * scale;

  auto run_from = [&](std::vector<double> state0) {
    StateVector s;
    s.values = std::move(state0);
    s.time_level = level;
    double f = prefix + functional.level_value(level, s.values, dt, n_steps);
    for (int k = level + 1; k <= n_steps; ++k) {
      s = model.step(s);
      f += functional.level_value(k, s.values, dt, n_steps);
    }
    return f;
  };

  const double f_bar = baseline.functional_value;
  SensitivityMap g;
  g.time_level = level;
  g.values.assign(static_cast<std::size_t>(n), 0.0);

  auto compute_range = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      std::vector<double> plus = baseline.at(level).values;
      plus[static_cast<std::size_t>(i)] += eps;
      const double fp = run_from(std::move(plus));
      if (cfg.mode == OracleConfig::Mode::Forward) {
        g.values[static_cast<std::size_t>(i)] = (fp - f_bar) / eps;
      } else {
        std::vector<double> minus = baseline.at(level).values;
        minus[static_cast<std::size_t>(i)] -= eps;
        const double fm = run_from(std::move(minus));
        g.values[static_cast<std::size_t>(i)] = (fp - fm) / (2.0 * eps);
      }
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    compute_range(0, n);
  } else {
    // independent per-dof runs, gathered in index order
    std::vector<std::future<void>> futs;
    const int chunk = (n + threads - 1) / threads;
    for (int lo = 0; lo < n; lo += chunk)
      futs.push_back(std::async(std::launch::async, compute_range, lo, std::min(n, lo + chunk)));
    for (auto& f : futs) f.get();
  }
  return g;
}

inline SensitivityMap direct_sensitivity(const ForwardModel& model, const Functional& functional,
                                         int level, const OracleConfig& cfg = {}) {
  const Trajectory baseline = run_baseline(model, functional);
  return direct_sensitivity(model, functional, level, baseline, cfg);
}

// Standard metrics with `a` as the reference map: |a-b|/|a|, cosine, and the
// distance between the |.|-argmax indices. Zero maps flag the comparison and
// pin the cosine at 0.
inline MapComparison compare_maps(const SensitivityMap& a, const SensitivityMap& b) {
  if (a.values.size() != b.values.size())
    throw DimensionMismatch("compare_maps: dimension mismatch");
  if (a.time_level != b.time_level)
    throw DimensionMismatch("compare_maps: time level mismatch");
  MapComparison c;
  const double na = linalg::norm2(a.values);
  const double nb = linalg::norm2(b.values);
  double diff2 = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    diff2 += d * d;
  }
  if (na > 0.0) {
    c.l2_rel_error = std::sqrt(diff2) / na;
  } else {
    c.l2_rel_error = nb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    c.zero_flag = true;
  }
  if (na > 0.0 && nb > 0.0) {
    c.cosine_similarity = linalg::dot(a.values, b.values) / (na * nb);
  } else {
    c.cosine_similarity = 0.0;
    c.zero_flag = true;
  }
  auto argmax_abs = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::fabs(v[i]) > std::fabs(v[best])) best = i;
    return best;
  };
  c.peak_offset_cells =
      std::abs(static_cast<int>(argmax_abs(a.values)) - static_cast<int>(argmax_abs(b.values)));
  return c;
}

} // namespace ensen
