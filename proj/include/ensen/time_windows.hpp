#pragma once

#include <future>
#include <map>
#include <string>
#include <vector>

#include "ensen/engine.hpp"

namespace ensen {

// Half-open interval [start_level, end_level) of whole time steps.
struct TimeWindow {
  int index = 0;
  int start_level = 0;
  int end_level = 0;
};

enum class WindowMode { SequentialBackward, Explicit };

// Default smoothing for windowed member generation. The goal-map weighting
// carries the spatial structure in window mode, so the smoother only has to
// suppress grid noise; the whole-horizon rule blurs the carried map's sharp
// features and the backward recursion degrades.
inline constexpr int kWindowedSmoothingDefault = 3;

inline std::vector<TimeWindow> make_windows_by_steps(int n_steps, int steps_per_window) {
  if (steps_per_window < 1) throw ConfigError("steps_per_window must be >= 1");
  if (n_steps < 1) throw ConfigError("time windows need at least one step");
  std::vector<TimeWindow> w;
  int b = 0, idx = 0;
  while (b < n_steps) {
    const int l = std::min(n_steps, b + steps_per_window);
    w.push_back({idx++, b, l});
    b = l;
  }
  return w;
}

inline std::vector<TimeWindow> make_windows_by_count(int n_steps, int count) {
  if (count < 1) throw ConfigError("window count must be >= 1");
  if (n_steps < count) throw ConfigError("more windows than time steps");
  std::vector<TimeWindow> w;
  int b = 0;
  for (int i = 0; i < count; ++i) {
    int len = n_steps / count + (i < n_steps % count ? 1 : 0);
    w.push_back({i, b, b + len});
    b += len;
  }
  return w;
}

inline std::vector<TimeWindow> validate_windows(std::vector<TimeWindow> windows, int n_steps) {
  if (windows.empty()) throw WindowMisalignment("no time windows given");
  std::sort(windows.begin(), windows.end(),
            [](const TimeWindow& a, const TimeWindow& b) { return a.start_level < b.start_level; });
  if (windows.front().start_level != 0)
    throw WindowMisalignment("first window must start at level 0");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i].index = static_cast<int>(i);
    if (windows[i].end_level <= windows[i].start_level)
      throw WindowMisalignment("window must cover at least one step");
    if (i + 1 < windows.size() && windows[i].end_level != windows[i + 1].start_level)
      throw WindowMisalignment("windows must tile the horizon without gaps or overlap");
  }
  if (windows.back().end_level != n_steps)
    throw WindowMisalignment("last window must end at the final level");
  return windows;
}

namespace detail {

struct WindowAssembly {
  std::map<int, SensitivityMap> maps; // at output levels inside this window
  SensitivityMap g_start;             // ghat at the window start, carried backward
};

// Backward combination for one window: dFdms at the window end comes from the
// functional differences (last window) or from (Mhat^l)^T ghat^l of the window
// behind it; maps at levels k in [b, l) add the in-window direct contributions
// sum_{q=k}^{l-1} (Mhat^q)^T dF/dPsi^q.
inline WindowAssembly assemble_window(const EnsembleRunResult& run, const Functional& functional,
                                      const TimeWindow& win, bool is_last,
                                      const SensitivityMap* carry,
                                      const std::vector<int>& output_levels,
                                      const linalg::RegularizationPolicy& reg, int n_steps) {
  WindowAssembly out;
  const int e_count = static_cast<int>(run.perturbations.size());

  FunctionalGradientVector dfdms_end;
  if (is_last) {
    dfdms_end = compute_dFdms_truncated(run, win.end_level);
  } else {
    const EnsembleMatrix& m_end = run.kept.at(win.end_level);
    dfdms_end.values.resize(static_cast<std::size_t>(e_count));
    for (int e = 0; e < e_count; ++e)
      dfdms_end.values[static_cast<std::size_t>(e)] =
          linalg::dot(m_end.deviations.col(static_cast<std::size_t>(e)), carry->values.data(),
                      m_end.deviations.rows());
  }

  auto is_output = [&](int lvl) {
    return std::binary_search(output_levels.begin(), output_levels.end(), lvl);
  };

  if (is_last && is_output(win.end_level))
    out.maps.emplace(win.end_level,
                     assemble_sensitivity_map(run.kept.at(win.end_level), dfdms_end, reg));

  std::vector<double> rhs = dfdms_end.values;
  for (int k = win.end_level - 1; k >= win.start_level; --k) {
    if (!functional.partial_is_zero(k, n_steps))
      for (int e = 0; e < e_count; ++e)
        rhs[static_cast<std::size_t>(e)] +=
            run.contribs[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)];
    if (k == win.start_level || is_output(k)) {
      FunctionalGradientVector v{rhs};
      SensitivityMap g = assemble_sensitivity_map(run.kept.at(k), v, reg);
      if (is_output(k)) out.maps.emplace(k, g);
      if (k == win.start_level) out.g_start = std::move(g);
    }
  }
  return out;
}

inline std::vector<int> window_keep_levels(const TimeWindow& win,
                                           const std::vector<int>& output_levels) {
  std::vector<int> keep{win.start_level, win.end_level};
  for (int lvl : output_levels)
    if (lvl >= win.start_level && lvl <= win.end_level) keep.push_back(lvl);
  return keep;
}

} // namespace detail

// Windows are processed in reverse order. Sequential-backward mode weights
// each window's perturbations with the map carried back from the window after
// it (warm start) and refreshes that map member by member; the final window
// warm-starts from the functional's own final-level partial, the only map
// available when the backward pass begins. Explicit mode generates and runs
// every window independently with all-ones weighting (optionally
// concurrently) and performs the backward combination afterwards.
inline std::vector<SensitivityMap> run_time_windows(const ForwardModel& model,
                                                    const Functional& functional,
                                                    const std::vector<TimeWindow>& windows_in,
                                                    WindowMode mode, const EngineConfig& cfg,
                                                    int threads = 1) {
  cfg.validate();
  const int n_steps = model.step_count();
  const std::vector<TimeWindow> windows = validate_windows(windows_in, n_steps);
  const std::vector<int> levels = resolve_output_levels(cfg, n_steps);
  const Trajectory baseline = run_baseline(model, functional);
  const int w_count = static_cast<int>(windows.size());

  // With one window the recursion degenerates to the plain goal-based run:
  // all-ones bootstrap, per-member refresh, whole-horizon smoothing default.
  // With several windows the weighting comes from the carried map alone (a
  // small in-window ensemble cannot out-estimate it, and refreshing against
  // it herds the members onto each other), and the default smoothing is kept
  // light so the members can track the carried map's sharp features.
  EngineConfig wcfg = cfg;
  if (w_count > 1 && !wcfg.perturbation.smoothing_steps)
    wcfg.perturbation.smoothing_steps = kWindowedSmoothingDefault;

  SensitivityMap final_partial;
  final_partial.time_level = n_steps;
  final_partial.values = functional.partial_wrt_state(baseline, n_steps);
  const bool have_final_partial = w_count > 1 &&
                                  mode == WindowMode::SequentialBackward &&
                                  linalg::norm2(final_partial.values) > 0.0;

  std::map<int, SensitivityMap> collected;
  SensitivityMap carry;

  auto run_one = [&](int w, const SensitivityMap* warm, const SensitivityMap* refresh_carry) {
    const TimeWindow& win = windows[static_cast<std::size_t>(w)];
    detail::MemberLoopOptions opts;
    opts.start_level = win.start_level;
    opts.end_level = win.end_level;
    opts.keep_levels = detail::window_keep_levels(win, levels);
    opts.refresh = (mode == WindowMode::SequentialBackward) && w_count == 1;
    opts.carry = opts.refresh ? refresh_carry : nullptr;
    Splitmix64 rng =
        Splitmix64::derived(wcfg.perturbation.rng_seed, static_cast<std::uint64_t>(w));
    SensitivityMap g0;
    if (warm) g0 = *warm;
    return detail::solve_ensembles_impl(model, functional, g0, baseline, wcfg, opts, rng);
  };

  std::vector<EnsembleRunResult> runs(windows.size());
  if (mode == WindowMode::Explicit) {
    threads = std::max(1, threads);
    for (int base = 0; base < w_count; base += threads) {
      const int batch = std::min(threads, w_count - base);
      std::vector<std::future<EnsembleRunResult>> futs;
      futs.reserve(static_cast<std::size_t>(batch));
      for (int k = 0; k < batch; ++k)
        futs.push_back(std::async(std::launch::async,
                                  [&run_one, w = base + k]() { return run_one(w, nullptr, nullptr); }));
      for (int k = 0; k < batch; ++k)
        runs[static_cast<std::size_t>(base + k)] = futs[static_cast<std::size_t>(k)].get();
    }
    for (int w = w_count - 1; w >= 0; --w) {
      const bool is_last = (w == w_count - 1);
      detail::WindowAssembly res = detail::assemble_window(
          runs[static_cast<std::size_t>(w)], functional, windows[static_cast<std::size_t>(w)],
          is_last, is_last ? nullptr : &carry, levels, cfg.regularization, n_steps);
      for (auto& [lvl, g] : res.maps) collected.insert_or_assign(lvl, std::move(g));
      carry = std::move(res.g_start);
    }
  } else {
    for (int w = w_count - 1; w >= 0; --w) {
      const bool is_last = (w == w_count - 1);
      const SensitivityMap* warm =
          is_last ? (have_final_partial ? &final_partial : nullptr) : &carry;
      EnsembleRunResult run = run_one(w, warm, is_last ? nullptr : &carry);
      detail::WindowAssembly res = detail::assemble_window(
          run, functional, windows[static_cast<std::size_t>(w)], is_last,
          is_last ? nullptr : &carry, levels, cfg.regularization, n_steps);
      for (auto& [lvl, g] : res.maps) collected.insert_or_assign(lvl, std::move(g));
      carry = std::move(res.g_start);
    }
  }

  std::vector<SensitivityMap> out;
  out.reserve(levels.size());
  for (int lvl : levels) out.push_back(collected.at(lvl));
  return out;
}

} // namespace ensen
