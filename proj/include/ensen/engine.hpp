#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ensen/errors.hpp"
#include "ensen/functional.hpp"
#include "ensen/linalg.hpp"
#include "ensen/model.hpp"
#include "ensen/perturbation.hpp"
#include "ensen/rng.hpp"

namespace ensen {

// Per-time-level field of dF/dPsi estimates; the engine's principal output.
struct SensitivityMap {
  int time_level = 0;
  std::vector<double> values;
};

// State deviations (ePsi^n - Psibar^n) as columns, one per ensemble member.
struct EnsembleMatrix {
  int time_level = 0;
  linalg::DenseMatrix deviations;
};

// dF/dm_s entries: ((1F - Fbar), (2F - Fbar), ...) or a backward-mapped
// equivalent; length equals the ensemble size at assembly time.
struct FunctionalGradientVector {
  std::vector<double> values;
};

// (V^n)^-T = sigma^-2 ((Mtilde^n)^T Mhat^n)^T recorded at a restart level.
struct ReorthTransform {
  int time_level = 0;
  linalg::DenseMatrix v_inv_t;
};

// Replaces the built-in generation pipeline when set; arguments are the
// member index, the current goal map, and the previous members.
using PerturbationSource = std::function<std::vector<double>(
    int, const std::vector<double>&, const std::vector<std::vector<double>>&, Splitmix64&)>;

struct EngineConfig {
  int ensemble_size = 10;
  PerturbationConfig perturbation;
  linalg::RegularizationPolicy regularization;
  std::vector<int> output_levels; // empty = 10 equally spaced from level 0
  int reorth_every = 1;
  PerturbationSource perturbation_source; // unset = pipeline

  void validate() const {
    if (ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1");
    if (reorth_every < 1) throw ConfigError("reorth_every must be >= 1");
    perturbation.validate();
  }
};

inline std::vector<int> default_output_levels(int n_steps, int count = 10) {
  std::vector<int> levels;
  if (n_steps <= 0) return {0};
  for (int i = 0; i < count; ++i) {
    const int lvl = static_cast<int>(
        std::lround(static_cast<double>(i) * static_cast<double>(n_steps) / count));
    if (levels.empty() || levels.back() != lvl) levels.push_back(lvl);
  }
  return levels;
}

inline std::vector<int> resolve_output_levels(const EngineConfig& cfg, int n_steps) {
  std::vector<int> levels = cfg.output_levels.empty() ? default_output_levels(n_steps)
                                                      : cfg.output_levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (int l : levels)
    if (l < 0 || l > n_steps) throw ConfigError("output level outside [0, n_steps]");
  return levels;
}

// ghat^n = Mhat ((Mhat)^T Mhat + eps_s I)^-1 dFdms
inline SensitivityMap assemble_sensitivity_map(const EnsembleMatrix& m_hat,
                                               const FunctionalGradientVector& dfdms,
                                               const linalg::RegularizationPolicy& policy) {
  const linalg::Vector x =
      linalg::regularized_normal_solve(m_hat.deviations, dfdms.values, policy);
  SensitivityMap g;
  g.time_level = m_hat.time_level;
  g.values = linalg::matvec(m_hat.deviations, x);
  return g;
}

// Unperturbed forward run with the functional recorded.
inline Trajectory run_baseline(const ForwardModel& model, const Functional& functional) {
  Trajectory traj;
  traj.dt = model.dt();
  traj.states.reserve(static_cast<std::size_t>(model.step_count()) + 1);
  traj.states.push_back(model.initial_condition());
  check_state_finite(traj.states.front());
  for (int n = 0; n < model.step_count(); ++n)
    traj.states.push_back(model.step(traj.states.back()));
  functional.validate_for(model.dof_count(), model.step_count());
  traj.functional_value = functional.evaluate(traj);
  return traj;
}

// What one ensemble solve leaves behind. Full member trajectories are not
// retained; the per-level deviation columns at the requested levels plus the
// per-level functional tallies carry everything downstream consumers need.
struct EnsembleRunResult {
  int start_level = 0;
  int end_level = 0;
  std::vector<std::vector<double>> perturbations;  // member deviations at start_level
  std::map<int, EnsembleMatrix> kept;              // raw (pre-restart) deviations
  std::vector<double> functional_values;           // eF for full-horizon runs
  // contribs[e][n] = (dF/dPsi^n)^T (ePsi^n - Psibar^n), raw states
  std::vector<std::vector<double>> contribs;
  std::vector<int> reorth_levels;
  // G^n = (Mtilde^n)^T Mhat^n per restart level (upper triangular by
  // construction); (V^n)^-T = sigma^-2 (G^n)^T.
  std::map<int, linalg::DenseMatrix> reorth_dots;
  double sigma = 0.0;
  SensitivityMap g_refreshed;

  ReorthTransform transform_at(int level) const {
    const auto& g = reorth_dots.at(level);
    ReorthTransform t;
    t.time_level = level;
    t.v_inv_t = linalg::DenseMatrix(g.rows(), g.cols());
    const double s2 = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) t.v_inv_t(i, j) = s2 * g(j, i);
    return t;
  }
};

namespace detail {

// cur <- (V^n)^-T cur on the leading count x count block.
inline void apply_v_inv_t(const linalg::DenseMatrix& gdots, double sigma,
                          std::vector<double>& cur, int count) {
  const double s2 = 1.0 / (sigma * sigma);
  std::vector<double> next(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i)
    next[static_cast<std::size_t>(i)] =
        s2 * linalg::dot(gdots.col(static_cast<std::size_t>(i)), cur.data(),
                         static_cast<std::size_t>(count));
  cur = std::move(next);
}

} // namespace detail

// Truncated functional gradient (eFhat - Fbar)|^level for members 0..count-1,
// summed over levels ascending.
inline FunctionalGradientVector compute_dFdms_truncated(const EnsembleRunResult& run,
                                                        int level, int member_count = -1) {
  const int count = member_count < 0 ? static_cast<int>(run.contribs.size()) : member_count;
  FunctionalGradientVector out;
  out.values.resize(static_cast<std::size_t>(count), 0.0);
  for (int e = 0; e < count; ++e) {
    const auto& row = run.contribs[static_cast<std::size_t>(e)];
    double s = 0.0;
    for (std::size_t k = static_cast<std::size_t>(level); k < row.size(); ++k) s += row[k];
    out.values[static_cast<std::size_t>(e)] = s;
  }
  return out;
}

// Trajectory-based form, used by tests and by callers holding whole runs.
inline FunctionalGradientVector compute_dFdms_truncated(const Functional& functional,
                                                        const std::vector<Trajectory>& members,
                                                        const Trajectory& baseline, int level) {
  FunctionalGradientVector out;
  out.values.reserve(members.size());
  for (const Trajectory& m : members)
    out.values.push_back(functional.truncated_difference(m, baseline, level));
  return out;
}

namespace detail {

inline std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline std::vector<double> subtract(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// Options for the sequential member loop shared by the plain, window and
// re-orthogonalisation modes.
struct MemberLoopOptions {
  int start_level = 0;
  int end_level = -1;             // -1 = model.step_count()
  std::vector<int> keep_levels;   // deviation matrices to retain
  bool refresh = true;            // per-member goal-map refresh
  const SensitivityMap* carry = nullptr; // refresh rhs via (Mhat^end)^T carry
  std::vector<int> reorth_levels; // strictly inside (start_level, end_level)
  double sigma = 0.0;             // 0 = first member's perturbation norm
};

// dF/dm^level_s for members 0..count-1: walk backwards from the horizon end,
// applying each recorded (V^n)^-T and adding the direct contribution
// (Mhat^n)^T dF/dPsi^n at every level.
inline std::vector<double> backward_dfdms(const EnsembleRunResult& run,
                                          const Functional& functional, int n_steps,
                                          int target_level, int count) {
  std::vector<double> cur(static_cast<std::size_t>(count), 0.0);
  for (int n = n_steps; n >= target_level; --n) {
    if (n < n_steps) {
      auto it = run.reorth_dots.find(n);
      if (it != run.reorth_dots.end()) apply_v_inv_t(it->second, run.sigma, cur, count);
    }
    if (!functional.partial_is_zero(n, n_steps))
      for (int e = 0; e < count; ++e)
        cur[static_cast<std::size_t>(e)] +=
            run.contribs[static_cast<std::size_t>(e)][static_cast<std::size_t>(n)];
  }
  return cur;
}

inline EnsembleMatrix leading_matrix(const std::vector<std::vector<double>>& cols, int count,
                                     int level) {
  EnsembleMatrix m;
  m.time_level = level;
  m.deviations = linalg::DenseMatrix(cols.front().size(), static_cast<std::size_t>(count));
  for (int e = 0; e < count; ++e) m.deviations.set_col(static_cast<std::size_t>(e), cols[static_cast<std::size_t>(e)]);
  return m;
}

// Sequential ensemble solve (one member at a time): generate the perturbation
// weighted by the current goal map, run the member forward, then refresh the
// goal map from the members produced so far. With reorth_levels set, member
// deviations are re-orthonormalised against the earlier members at each listed
// level, the member restarts from the baseline plus its orthonormalised
// deviation, and the (V^n)^-T transforms are recorded.
inline EnsembleRunResult solve_ensembles_impl(const ForwardModel& model,
                                              const Functional& functional,
                                              const SensitivityMap& g0,
                                              const Trajectory& baseline,
                                              const EngineConfig& cfg,
                                              const MemberLoopOptions& opts,
                                              Splitmix64& rng) {
  cfg.validate();
  const int n_steps = model.step_count();
  const int start = opts.start_level;
  const int end = opts.end_level < 0 ? n_steps : opts.end_level;
  if (start < 0 || end > n_steps || start > end)
    throw ConfigError("member loop: bad level range");
  const int e_count = cfg.ensemble_size;
  const bool full_horizon = (start == 0 && end == n_steps);

  EnsembleRunResult run;
  run.start_level = start;
  run.end_level = end;
  run.reorth_levels = opts.reorth_levels;
  run.sigma = opts.sigma;

  std::vector<int> keep = opts.keep_levels;
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int lvl : keep) {
    if (lvl < start || lvl > end) throw ConfigError("keep level outside the run range");
    EnsembleMatrix m;
    m.time_level = lvl;
    m.deviations = linalg::DenseMatrix(static_cast<std::size_t>(model.dof_count()),
                                       static_cast<std::size_t>(e_count));
    run.kept.emplace(lvl, std::move(m));
  }

  // Orthonormalised deviations of the processed members per reorth level,
  // needed to orthogonalise the members that follow.
  std::map<int, std::vector<std::vector<double>>> tilde;
  for (int lvl : opts.reorth_levels) {
    if (lvl <= start || lvl >= end)
      throw ConfigError("reorth level must lie strictly inside the run range");
    run.reorth_dots.emplace(lvl, linalg::DenseMatrix(static_cast<std::size_t>(e_count),
                                                     static_cast<std::size_t>(e_count)));
  }

  SensitivityMap g_cur = g0;
  if (g_cur.values.empty())
    g_cur.values.assign(static_cast<std::size_t>(model.dof_count()), 1.0);
  g_cur.time_level = start;

  run.contribs.assign(static_cast<std::size_t>(e_count),
                      std::vector<double>(static_cast<std::size_t>(n_steps) + 1, 0.0));
  run.functional_values.assign(static_cast<std::size_t>(e_count), 0.0);

  const double dt = model.dt();
  const std::vector<double>& base_start = baseline.at(start).values;

  for (int e = 0; e < e_count; ++e) {
    std::vector<double> dm =
        cfg.perturbation_source
            ? cfg.perturbation_source(e, g_cur.values, run.perturbations, rng)
            : generate_member_perturbation(e, g_cur.values, run.perturbations,
                                           model.adjacency(), cfg.perturbation, rng,
                                           model.max_cells_across());
    if (!opts.reorth_levels.empty() && run.sigma == 0.0) run.sigma = linalg::norm2(dm);
    run.perturbations.push_back(dm);

    StateVector s;
    s.time_level = start;
    s.values = add(base_start, dm);

    double f_acc = 0.0;
    auto visit_level = [&](int n, const std::vector<double>& values, bool is_perturbation) {
      const std::vector<double>& base = baseline.at(n).values;
      if (!functional.partial_is_zero(n, n_steps))
        run.contribs[static_cast<std::size_t>(e)][static_cast<std::size_t>(n)] =
            functional.level_contribution(n, values, base, dt, n_steps);
      if (full_horizon) f_acc += functional.level_value(n, values, dt, n_steps);
      auto it = run.kept.find(n);
      if (it != run.kept.end()) {
        if (is_perturbation)
          it->second.deviations.set_col(static_cast<std::size_t>(e), dm);
        else
          it->second.deviations.set_col(static_cast<std::size_t>(e), subtract(values, base));
      }
    };

    visit_level(start, s.values, true);
    for (int n = start + 1; n <= end; ++n) {
      s = model.step(s);
      visit_level(n, s.values, false);
      auto git = run.reorth_dots.find(n);
      if (git != run.reorth_dots.end()) {
        std::vector<double> raw = subtract(s.values, baseline.at(n).values);
        const double raw_norm = linalg::norm2(raw);
        if (raw_norm == 0.0)
          throw DegenerateVector("re-orthogonalisation: member deviation vanished at level " +
                                 std::to_string(n));
        auto& basis = tilde[n];
        for (std::size_t k = 0; k < basis.size(); ++k)
          git->second(k, static_cast<std::size_t>(e)) = linalg::dot(basis[k], raw);
        std::vector<double> r = linalg::gram_schmidt_against(raw, basis);
        const double f = run.sigma / linalg::norm2(r);
        for (double& x : r) x *= f;
        git->second(static_cast<std::size_t>(e), static_cast<std::size_t>(e)) =
            linalg::dot(r, raw);
        basis.push_back(r);
        s.values = add(baseline.at(n).values, basis.back());
      }
    }
    run.functional_values[static_cast<std::size_t>(e)] = f_acc;

    if (opts.refresh) {
      FunctionalGradientVector rhs;
      if (opts.carry) {
        const EnsembleMatrix& m_end = run.kept.at(end);
        rhs.values.resize(static_cast<std::size_t>(e) + 1);
        for (int k = 0; k <= e; ++k)
          rhs.values[static_cast<std::size_t>(k)] =
              linalg::dot(m_end.deviations.col(static_cast<std::size_t>(k)),
                          opts.carry->values.data(), m_end.deviations.rows());
      } else {
        rhs.values = backward_dfdms(run, functional, n_steps, start, e + 1);
      }
      g_cur = assemble_sensitivity_map(leading_matrix(run.perturbations, e + 1, start), rhs,
                                       cfg.regularization);
    }
  }

  run.g_refreshed = g_cur;
  return run;
}

} // namespace detail

// Plain sequential ensemble solve over the whole horizon with per-member
// refresh of the level-`start` goal map.
inline EnsembleRunResult solve_ensembles(const ForwardModel& model, const Functional& functional,
                                         const SensitivityMap& g0, const Trajectory& baseline,
                                         const EngineConfig& cfg, Splitmix64& rng,
                                         const std::vector<int>& keep_levels) {
  detail::MemberLoopOptions opts;
  opts.keep_levels = keep_levels;
  return detail::solve_ensembles_impl(model, functional, g0, baseline, cfg, opts, rng);
}

// Goal-based single-window run: baseline, sequential ensemble solve with
// per-member goal refresh, then one map per requested output level.
inline std::vector<SensitivityMap> run_single_window_goalbased(const ForwardModel& model,
                                                               const Functional& functional,
                                                               const EngineConfig& cfg) {
  cfg.validate();
  const Trajectory baseline = run_baseline(model, functional);
  const std::vector<int> levels = resolve_output_levels(cfg, model.step_count());

  Splitmix64 rng(cfg.perturbation.rng_seed);
  std::vector<int> keep = levels;
  keep.push_back(0);
  SensitivityMap ones; // bootstrap map, all ones
  EnsembleRunResult run = solve_ensembles(model, functional, ones, baseline, cfg, rng, keep);

  std::vector<SensitivityMap> maps;
  maps.reserve(levels.size());
  for (int n : levels) {
    FunctionalGradientVector dfdms = compute_dFdms_truncated(run, n);
    maps.push_back(assemble_sensitivity_map(run.kept.at(n), dfdms, cfg.regularization));
  }
  return maps;
}

// Forward phase: members advance one step at a time and are re-orthonormalised
// against the earlier members every `every_n` levels, restarting from the
// baseline plus the orthonormalised deviation. Backward phase: dF/dm_s starts
// from the final-level functional differences and is pulled back through each
// recorded (V^n)^-T, assembling the map from the pre-restart deviations at
// every output level.
inline std::vector<SensitivityMap> run_with_reorthogonalisation(const ForwardModel& model,
                                                                const Functional& functional,
                                                                const EngineConfig& cfg,
                                                                int every_n) {
  cfg.validate();
  if (every_n < 1) throw ConfigError("re-orthogonalisation period must be >= 1");
  const int n_steps = model.step_count();
  const Trajectory baseline = run_baseline(model, functional);
  const std::vector<int> levels = resolve_output_levels(cfg, n_steps);

  detail::MemberLoopOptions opts;
  opts.keep_levels = levels;
  opts.keep_levels.push_back(0);
  for (int n = every_n; n < n_steps; n += every_n) opts.reorth_levels.push_back(n);

  Splitmix64 rng(cfg.perturbation.rng_seed);
  SensitivityMap ones;
  EnsembleRunResult run =
      detail::solve_ensembles_impl(model, functional, ones, baseline, cfg, opts, rng);

  std::vector<SensitivityMap> maps(levels.size());
  std::vector<double> cur(static_cast<std::size_t>(cfg.ensemble_size), 0.0);
  int out_idx = static_cast<int>(levels.size()) - 1;
  for (int n = n_steps; n >= 0; --n) {
    if (n < n_steps) {
      auto it = run.reorth_dots.find(n);
      if (it != run.reorth_dots.end())
        detail::apply_v_inv_t(it->second, run.sigma, cur, cfg.ensemble_size);
    }
    if (!functional.partial_is_zero(n, n_steps))
      for (int e = 0; e < cfg.ensemble_size; ++e)
        cur[static_cast<std::size_t>(e)] +=
            run.contribs[static_cast<std::size_t>(e)][static_cast<std::size_t>(n)];
    if (out_idx >= 0 && levels[static_cast<std::size_t>(out_idx)] == n) {
      FunctionalGradientVector rhs{cur};
      maps[static_cast<std::size_t>(out_idx)] =
          assemble_sensitivity_map(run.kept.at(n), rhs, cfg.regularization);
      --out_idx;
    }
    if (n == 0) break;
  }
  return maps;
}

} // namespace ensen
