#pragma once

#include <map>
#include <vector>

#include "ensen/errors.hpp"
#include "ensen/model.hpp"

namespace ensen {

enum class FunctionalKind { PointValueAtFinalTime, TimeIntegralAtNode, Custom };

// Goal definition F(Psi). All built-in kinds are linear in the states with
// per-level weight vectors w^k, so F = sum_k (w^k)^T Psi^k:
//   point-value-at-final-time:  w^{N_t} = e_target, zero elsewhere
//   time-integral-at-node:      w^k = dt * e_target for every k
//   custom:                     user-supplied per-(dof,level) weights
// F depends on the controls only through the solution, so dF/dm partials
// are zero for every kind.
class Functional {
public:
  static Functional point_at_final_time(int dof_index) {
    Functional f;
    f.kind_ = FunctionalKind::PointValueAtFinalTime;
    f.target_ = dof_index;
    return f;
  }

  static Functional time_integral_at_node(int dof_index) {
    Functional f;
    f.kind_ = FunctionalKind::TimeIntegralAtNode;
    f.target_ = dof_index;
    return f;
  }

  // weights_by_level: missing levels weigh zero.
  static Functional custom(std::map<int, std::vector<double>> weights_by_level) {
    Functional f;
    f.kind_ = FunctionalKind::Custom;
    f.weights_ = std::move(weights_by_level);
    return f;
  }

  FunctionalKind kind() const { return kind_; }
  int target_index() const { return target_; }

  void validate_for(int dof_count, int step_count) const {
    if (kind_ != FunctionalKind::Custom) {
      if (target_ < 0 || target_ >= dof_count)
        throw ConfigError("functional target index out of range");
    } else {
      if (weights_.empty()) throw ConfigError("custom functional has no weights");
      for (const auto& [level, w] : weights_) {
        if (level < 0 || level > step_count)
          throw ConfigError("custom functional weight level out of range");
        if (static_cast<int>(w.size()) != dof_count)
          throw ConfigError("custom functional weight length mismatch");
      }
    }
  }

  // True when dF/dPsi^q vanishes identically (cheap skip for assembly terms).
  bool partial_is_zero(int q, int last_level) const {
    switch (kind_) {
      case FunctionalKind::PointValueAtFinalTime: return q != last_level;
      case FunctionalKind::TimeIntegralAtNode: return false;
      case FunctionalKind::Custom: return weights_.find(q) == weights_.end();
    }
    return true;
  }

  // (w^q)^T Psi^q for streaming evaluation.
  double level_value(int level, const std::vector<double>& state, double dt,
                     int last_level) const {
    switch (kind_) {
      case FunctionalKind::PointValueAtFinalTime:
        return level == last_level ? state[static_cast<std::size_t>(target_)] : 0.0;
      case FunctionalKind::TimeIntegralAtNode:
        return dt * state[static_cast<std::size_t>(target_)];
      case FunctionalKind::Custom: {
        auto it = weights_.find(level);
        if (it == weights_.end()) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < state.size(); ++i) s += it->second[i] * state[i];
        return s;
      }
    }
    return 0.0;
  }

  // (w^q)^T (Psi^q - Psibar^q): one level's contribution to (F - Fbar)|^n.
  double level_contribution(int level, const std::vector<double>& state,
                            const std::vector<double>& baseline_state, double dt,
                            int last_level) const {
    switch (kind_) {
      case FunctionalKind::PointValueAtFinalTime:
        return level == last_level
                   ? state[static_cast<std::size_t>(target_)] -
                         baseline_state[static_cast<std::size_t>(target_)]
                   : 0.0;
      case FunctionalKind::TimeIntegralAtNode:
        return dt * (state[static_cast<std::size_t>(target_)] -
                     baseline_state[static_cast<std::size_t>(target_)]);
      case FunctionalKind::Custom: {
        auto it = weights_.find(level);
        if (it == weights_.end()) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < state.size(); ++i)
          s += it->second[i] * (state[i] - baseline_state[i]);
        return s;
      }
    }
    return 0.0;
  }

  double evaluate(const Trajectory& traj) const {
    const int last = traj.last_level();
    double s = 0.0;
    for (int n = 0; n <= last; ++n)
      s += level_value(n, traj.at(n).values, traj.dt, last);
    return s;
  }

  // Direct (explicit) partial dF/dPsi^q.
  std::vector<double> partial_wrt_state(const Trajectory& traj, int q) const {
    const int last = traj.last_level();
    const std::size_t n = traj.at(0).values.size();
    std::vector<double> g(n, 0.0);
    switch (kind_) {
      case FunctionalKind::PointValueAtFinalTime:
        if (q == last) g[static_cast<std::size_t>(target_)] = 1.0;
        break;
      case FunctionalKind::TimeIntegralAtNode:
        g[static_cast<std::size_t>(target_)] = traj.dt;
        break;
      case FunctionalKind::Custom: {
        auto it = weights_.find(q);
        if (it != weights_.end()) g = it->second;
        break;
      }
    }
    return g;
  }

  // (F - Fbar)|^n: contributions from levels >= n only; levels before n are
  // identical to the unperturbed solution by construction.
  double truncated_difference(const Trajectory& member, const Trajectory& baseline,
                              int n) const {
    const int last = member.last_level();
    double s = 0.0;
    for (int k = n; k <= last; ++k)
      s += level_contribution(k, member.at(k).values, baseline.at(k).values, member.dt, last);
    return s;
  }

private:
  Functional() = default;

  FunctionalKind kind_ = FunctionalKind::PointValueAtFinalTime;
  int target_ = 0;
  std::map<int, std::vector<double>> weights_;
};

} // namespace ensen
