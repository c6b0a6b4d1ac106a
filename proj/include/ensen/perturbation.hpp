#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ensen/errors.hpp"
#include "ensen/linalg.hpp"
#include "ensen/model.hpp"
#include "ensen/rng.hpp"

namespace ensen {

enum class ScalingRule { Norm1D, Range2D3D };

struct PerturbationConfig {
  double epsilon = 1e-4;                 // rescale factor in dm -> (eps/L) dm
  std::optional<int> smoothing_steps;    // nullopt = automatic rule
  bool weighting_enabled = true;
  bool orthogonalise_enabled = true;
  ScalingRule scaling_rule = ScalingRule::Norm1D;
  std::uint64_t rng_seed = 0;
  int retry_budget = 5;                  // fresh draws after a degenerate one

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("perturbation: epsilon must be positive");
    if (smoothing_steps && *smoothing_steps < 0)
      throw ConfigError("perturbation: smoothing_steps must be >= 0");
    if (retry_budget < 0) throw ConfigError("perturbation: retry_budget must be >= 0");
  }
};

// Nearest integer to a quarter of the maximum number of cells across the
// domain in any direction (halves round away from zero: 10 -> 3, 101 -> 25).
inline int auto_smoothing_steps(int max_cells_across) {
  return static_cast<int>(std::lround(static_cast<double>(max_cells_across) / 4.0));
}

// Neighbour-averaging smoother S with S_ii = 1/2 and S_ij = 1/(2 v_i) for
// each neighbour j. Every row sums to one, so constants are preserved and
// |S v|_inf <= |v|_inf.
class SmoothingOperator {
public:
  explicit SmoothingOperator(const MeshAdjacency& adjacency) : adj_(&adjacency) {}
  explicit SmoothingOperator(MeshAdjacency&&) = delete; // keeps a reference

  std::vector<double> apply(const std::vector<double>& v) const {
    const int n = adj_->size();
    if (static_cast<int>(v.size()) != n)
      throw DimensionMismatch("smooth: field length does not match the mesh");
    std::vector<double> out(v.size());
    for (int i = 0; i < n; ++i) {
      const auto& nb = adj_->neighbors[static_cast<std::size_t>(i)];
      const double w = nb.empty() ? 0.0 : 1.0 / (2.0 * static_cast<double>(nb.size()));
      double s = 0.5 * v[static_cast<std::size_t>(i)];
      for (int j : nb) s += w * v[static_cast<std::size_t>(j)];
      // isolated entity: identity row keeps the row sum at one
      if (nb.empty()) s = v[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = s;
    }
    return out;
  }

  const MeshAdjacency& adjacency() const { return *adj_; }

private:
  const MeshAdjacency* adj_;
};

// i.i.d. uniform samples on [-1/2, 1/2), deterministic per seed and draw index.
inline std::vector<double> random_field(int n, Splitmix64& rng) {
  if (n < 1) throw ConfigError("random_field: n must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.next_symmetric();
  return v;
}

inline std::vector<double> smooth(std::vector<double> v, const SmoothingOperator& op, int steps) {
  for (int s = 0; s < steps; ++s) v = op.apply(v);
  return v;
}

// dm -> |g| .* dm / ||g||_inf
inline std::vector<double> weight_by_goal(std::vector<double> v, const std::vector<double>& g) {
  if (v.size() != g.size()) throw DimensionMismatch("weight_by_goal: dimension mismatch");
  double gmax = 0.0;
  for (double x : g) gmax = std::max(gmax, std::fabs(x));
  if (gmax == 0.0)
    throw ZeroGoalMap("weight_by_goal: goal map has zero infinity norm");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::fabs(g[i]) / gmax;
  return v;
}

// Gram-Schmidt against the previous members, then rescale by eps/L. L is
// computed from the post-orthogonalisation vector: its 2-norm under the 1D
// rule, its max-min range under the 2D/3D rule.
inline std::vector<double> orthogonalise_and_rescale(
    std::vector<double> v, const std::vector<std::vector<double>>& previous,
    const PerturbationConfig& cfg) {
  if (cfg.orthogonalise_enabled && !previous.empty())
    v = linalg::gram_schmidt_against(v, previous);
  double scale = 0.0;
  if (cfg.scaling_rule == ScalingRule::Norm1D) {
    scale = linalg::norm2(v);
  } else {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    scale = hi - lo;
  }
  if (!(scale > 0.0))
    throw DegenerateVector("orthogonalise_and_rescale: zero-scale perturbation");
  const double f = cfg.epsilon / scale;
  for (double& x : v) x *= f;
  return v;
}

// Full pipeline for member e: random field -> goal weighting -> smoothing ->
// orthogonalisation and rescaling. Smoothing runs after the weighting so the
// member (and therefore the refreshed map and the next member's weights) stays
// smooth; weighting first roughens the members through the |g| kinks and the
// map estimate never recovers the regions its early zeros masked out. A
// degenerate draw is retried with a fresh random field up to cfg.retry_budget
// times. Weighting is skipped when the goal map is identically zero (the
// first-member bootstrap uses an all-ones map, which leaves the field
// unchanged).
// max_cells_across feeds the automatic smoothing rule; pass the model's value
// (defaults to the entity count, which is right for 1D line meshes).
inline std::vector<double> generate_member_perturbation(
    int member_index, const std::vector<double>& g_current,
    const std::vector<std::vector<double>>& previous, const MeshAdjacency& mesh,
    const PerturbationConfig& cfg, Splitmix64& rng, int max_cells_across = -1) {
  cfg.validate();
  const SmoothingOperator op(mesh);
  const int steps = cfg.smoothing_steps
                        ? *cfg.smoothing_steps
                        : auto_smoothing_steps(max_cells_across > 0 ? max_cells_across
                                                                    : mesh.size());
  double gmax = 0.0;
  for (double x : g_current) gmax = std::max(gmax, std::fabs(x));
  // Degenerate draws retry with progressively fewer focusing stages: the
  // weighting confines draws to the goal region and the smoothing to the
  // resolved scales, so once the previous members span that subspace a fresh
  // focused draw cannot escape it. Later retries drop the weighting, the last
  // one also the smoothing.
  for (int attempt = 0; attempt <= cfg.retry_budget; ++attempt) {
    const bool weight = cfg.weighting_enabled && gmax > 0.0 &&
                        attempt <= cfg.retry_budget / 2;
    const bool last = attempt == cfg.retry_budget;
    std::vector<double> v = random_field(mesh.size(), rng);
    if (weight) v = weight_by_goal(std::move(v), g_current);
    if (!last) v = smooth(std::move(v), op, steps);
    try {
      return orthogonalise_and_rescale(std::move(v), previous, cfg);
    } catch (const DegenerateVector&) {
      // fresh draw
    }
  }
  throw RetriesExhausted("member " + std::to_string(member_index) +
                         ": perturbation degenerate after " +
                         std::to_string(cfg.retry_budget + 1) + " draws");
}

} // namespace ensen
