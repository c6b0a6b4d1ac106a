#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ensen/errors.hpp"

namespace ensen {

// Solution field at one time level.
struct StateVector {
  std::vector<double> values;
  int time_level = 0;
};

inline void check_state_finite(const StateVector& s) {
  for (double v : s.values)
    if (!std::isfinite(v)) throw BlowUp("non-finite value at time level " + std::to_string(s.time_level));
}

// Dense sequence of states for n = 0..N_t plus the functional value of the run.
struct Trajectory {
  std::vector<StateVector> states;
  double dt = 0.0;
  double functional_value = 0.0;

  int last_level() const { return static_cast<int>(states.size()) - 1; }
  const StateVector& at(int n) const { return states.at(static_cast<std::size_t>(n)); }
};

// Symmetric cell/node adjacency; valency v_i is the neighbor count of entity i.
struct MeshAdjacency {
  std::vector<std::vector<int>> neighbors;

  int size() const { return static_cast<int>(neighbors.size()); }
  int valency(int i) const { return static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()); }

  void validate() const {
    for (int i = 0; i < size(); ++i) {
      for (int j : neighbors[static_cast<std::size_t>(i)]) {
        if (j < 0 || j >= size()) throw ConfigError("adjacency index out of range");
        const auto& back = neighbors[static_cast<std::size_t>(j)];
        bool found = false;
        for (int k : back)
          if (k == i) { found = true; break; }
        if (!found) throw ConfigError("adjacency is not symmetric");
      }
    }
  }

  // Line of n cells: left/right neighbors, valency 1 at the ends.
  static MeshAdjacency line(int n) {
    MeshAdjacency adj;
    adj.neighbors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (i > 0) adj.neighbors[static_cast<std::size_t>(i)].push_back(i - 1);
      if (i < n - 1) adj.neighbors[static_cast<std::size_t>(i)].push_back(i + 1);
    }
    return adj;
  }

  // Structured nx x ny node grid with 4-neighbor connectivity; dof = iy*nx + ix.
  static MeshAdjacency grid(int nx, int ny) {
    MeshAdjacency adj;
    adj.neighbors.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    auto id = [nx](int ix, int iy) { return iy * nx + ix; };
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        auto& nb = adj.neighbors[static_cast<std::size_t>(id(ix, iy))];
        if (ix > 0) nb.push_back(id(ix - 1, iy));
        if (ix < nx - 1) nb.push_back(id(ix + 1, iy));
        if (iy > 0) nb.push_back(id(ix, iy - 1));
        if (iy < ny - 1) nb.push_back(id(ix, iy + 1));
      }
    return adj;
  }
};

// Interface the engine drives. Models are immutable after construction and
// step() is a pure function, so trajectories may be advanced concurrently.
class ForwardModel {
public:
  virtual ~ForwardModel() = default;

  virtual int dof_count() const = 0;
  virtual double dt() const = 0;
  virtual int step_count() const = 0; // N_t

  // Unperturbed controls as the state at time level 0. Deterministic.
  virtual StateVector initial_condition() const = 0;

  // Advance one discrete step; result carries time_level + 1. Throws BlowUp
  // when a value becomes non-finite.
  virtual StateVector step(const StateVector& state) const = 0;

  virtual const MeshAdjacency& adjacency() const = 0;

  // Maximum number of cells across the domain in any direction; drives the
  // automatic smoothing-step rule.
  virtual int max_cells_across() const = 0;

  virtual int coord_dim() const = 0;
  virtual std::array<double, 2> dof_coordinate(int i) const = 0;
};

} // namespace ensen
