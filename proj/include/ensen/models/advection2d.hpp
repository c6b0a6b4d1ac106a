#pragma once

#include <cmath>
#include <string>

#include "ensen/model.hpp"

namespace ensen::models {

// 2D tracer advection with velocity (u, 0) on a structured node grid:
// row-wise first-order upwind transport in +x with a Dirichlet inflow column
// at x = 0 and outflow at the right edge. Rows are independent. Node
// (ix, iy) maps to dof iy * nodes_per_side + ix.
struct Advection2DConfig {
  int nodes_per_side = 11;
  double domain_size = 5.0;
  double dt = 0.125;
  double t_final = 3.5;
  double velocity_x = 1.0;
  double initial_value = 0.5;
  double inflow_value = 0.5;

  double h() const { return domain_size / static_cast<double>(nodes_per_side - 1); }
  double courant() const { return velocity_x * dt / h(); }

  int steps() const {
    const double raw = t_final / dt;
    return static_cast<int>(std::lround(raw));
  }

  void validate() const {
    if (nodes_per_side < 2) throw ConfigError("advection2d: nodes_per_side must be >= 2");
    if (!(domain_size > 0.0)) throw ConfigError("advection2d: domain_size must be positive");
    if (!(dt > 0.0)) throw ConfigError("advection2d: dt must be positive");
    if (!(t_final >= 0.0)) throw ConfigError("advection2d: t_final must be >= 0");
    const double raw = t_final / dt;
    if (std::fabs(raw - std::lround(raw)) > 1e-9 * std::max(1.0, raw))
      throw ConfigError("advection2d: t_final must be an integer number of steps");
    const double nu = courant();
    if (!(nu > 0.0) || nu > 1.0)
      throw ConfigError("advection2d: Courant number " + std::to_string(nu) +
                        " outside (0, 1]");
  }
};

class Advection2D final : public ForwardModel {
public:
  explicit Advection2D(Advection2DConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    adjacency_ = MeshAdjacency::grid(cfg_.nodes_per_side, cfg_.nodes_per_side);
  }

  const Advection2DConfig& config() const { return cfg_; }

  int dof_count() const override { return cfg_.nodes_per_side * cfg_.nodes_per_side; }
  double dt() const override { return cfg_.dt; }
  int step_count() const override { return cfg_.steps(); }
  const MeshAdjacency& adjacency() const override { return adjacency_; }
  int max_cells_across() const override { return cfg_.nodes_per_side - 1; }
  int coord_dim() const override { return 2; }
  std::array<double, 2> dof_coordinate(int i) const override {
    const int nx = cfg_.nodes_per_side;
    return {static_cast<double>(i % nx) * cfg_.h(), static_cast<double>(i / nx) * cfg_.h()};
  }

  int node_index(int ix, int iy) const { return iy * cfg_.nodes_per_side + ix; }

  // Nearest node to a physical point.
  int nearest_node(double x, double y) const {
    const double h = cfg_.h();
    int ix = static_cast<int>(std::lround(x / h));
    int iy = static_cast<int>(std::lround(y / h));
    ix = std::max(0, std::min(cfg_.nodes_per_side - 1, ix));
    iy = std::max(0, std::min(cfg_.nodes_per_side - 1, iy));
    return node_index(ix, iy);
  }

  StateVector initial_condition() const override {
    StateVector s;
    s.values.assign(static_cast<std::size_t>(dof_count()), cfg_.initial_value);
    s.time_level = 0;
    return s;
  }

  StateVector step(const StateVector& state) const override {
    const int nx = cfg_.nodes_per_side;
    const double nu = cfg_.courant();
    StateVector out;
    out.time_level = state.time_level + 1;
    out.values.resize(state.values.size());
    for (int iy = 0; iy < nx; ++iy) {
      const double* row = state.values.data() + static_cast<std::size_t>(iy) * nx;
      double* orow = out.values.data() + static_cast<std::size_t>(iy) * nx;
      orow[0] = cfg_.inflow_value; // Dirichlet inflow column
      for (int ix = 1; ix < nx; ++ix)
        orow[ix] = row[ix] - nu * (row[ix] - row[ix - 1]);
    }
    check_state_finite(out);
    return out;
  }

private:
  Advection2DConfig cfg_;
  MeshAdjacency adjacency_;
};

} // namespace ensen::models
