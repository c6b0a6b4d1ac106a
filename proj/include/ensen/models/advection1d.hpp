#pragma once

#include <cmath>
#include <string>

#include "ensen/model.hpp"

namespace ensen::models {

enum class Scheme1D { Upwind, Nvd };

// 1D linear advection dc/dt + u dc/dx = 0 on a uniform cell-centred grid,
// forward Euler in time, inflow boundary on the left, outflow on the right.
struct Advection1DConfig {
  int n_cells = 101;
  double domain_length = 100.0;
  double dt = 0.1;
  int n_steps = 600;
  double velocity = 1.0;
  Scheme1D scheme = Scheme1D::Upwind;
  double inflow_value = 0.0;
  double initial_value = 0.0;

  double dx() const { return domain_length / static_cast<double>(n_cells - 1); }
  double courant() const { return velocity * dt / dx(); }

  void validate() const {
    if (n_cells < 2) throw ConfigError("advection1d: n_cells must be >= 2");
    if (!(domain_length > 0.0)) throw ConfigError("advection1d: domain_length must be positive");
    if (!(dt > 0.0)) throw ConfigError("advection1d: dt must be positive");
    if (n_steps < 0) throw ConfigError("advection1d: n_steps must be >= 0");
    const double nu = courant();
    if (!(nu > 0.0) || nu > 1.0)
      throw ConfigError("advection1d: Courant number " + std::to_string(nu) +
                        " outside (0, 1]");
  }
};

class Advection1D final : public ForwardModel {
public:
  explicit Advection1D(Advection1DConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    adjacency_ = MeshAdjacency::line(cfg_.n_cells);
  }

  const Advection1DConfig& config() const { return cfg_; }

  int dof_count() const override { return cfg_.n_cells; }
  double dt() const override { return cfg_.dt; }
  int step_count() const override { return cfg_.n_steps; }
  const MeshAdjacency& adjacency() const override { return adjacency_; }
  int max_cells_across() const override { return cfg_.n_cells; }
  int coord_dim() const override { return 1; }
  std::array<double, 2> dof_coordinate(int i) const override {
    return {static_cast<double>(i) * cfg_.dx(), 0.0};
  }

  StateVector initial_condition() const override {
    StateVector s;
    s.values.assign(static_cast<std::size_t>(cfg_.n_cells), cfg_.initial_value);
    s.time_level = 0;
    return s;
  }

  StateVector step(const StateVector& state) const override {
    StateVector out;
    out.time_level = state.time_level + 1;
    out.values = cfg_.scheme == Scheme1D::Upwind ? upwind_step(state.values)
                                                 : nvd_step(state.values);
    check_state_finite(out);
    return out;
  }

private:
  // c_i <- c_i - nu (c_i - c_{i-1}); the left neighbour of cell 0 is the
  // inflow value.
  std::vector<double> upwind_step(const std::vector<double>& c) const {
    const double nu = cfg_.courant();
    std::vector<double> out(c.size());
    double left = cfg_.inflow_value;
    for (std::size_t i = 0; i < c.size(); ++i) {
      out[i] = c[i] - nu * (c[i] - left);
      left = c[i];
    }
    return out;
  }

  // NVD flux limiting: the high-order face value is diamond (mid-point)
  // differencing, used wherever the normalised face value stays inside the
  // TVD-admissible region; outside the monotone range the face reverts to
  // first-order upwind. Conservative flux-difference update.
  std::vector<double> nvd_step(const std::vector<double>& c) const {
    const double nu = cfg_.courant();
    const std::size_t n = c.size();
    std::vector<double> face(n + 1); // face[i] sits between cell i-1 and cell i
    face[0] = cfg_.inflow_value;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double u = i == 0 ? cfg_.inflow_value : c[i - 1];
      face[i + 1] = nvd_face(u, c[i], c[i + 1], nu);
    }
    face[n] = c[n - 1]; // outflow face, no downwind cell
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] - nu * (face[i + 1] - face[i]);
    return out;
  }

  static double nvd_face(double up, double centre, double down, double nu) {
    const double denom = down - up;
    if (denom == 0.0) return centre; // unresolved extremum
    const double chat = (centre - up) / denom;
    if (chat < 0.0 || chat > 1.0) return centre; // outside the monotone region
    double fhat = 0.5 * (1.0 + chat); // diamond differencing
    const double upper = std::min(1.0, chat / nu);
    if (fhat > upper) fhat = upper;
    if (fhat < chat) fhat = chat;
    return up + fhat * denom;
  }

  Advection1DConfig cfg_;
  MeshAdjacency adjacency_;
};

} // namespace ensen::models
