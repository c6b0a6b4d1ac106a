#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "ensen/models/advection1d.hpp"
#include "ensen/models/advection2d.hpp"
#include "ensen/rng.hpp"

using namespace ensen;
using models::Advection1D;
using models::Advection1DConfig;
using models::Advection2D;
using models::Advection2DConfig;
using models::Scheme1D;

namespace {

double total_variation(const std::vector<double>& c) {
  double tv = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) tv += std::fabs(c[i] - c[i - 1]);
  return tv;
}

} // namespace

TEST_CASE("1d config validation", "[models]") {
  Advection1DConfig bad;
  bad.dt = -0.1;
  REQUIRE_THROWS_AS(Advection1D(bad), ConfigError);

  Advection1DConfig fast;
  fast.dt = 2.0; // Courant 2
  REQUIRE_THROWS_AS(Advection1D(fast), ConfigError);

  Advection1DConfig ok;
  REQUIRE(Advection1DConfig{}.dx() == Catch::Approx(1.0));
  REQUIRE(ok.courant() == Catch::Approx(0.1));
}

TEST_CASE("1d initial condition is the constant field, deterministically", "[models]") {
  Advection1D model{Advection1DConfig{}};
  auto a = model.initial_condition();
  auto b = model.initial_condition();
  REQUIRE(a.values == b.values);
  REQUIRE(a.values.size() == 101);
  for (double v : a.values) REQUIRE(v == 0.0);
  REQUIRE(a.time_level == 0);
}

TEST_CASE("upwind preserves constants matching the inflow", "[models]") {
  Advection1DConfig cfg;
  cfg.inflow_value = 0.7;
  cfg.initial_value = 0.7;
  Advection1D model{cfg};
  StateVector s = model.initial_condition();
  for (int n = 0; n < 20; ++n) s = model.step(s);
  for (double v : s.values) REQUIRE(v == Catch::Approx(0.7).margin(1e-14));
  REQUIRE(s.time_level == 20);
}

TEST_CASE("upwind unit pulse single step", "[models]") {
  Advection1D model{Advection1DConfig{}};
  StateVector s = model.initial_condition();
  s.values[50] = 1.0;
  StateVector t = model.step(s);
  REQUIRE(t.values[50] == Catch::Approx(0.9));
  REQUIRE(t.values[51] == Catch::Approx(0.1));
  REQUIRE(t.values[49] == 0.0);
}

TEST_CASE("upwind pulse advects one cell per 1/nu steps with non-increasing peak", "[models]") {
  Advection1D model{Advection1DConfig{}};
  StateVector s = model.initial_condition();
  s.values[30] = 1.0;
  for (int n = 0; n < 10; ++n) s = model.step(s);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < s.values.size(); ++i)
    if (s.values[i] > s.values[peak]) peak = i;
  REQUIRE(peak == 31);
  REQUIRE(s.values[peak] < 1.0);
}

TEST_CASE("unit Courant advects exactly", "[models]") {
  Advection1DConfig cfg;
  cfg.dt = 1.0; // nu = 1
  cfg.n_steps = 5;
  Advection1D model{cfg};
  StateVector s = model.initial_condition();
  s.values[10] = 2.5;
  StateVector t = model.step(s);
  REQUIRE(t.values[11] == 2.5);
  REQUIRE(t.values[10] == 0.0);
}

TEST_CASE("nvd constant field unchanged", "[models]") {
  Advection1DConfig cfg;
  cfg.scheme = Scheme1D::Nvd;
  cfg.inflow_value = 0.3;
  cfg.initial_value = 0.3;
  Advection1D model{cfg};
  StateVector s = model.initial_condition();
  s = model.step(s);
  for (double v : s.values) REQUIRE(v == Catch::Approx(0.3).margin(1e-14));
}

TEST_CASE("nvd is TVD on ramps and rough fields", "[models]") {
  Advection1DConfig cfg;
  cfg.scheme = Scheme1D::Nvd;
  Advection1D model{cfg};

  SECTION("monotone ramp") {
    StateVector s = model.initial_condition();
    for (int i = 0; i < 101; ++i) s.values[i] = std::min(1.0, std::max(0.0, (i - 30) / 20.0));
    cfg.inflow_value = 0.0;
    double tv = total_variation(s.values);
    for (int n = 0; n < 50; ++n) {
      s = model.step(s);
      const double tv1 = total_variation(s.values);
      REQUIRE(tv1 <= tv * (1.0 + 1e-14) + 1e-14);
      tv = tv1;
    }
  }

  SECTION("random field with inflow-matched left cell") {
    Splitmix64 rng(21);
    StateVector s = model.initial_condition();
    for (int i = 0; i < 101; ++i) s.values[i] = rng.next_symmetric();
    s.values[0] = 0.0; // matches inflow, no boundary TV injection
    double tv = total_variation(s.values);
    for (int n = 0; n < 30; ++n) {
      s = model.step(s);
      const double tv1 = total_variation(s.values);
      REQUIRE(tv1 <= tv * (1.0 + 1e-14) + 1e-14);
      tv = tv1;
    }
  }
}

TEST_CASE("nvd keeps a square pulse sharper than upwind", "[models]") {
  Advection1DConfig up;
  up.n_steps = 600;
  Advection1DConfig nv = up;
  nv.scheme = Scheme1D::Nvd;
  // periodic-free comparison: narrow pulse advected 60 cells
  auto run = [](const Advection1DConfig& cfg) {
    Advection1D model{cfg};
    StateVector s = model.initial_condition();
    for (int i = 10; i < 20; ++i) s.values[i] = 1.0;
    for (int n = 0; n < 600; ++n) s = model.step(s);
    double peak = 0.0;
    for (double v : s.values) peak = std::max(peak, v);
    return peak;
  };
  const double peak_up = run(up);
  const double peak_nv = run(nv);
  REQUIRE(peak_nv / peak_up > 1.0);
}

TEST_CASE("1d schemes conserve mass up to boundary fluxes", "[models]") {
  for (Scheme1D scheme : {Scheme1D::Upwind, Scheme1D::Nvd}) {
    Advection1DConfig cfg;
    cfg.scheme = scheme;
    cfg.inflow_value = 0.25;
    Advection1D model{cfg};
    Splitmix64 rng(77);
    StateVector s = model.initial_condition();
    for (int i = 0; i < 101; ++i) s.values[i] = 0.5 + 0.1 * rng.next_symmetric();
    const double nu = cfg.courant();
    for (int n = 0; n < 10; ++n) {
      const double mass0 = std::accumulate(s.values.begin(), s.values.end(), 0.0);
      const double outflow = s.values.back(); // upwind outflow face for both schemes
      StateVector t = model.step(s);
      const double mass1 = std::accumulate(t.values.begin(), t.values.end(), 0.0);
      REQUIRE(mass1 - mass0 == Catch::Approx(nu * (cfg.inflow_value - outflow)).margin(1e-12));
      s = t;
    }
  }
}

TEST_CASE("upwind deviation propagation is linear", "[models]") {
  Advection1DConfig cfg;
  cfg.inflow_value = 0.25;
  cfg.initial_value = 0.25;
  Advection1D model{cfg};
  Splitmix64 rng(31);
  StateVector base = model.initial_condition();
  StateVector x = base, y = base, comb = base;
  const double a = 0.7, b = -1.3;
  std::vector<double> dx(101), dy(101);
  for (int i = 0; i < 101; ++i) {
    dx[i] = rng.next_symmetric();
    dy[i] = rng.next_symmetric();
    x.values[i] += dx[i];
    y.values[i] += dy[i];
    comb.values[i] += a * dx[i] + b * dy[i];
  }
  StateVector sb = model.step(base), sx = model.step(x), sy = model.step(y),
              sc = model.step(comb);
  for (int i = 0; i < 101; ++i) {
    const double want = a * (sx.values[i] - sb.values[i]) + b * (sy.values[i] - sb.values[i]);
    REQUIRE(sc.values[i] - sb.values[i] == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("step rejects non-finite states", "[models]") {
  Advection1D model{Advection1DConfig{}};
  StateVector s = model.initial_condition();
  s.values[3] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(model.step(s), BlowUp);
}

TEST_CASE("2d configuration and geometry", "[models]") {
  Advection2DConfig cfg;
  REQUIRE(cfg.steps() == 28);
  REQUIRE(cfg.h() == Catch::Approx(0.5));
  REQUIRE(cfg.courant() == Catch::Approx(0.25));
  Advection2D model{cfg};
  REQUIRE(model.dof_count() == 121);
  REQUIRE(model.max_cells_across() == 10);
  // node nearest (4, 1.5)
  const int target = model.nearest_node(4.0, 1.5);
  REQUIRE(target == 3 * 11 + 8);
  auto xy = model.dof_coordinate(target);
  REQUIRE(xy[0] == Catch::Approx(4.0));
  REQUIRE(xy[1] == Catch::Approx(1.5));

  Advection2DConfig bad = cfg;
  bad.t_final = 3.49; // not an integer number of steps
  REQUIRE_THROWS_AS(Advection2D(bad), ConfigError);
}

TEST_CASE("2d uniform field with matching inflow is steady", "[models]") {
  Advection2D model{Advection2DConfig{}};
  StateVector s = model.initial_condition();
  for (int n = 0; n < 28; ++n) s = model.step(s);
  for (double v : s.values) REQUIRE(v == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("2d zero inflow propagates a clean front at speed one", "[models]") {
  Advection2DConfig cfg;
  cfg.inflow_value = 0.0;
  Advection2D model{cfg};
  StateVector s = model.initial_condition();
  const double nu = cfg.courant();
  const int steps = 8; // one time unit
  for (int n = 0; n < steps; ++n) s = model.step(s);
  for (int iy = 0; iy < 11; ++iy) {
    const double* row = s.values.data() + iy * 11;
    REQUIRE(row[0] == 0.0);
    // monotone front between 0 and the initial value
    for (int ix = 1; ix < 11; ++ix) {
      REQUIRE(row[ix] >= row[ix - 1] - 1e-14);
      REQUIRE(row[ix] >= 0.0);
      REQUIRE(row[ix] <= 0.5 + 1e-14);
    }
    // influence travels at most one node per step
    for (int ix = steps; ix < 11; ++ix) REQUIRE(row[ix] == 0.5);
    // first interior node sees the zero inflow from step 2 on: 0.5 (1-nu)^(n-1)
    REQUIRE(row[1] == Catch::Approx(0.5 * std::pow(1.0 - nu, steps - 1)).margin(1e-14));
  }
}

TEST_CASE("2d deviation propagation is linear", "[models]") {
  Advection2D model{Advection2DConfig{}};
  Splitmix64 rng(4);
  StateVector base = model.initial_condition();
  StateVector x = base, y = base, comb = base;
  const double a = 1.4, b = 0.6;
  for (int i = 0; i < 121; ++i) {
    const double dx = rng.next_symmetric(), dy = rng.next_symmetric();
    x.values[i] += dx;
    y.values[i] += dy;
    comb.values[i] += a * dx + b * dy;
  }
  StateVector sb = model.step(base), sx = model.step(x), sy = model.step(y),
              sc = model.step(comb);
  for (int i = 0; i < 121; ++i) {
    const double want = a * (sx.values[i] - sb.values[i]) + b * (sy.values[i] - sb.values[i]);
    REQUIRE(sc.values[i] - sb.values[i] == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("mesh adjacency is symmetric with expected valencies", "[models]") {
  MeshAdjacency line = MeshAdjacency::line(101);
  line.validate();
  REQUIRE(line.valency(0) == 1);
  REQUIRE(line.valency(50) == 2);
  REQUIRE(line.valency(100) == 1);

  MeshAdjacency grid = MeshAdjacency::grid(11, 11);
  grid.validate();
  REQUIRE(grid.valency(0) == 2);
  REQUIRE(grid.valency(5) == 3);
  REQUIRE(grid.valency(5 * 11 + 5) == 4);
}
