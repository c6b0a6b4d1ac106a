#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ensen/models/advection1d.hpp"
#include "ensen/oracle.hpp"

using namespace ensen;
using models::Advection1D;
using models::Advection1DConfig;
using models::Scheme1D;

namespace {

// Closed-form adjoint of the upwind update: the sensitivity of the final
// value at cell k to cell i at level 0 is the binomial back-propagation
// weight C(n, d) nu^d (1-nu)^(n-d) with d = k - i.
double binomial_weight(int n, int d, double nu) {
  if (d < 0 || d > n) return 0.0;
  const double logw = std::lgamma(n + 1.0) - std::lgamma(d + 1.0) -
                      std::lgamma(n - d + 1.0) + d * std::log(nu) +
                      (n - d) * std::log1p(-nu);
  return std::exp(logw);
}

} // namespace

TEST_CASE("oracle at the final level is exactly the functional indicator", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 12;
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  SensitivityMap g = direct_sensitivity(model, f, 12);
  for (int i = 0; i < 101; ++i) REQUIRE(g.values[i] == (i == 84 ? 1.0 : 0.0));

  Trajectory base = run_baseline(model, f);
  auto partial = f.partial_wrt_state(base, 12);
  REQUIRE(g.values == partial);
}

TEST_CASE("oracle at the final level matches time-integral partials", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 6;
  Advection1D model{cfg};
  Functional f = Functional::time_integral_at_node(40);
  Trajectory base = run_baseline(model, f);
  SensitivityMap g = direct_sensitivity(model, f, 6);
  auto partial = f.partial_wrt_state(base, 6);
  for (int i = 0; i < 101; ++i)
    REQUIRE(g.values[i] == Catch::Approx(partial[i]).margin(1e-15));
}

TEST_CASE("oracle reproduces the binomial back-propagation weights", "[oracle]") {
  Advection1DConfig cfg; // 101 cells, 600 steps, nu = 0.1
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  SensitivityMap g = direct_sensitivity(model, f, 0);
  for (int i = 0; i < 101; ++i) {
    const double want = binomial_weight(600, 84 - i, 0.1);
    if (want > 1e-250)
      REQUIRE(g.values[i] == Catch::Approx(want).epsilon(1e-8));
    else
      REQUIRE(std::fabs(g.values[i]) <= 1e-250 + 1e-20);
  }
}

TEST_CASE("oracle is invariant to fd_epsilon on linear models", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 30;
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  OracleConfig o1, o2, o3;
  o1.fd_epsilon = 1e-5;
  o2.fd_epsilon = 5e-6;
  o3.fd_epsilon = 1e-8;
  SensitivityMap g1 = direct_sensitivity(model, f, 0, o1);
  SensitivityMap g2 = direct_sensitivity(model, f, 0, o2);
  SensitivityMap g3 = direct_sensitivity(model, f, 0, o3);
  REQUIRE(compare_maps(g1, g2).l2_rel_error < 1e-12);
  REQUIRE(compare_maps(g1, g3).l2_rel_error < 1e-12);
}

TEST_CASE("central differences agree with forward on the linear model", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 20;
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  OracleConfig fw, ce;
  ce.mode = OracleConfig::Mode::Central;
  SensitivityMap a = direct_sensitivity(model, f, 5, fw);
  SensitivityMap b = direct_sensitivity(model, f, 5, ce);
  REQUIRE(compare_maps(a, b).l2_rel_error < 1e-12);
}

TEST_CASE("threaded oracle runs match serial bitwise", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 40;
  cfg.scheme = Scheme1D::Nvd;
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  OracleConfig serial, par;
  serial.mode = OracleConfig::Mode::Central;
  par = serial;
  par.threads = 4;
  SensitivityMap a = direct_sensitivity(model, f, 0, serial);
  SensitivityMap b = direct_sensitivity(model, f, 0, par);
  REQUIRE(a.values == b.values);
}

TEST_CASE("compare_maps metrics", "[oracle]") {
  SensitivityMap a;
  a.time_level = 3;
  a.values = {0.0, 1.0, 0.5};
  SensitivityMap same = a;
  MapComparison c = compare_maps(a, same);
  REQUIRE(c.l2_rel_error == 0.0);
  REQUIRE(c.cosine_similarity == Catch::Approx(1.0));
  REQUIRE(c.peak_offset_cells == 0);
  REQUIRE_FALSE(c.zero_flag);

  SensitivityMap twice = a;
  for (double& v : twice.values) v *= 2.0;
  c = compare_maps(a, twice);
  REQUIRE(c.l2_rel_error == Catch::Approx(1.0));
  REQUIRE(c.cosine_similarity == Catch::Approx(1.0));
  REQUIRE(c.peak_offset_cells == 0);

  SensitivityMap ek, ek2;
  ek.time_level = ek2.time_level = 0;
  ek.values.assign(10, 0.0);
  ek2.values.assign(10, 0.0);
  ek.values[4] = 1.0;
  ek2.values[6] = 1.0;
  c = compare_maps(ek, ek2);
  REQUIRE(c.cosine_similarity == 0.0);
  REQUIRE(c.peak_offset_cells == 2);

  SensitivityMap zero = ek;
  zero.values.assign(10, 0.0);
  c = compare_maps(zero, ek);
  REQUIRE(c.zero_flag);
  REQUIRE(c.cosine_similarity == 0.0);

  SensitivityMap wrong;
  wrong.time_level = 0;
  wrong.values.assign(9, 0.0);
  REQUIRE_THROWS_AS(compare_maps(ek, wrong), DimensionMismatch);
}

TEST_CASE("fd epsilon halving leaves the linear-model map unchanged", "[oracle]") {
  Advection1DConfig cfg;
  cfg.n_steps = 25;
  Advection1D model{cfg};
  Functional f = Functional::point_at_final_time(84);
  OracleConfig a, b;
  a.fd_epsilon = 1e-6;
  b.fd_epsilon = 5e-7;
  SensitivityMap ga = direct_sensitivity(model, f, 0, a);
  SensitivityMap gb = direct_sensitivity(model, f, 0, b);
  REQUIRE(compare_maps(ga, gb).l2_rel_error < 1e-12);
}
