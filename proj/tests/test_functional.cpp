#include <catch2/catch_amalgamated.hpp>

#include "ensen/functional.hpp"
#include "ensen/models/advection1d.hpp"
#include "ensen/rng.hpp"

using namespace ensen;

namespace {

Trajectory make_traj(int n_dofs, int n_levels, double dt, Splitmix64& rng) {
  Trajectory t;
  t.dt = dt;
  for (int n = 0; n <= n_levels; ++n) {
    StateVector s;
    s.time_level = n;
    s.values.resize(n_dofs);
    for (double& v : s.values) v = rng.next_symmetric();
    t.states.push_back(std::move(s));
  }
  return t;
}

} // namespace

TEST_CASE("point functional evaluates the final state at the target", "[functional]") {
  Functional f = Functional::point_at_final_time(84); // cell 85, 1-based
  Trajectory t;
  t.dt = 0.1;
  for (int n = 0; n <= 3; ++n) {
    StateVector s;
    s.time_level = n;
    s.values.assign(101, 0.0);
    t.states.push_back(std::move(s));
  }
  REQUIRE(f.evaluate(t) == 0.0);
  t.states.back().values[84] = 3.7;
  REQUIRE(f.evaluate(t) == 3.7);
}

TEST_CASE("point functional partials are the final-level indicator", "[functional]") {
  Functional f = Functional::point_at_final_time(84);
  Splitmix64 rng(1);
  Trajectory t = make_traj(101, 5, 0.1, rng);
  for (int q = 0; q < 5; ++q) {
    auto g = f.partial_wrt_state(t, q);
    for (double v : g) REQUIRE(v == 0.0);
  }
  auto g = f.partial_wrt_state(t, 5);
  for (int i = 0; i < 101; ++i) REQUIRE(g[i] == (i == 84 ? 1.0 : 0.0));
  REQUIRE(f.partial_is_zero(3, 5));
  REQUIRE_FALSE(f.partial_is_zero(5, 5));
}

TEST_CASE("time integral matches the hand sum", "[functional]") {
  Functional f = Functional::time_integral_at_node(2);
  Trajectory t;
  t.dt = 0.5;
  const double psi[3] = {1.0, 2.0, 4.0};
  for (int n = 0; n <= 2; ++n) {
    StateVector s;
    s.time_level = n;
    s.values.assign(4, 0.0);
    s.values[2] = psi[n];
    t.states.push_back(std::move(s));
  }
  REQUIRE(f.evaluate(t) == Catch::Approx(3.5));
  auto g = f.partial_wrt_state(t, 1);
  REQUIRE(g[2] == Catch::Approx(0.5));
  REQUIRE(g[0] == 0.0);
}

TEST_CASE("truncated differences drop contributions before the level", "[functional]") {
  Splitmix64 rng(3);
  Trajectory base = make_traj(6, 4, 0.5, rng);
  Trajectory member = base;
  for (auto& s : member.states)
    for (double& v : s.values) v += 0.01;

  SECTION("point kind: truncation has no effect") {
    Functional f = Functional::point_at_final_time(3);
    const double d0 = f.truncated_difference(member, base, 0);
    for (int n = 1; n <= 4; ++n)
      REQUIRE(f.truncated_difference(member, base, n) == d0);
  }

  SECTION("time integral at the final level keeps one term") {
    Functional f = Functional::time_integral_at_node(3);
    const double want =
        0.5 * (member.states[4].values[3] - base.states[4].values[3]);
    REQUIRE(f.truncated_difference(member, base, 4) == Catch::Approx(want).margin(1e-15));
  }

  SECTION("identical trajectories give zero") {
    Functional f = Functional::time_integral_at_node(1);
    REQUIRE(f.truncated_difference(base, base, 0) == 0.0);
  }
}

TEST_CASE("custom functional uses supplied weights", "[functional]") {
  std::map<int, std::vector<double>> w;
  w[1] = {0.0, 2.0, 0.0};
  w[3] = {1.0, 0.0, -1.0};
  Functional f = Functional::custom(w);
  Splitmix64 rng(5);
  Trajectory t = make_traj(3, 3, 0.25, rng);
  const double want = 2.0 * t.states[1].values[1] + t.states[3].values[0] -
                      t.states[3].values[2];
  REQUIRE(f.evaluate(t) == Catch::Approx(want).margin(1e-15));
  REQUIRE(f.partial_is_zero(0, 3));
  REQUIRE(f.partial_is_zero(2, 3));
  REQUIRE_FALSE(f.partial_is_zero(1, 3));
  auto g = f.partial_wrt_state(t, 3);
  REQUIRE(g == std::vector<double>{1.0, 0.0, -1.0});
}

TEST_CASE("evaluate is consistent with the partials under finite differences",
          "[functional]") {
  Splitmix64 rng(7);
  Trajectory base = make_traj(5, 3, 0.2, rng);
  const double eps = 1e-7;

  auto check = [&](const Functional& f) {
    for (int q = 0; q <= 3; ++q) {
      auto g = f.partial_wrt_state(base, q);
      for (int i = 0; i < 5; ++i) {
        Trajectory bumped = base;
        bumped.states[q].values[i] += eps;
        const double fd = (f.evaluate(bumped) - f.evaluate(base)) / eps;
        REQUIRE(fd == Catch::Approx(g[i]).margin(1e-6));
      }
    }
  };
  check(Functional::point_at_final_time(2));
  check(Functional::time_integral_at_node(4));
  std::map<int, std::vector<double>> w;
  w[2] = {0.3, -0.1, 0.0, 0.7, 1.1};
  check(Functional::custom(w));
}

TEST_CASE("functional validation catches bad targets", "[functional]") {
  REQUIRE_THROWS_AS(Functional::point_at_final_time(101).validate_for(101, 600), ConfigError);
  REQUIRE_NOTHROW(Functional::point_at_final_time(84).validate_for(101, 600));
  std::map<int, std::vector<double>> w;
  w[601] = std::vector<double>(101, 1.0);
  REQUIRE_THROWS_AS(Functional::custom(w).validate_for(101, 600), ConfigError);
}
