#include <catch2/catch_amalgamated.hpp>

#include "ensen/models/advection1d.hpp"
#include "ensen/sweep.hpp"

using namespace ensen;
using models::Advection1D;
using models::Advection1DConfig;

TEST_CASE("empty ensemble sizes give an empty table", "[sweep]") {
  Advection1D model{Advection1DConfig{}};
  Functional f = Functional::point_at_final_time(84);
  EngineConfig cfg;
  SweepTable t = convergence_sweep(model, f, {}, {SweepVariant{}}, {1}, cfg);
  REQUIRE(t.rows.empty());
}

TEST_CASE("full-rank sweep rows reach oracle accuracy", "[sweep]") {
  Advection1DConfig mc;
  mc.n_cells = 21;
  mc.domain_length = 20.0;
  mc.n_steps = 60;
  Advection1D model{mc};
  Functional f = Functional::point_at_final_time(16);

  EngineConfig cfg;
  cfg.perturbation.epsilon = 1.0;
  std::vector<SweepVariant> variants{{true, false}, {true, true}};
  SweepTable t = convergence_sweep(model, f, {21}, variants, {7, 8}, cfg);
  REQUIRE(t.rows.size() == 4);
  for (const SweepRow& row : t.rows) {
    INFO(row.variant.name() << " seed " << row.seed);
    REQUIRE_FALSE(row.failed);
    REQUIRE(row.l2_rel_error < 1e-6);
    REQUIRE(row.max_g0 > 0.0);
  }
}

TEST_CASE("sweep records failures instead of throwing", "[sweep]") {
  // more members than degrees of freedom cannot stay independent
  Advection1DConfig mc;
  mc.n_cells = 11;
  mc.domain_length = 10.0;
  mc.n_steps = 10;
  Advection1D model{mc};
  Functional f = Functional::point_at_final_time(8);

  EngineConfig cfg;
  cfg.perturbation.epsilon = 1.0;
  cfg.regularization.alpha_s = 0.0;
  SweepTable t = convergence_sweep(model, f, {14}, {SweepVariant{true, false}}, {3}, cfg);
  REQUIRE(t.rows.size() == 1);
  REQUIRE(t.rows.front().failed);
  REQUIRE_FALSE(t.rows.front().error.empty());
}

TEST_CASE("goal-based rows beat non-goal rows at small ensembles", "[sweep]") {
  Advection1D model{Advection1DConfig{}};
  Functional f = Functional::point_at_final_time(84);
  EngineConfig cfg;
  cfg.perturbation.epsilon = 1.0;
  std::vector<SweepVariant> variants{{true, false}, {false, false}};
  SweepTable t = convergence_sweep(model, f, {10}, variants, {101, 202, 303}, cfg);
  double goal = 0.0, plain = 0.0;
  for (const SweepRow& row : t.rows) {
    REQUIRE_FALSE(row.failed);
    (row.variant.goal_based ? goal : plain) += row.l2_rel_error;
  }
  REQUIRE(goal < plain);
}
