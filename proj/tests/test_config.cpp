#include "support/test_data.hpp"

#include "romforge/config.hpp"
#include "romforge/pipeline.hpp"

#include <doctest.h>

using namespace romforge;
using namespace romforge::testing;

TEST_SUITE("config") {

TEST_CASE("the reference configuration loads with its documented values") {
  const PipelineConfig cfg = reference_config();
  CHECK(cfg.nx == 64);
  CHECK(cfg.ny == 32);
  CHECK(cfg.fom.nu == doctest::Approx(1.0 / 150.0).epsilon(1e-15));
  CHECK(cfg.fom.n_samples == 400);
  CHECK(cfg.formulation == Formulation::ppe);
  CHECK(cfg.scheme == Scheme::order2);
  CHECK(cfg.mlp.hidden == std::vector<Index>{256, 64});
  CHECK(cfg.mlp.optimizer == Optimizer::adam);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("formatted configurations parse back to the same text") {
  PipelineConfig cfg = reference_config();
  cfg.fom.nu = 1.0 / 7.0;
  cfg.n_modes = 3;
  cfg.formulation = Formulation::sup;
  cfg.scheme = Scheme::order1;
  cfg.mlp.hidden = {12, 5, 3};
  const std::string text = format_config(cfg);
  const PipelineConfig back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.fom.nu == cfg.fom.nu);
  CHECK(back.mlp.hidden == cfg.mlp.hidden);
  CHECK(back.formulation == Formulation::sup);
}

TEST_CASE("comments and blank lines are ignored and unset keys keep defaults") {
  const PipelineConfig cfg = parse_config("# comment\n\n  n_modes = 4   # trailing\n");
  CHECK(cfg.n_modes == 4);
  CHECK(cfg.nx == PipelineConfig{}.nx);
}

TEST_CASE("malformed configuration text is rejected") {
  CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nx = 10\nnx = 12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nu = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nx = 3.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nx 64\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("formulation = mixed\n"), ConfigError);
  try {
    parse_config("nx = 64\nbogus = 1\n", "test.cfg");
    FAIL("unknown key was accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("a missing configuration file is an I/O error") {
  CHECK_THROWS_AS(load_config(scratch_dir("config_missing") + "/none.cfg"), IoError);
}

TEST_CASE("invalid combinations fail validation") {
  PipelineConfig cfg = reference_config();
  cfg.train_fraction = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = reference_config();
  cfg.n_modes = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = reference_config();
  cfg.obstacle_x = 0.2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("closure flag lists") {
  RomRunConfig rc;
  parse_flags("cu,ct", rc);
  CHECK(rc.c_u);
  CHECK_FALSE(rc.c_p);
  CHECK(rc.c_t);
  parse_flags("none", rc);
  CHECK_FALSE(rc.c_u);
  CHECK_FALSE(rc.c_t);
  parse_flags("cp", rc);
  CHECK(rc.c_p);
  CHECK_THROWS_AS(parse_flags("cu,xx", rc), ConfigError);
}

TEST_CASE("strategies set the expected switches") {
  const SnapshotSet& set = reference_dataset();
  const PipelineConfig cfg = reference_config();
  const RomRunConfig none = run_config(set, cfg, Strategy::none, 11);
  const RomRunConfig data = run_config(set, cfg, Strategy::data, 11);
  const RomRunConfig ev = run_config(set, cfg, Strategy::ev, 11);
  const RomRunConfig hybrid = run_config(set, cfg, Strategy::hybrid, 11);
  CHECK_FALSE((none.c_u || none.c_p || none.c_t));
  CHECK((data.c_u && data.c_p && !data.c_t));
  CHECK((!ev.c_u && !ev.c_p && ev.c_t));
  CHECK((hybrid.c_u && hybrid.c_p && hybrid.c_t));
  CHECK(none.dt == doctest::Approx(set.dt_snap / 10.0));
  CHECK(none.n_steps == 100);
  CHECK(none.record_every == 10);
}

}  // TEST_SUITE
