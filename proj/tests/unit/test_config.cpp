#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "tfsplat/config.hpp"
#include "tfsplat/error.hpp"

using namespace tfsplat;

TEST_CASE("defaults match the documented configuration") {
  const RunConfig c;
  CHECK(c.grid.n_fft == 512);
  CHECK(c.grid.win_length == 400);
  CHECK(c.grid.hop == 160);
  CHECK(c.grid.sample_rate == 16000.0);
  CHECK(c.scene.clip_seconds == 3.0);
  CHECK(c.field.sh_degree == 2);
  CHECK(c.train.epochs == 60);
  CHECK(c.train.lr_position == 1e-4);
  CHECK(c.train.lr_other == 1e-2);
  CHECK(c.train.loss.lambda_diff == 1.0);
  CHECK(c.train.loss.lambda_phs == 0.1);
  CHECK(c.export_percentile == 80.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("every key round trips through a file") {
  testing::TempDir dir;
  RunConfig c;
  c.grid.n_fft = 256;
  c.grid.hop = 64;
  c.grid.win_length = 200;
  c.scene.holdout = {"pose_4", "pose_6"};
  c.scene.source_pose = "pose_1";
  c.scene.sample_rate = c.grid.sample_rate = 8000.0;
  c.scene.highpass = false;
  c.field.lambda_residual = 1.0 / 3.0;
  c.train.seed = 123456789012345ULL;
  c.train.threads = 4;
  c.train.toggles.phase_correction = false;
  c.train.loss.lambda_phs = 0.0;
  c.export_percentile = 12.5;
  save_run_config(c, dir / "c.cfg");
  const RunConfig back = load_run_config(dir / "c.cfg");
  CHECK(back.to_key_values() == c.to_key_values());
  CHECK(back.scene.holdout == c.scene.holdout);
  CHECK(back.field.lambda_residual == c.field.lambda_residual);
  CHECK(back.train.seed == c.train.seed);
  CHECK_FALSE(back.train.toggles.phase_correction);
}

TEST_CASE("missing keys keep defaults") {
  const auto c = RunConfig::from_key_values({{"train.epochs", "5"}, {"scene.holdout", ""}});
  CHECK(c.train.epochs == 5);
  CHECK(c.scene.holdout.empty());
  CHECK(c.grid.n_fft == 512);
}

TEST_CASE("scene.sample_rate also sets the grid rate") {
  const auto c = RunConfig::from_key_values({{"scene.sample_rate", "8000"}});
  CHECK(c.grid.sample_rate == 8000.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(RunConfig::from_key_values({{"train.epoch", "5"}}), doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(RunConfig::from_key_values({{"train.epochs", "five"}}), doctest::Contains("integer"), Error);
  CHECK_THROWS_AS(RunConfig::from_key_values({{"train.lr_other", "0.1x"}}), Error);
  CHECK_THROWS_AS(RunConfig::from_key_values({{"toggles.phase_correction", "maybe"}}), Error);
  CHECK_THROWS_AS(RunConfig::from_key_values({{"train.seed", "-1"}}), Error);
  RunConfig c;
  c.export_percentile = 101;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.grid.sample_rate = 8000;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.train.lr_other = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  testing::TempDir dir;
  CHECK_THROWS_AS(load_run_config(dir / "missing.cfg"), Error);
}

TEST_CASE("checked-in configs parse") {
  for (const char* name : {"default.cfg", "synthetic.cfg"}) {
    CAPTURE(name);
    const auto path = std::filesystem::path(TFSPLAT_SOURCE_DIR) / "configs" / name;
    const RunConfig c = load_run_config(path);
    CHECK_NOTHROW(c.validate());
  }
}
