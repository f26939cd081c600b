// Copyright 2026 The planereg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <fstream>
#include <set>

#include "planereg/config.hpp"
#include "planereg/error.hpp"
#include "test_util.hpp"

using namespace planereg;

TEST_CASE("dump and reload give an identical config") {
  ExperimentConfig cfg;
  apply_config_text(cfg,
                    "# comment line\n"
                    "mode = calcaneus\n"
                    "representation = quaternion\n"
                    "input.dims = 48\n"
                    "input.spacing_mm = 3.3\n"
                    "network.channels = 4,8,16\n"
                    "loss.preset = calcaneus.opt_comb\n"
                    "train.lr = 0.00123456789\n"
                    "aug.rot_deg = 30   # trailing comment\n"
                    "phantom.proportions = 0.5,0.25,0.25\n",
                    "test.cfg");
  CHECK(cfg.mode == AnatomyMode::kCalcaneus);
  CHECK(cfg.kind == RotationKind::kQuaternion);
  CHECK(cfg.dims == Dims{48, 48, 48});
  CHECK(cfg.channels == std::vector<int>{4, 8, 16});
  CHECK(cfg.weights.gamma == 0.1);
  CHECK(cfg.aug_rot_deg == 30.0);

  const std::string dump = dump_config(cfg);
  ExperimentConfig back;
  apply_config_text(back, dump, "dump");
  CHECK(dump_config(back) == dump);
  CHECK(back.lr == cfg.lr);
  CHECK(back.spacing_mm == cfg.spacing_mm);
  CHECK(back.phantom_proportions == cfg.phantom_proportions);

  // Every key appears exactly once in the dump.
  std::set<std::string> seen;
  for (const auto& k : config_keys()) {
    const bool listed = dump.find("\n" + k.name + " = ") != std::string::npos || dump.rfind(k.name + " = ", 0) == 0;
    CHECK(listed);
    CHECK(seen.insert(k.name).second);
  }
}

TEST_CASE("config errors name the source line and key") {
  ExperimentConfig cfg;
  try {
    apply_config_text(cfg, "mode = ankle\n\nbogus.key = 1\n", "exp.cfg");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("exp.cfg:3") != std::string::npos);
    CHECK(msg.find("bogus.key") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_text(cfg, "train.epochs = many\n", "x"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "no equals sign\n", "x"), ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "representation=matrix"), ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "seed"), ValidationError);
}

TEST_CASE("overrides and the effective weights") {
  ExperimentConfig cfg;
  apply_override(cfg, "loss.alpha=0.7");
  apply_override(cfg, "loss.beta=0.3");
  apply_override(cfg, "train.epochs=3");
  CHECK(get_config_value(cfg, "train.epochs") == "3");
  CHECK(cfg.effective_weights().alpha == 0.7);
  cfg.combined = false;
  cfg.weights = {0.6, 0.2, 0.2};
  const auto w = cfg.effective_weights();
  CHECK(w.alpha == 0.6);
  CHECK(w.beta == doctest::Approx(0.4));
  CHECK(w.gamma == 0.0);
  CHECK_THROWS_AS(get_config_value(cfg, "nope"), ValidationError);
}

TEST_CASE("validation") {
  ExperimentConfig cfg;
  cfg.validate();
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = ExperimentConfig{};
  cfg.fold = 5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = ExperimentConfig{};
  cfg.weights = {0.5, 0.6, 0.0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = ExperimentConfig{};
  cfg.grid_step = 0.3;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "ablation.which=weights"), ValidationError);
}

TEST_CASE("run.lock holds the invocation and a loadable config") {
  ExperimentConfig cfg;
  cfg.seed = 77;
  const auto dir = testing::temp_dir("runlock");
  write_run_lock(dir, cfg, "planereg train --seed 77");
  std::ifstream in(dir / "run.lock");
  std::string first;
  std::getline(in, first);
  CHECK(first.find("planereg train --seed 77") != std::string::npos);
  const auto back = load_config(dir / "run.lock");
  CHECK(back.seed == 77);
  CHECK(dump_config(back) == dump_config(cfg));
}
