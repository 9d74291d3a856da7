/*
 * Copyright 2026 emotag contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "emotag/config.hpp"
#include "testsupport.hpp"

using namespace emotag;

TEST_SUITE("config") {

TEST_CASE("defaults are sane") {
  RunConfig cfg;
  CHECK(cfg.get_int("train.max_epochs") == 100);
  CHECK(cfg.get_double("train.lr") == 0.0001);
  CHECK(cfg.get_int("train.patience") == 5);
  CHECK(cfg.get_int("augment.mask_lo") == 20);
  CHECK(cfg.get_int("augment.mask_hi") == 60);
  CHECK(cfg.get_int_list("model.mel_channels") == std::vector<int>{32, 64, 128, 256});
  CHECK(cfg.get_int_list("model.hpcp_channels") == std::vector<int>{32, 64, 128});
}

TEST_CASE("unknown keys are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("augment.mask_medium", "5"), Error);
  CHECK_THROWS_AS(cfg.get("no.such.key"), Error);
}

TEST_CASE("file parsing with comments and overrides") {
  test::TempDir dir;
  const auto path = dir.path() / "run.cfg";
  std::ofstream(path) << "# smoke settings\n"
                         "augment.mask_hi=90   # noisy\n"
                         "train.mode = long\n"
                         "\n"
                         "model.rnn_hidden=16\n";
  RunConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.get_int("augment.mask_hi") == 90);
  CHECK(cfg.get("train.mode") == "long");
  CHECK(cfg.get_int("model.rnn_hidden") == 16);
  CHECK(cfg.is_set("augment.mask_hi"));
  CHECK_FALSE(cfg.is_set("augment.mask_lo"));
}

TEST_CASE("malformed lines and values raise config errors") {
  test::TempDir dir;
  const auto path = dir.path() / "bad.cfg";
  std::ofstream(path) << "just a line without equals\n";
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.load_file(path), Error);

  RunConfig cfg2;
  cfg2.set("train.max_epochs", "soon");
  CHECK_THROWS_AS(cfg2.get_int("train.max_epochs"), Error);
  cfg2.set("train.noisy", "maybe");
  CHECK_THROWS_AS(cfg2.get_bool("train.noisy"), Error);
}

TEST_CASE("serialization covers every key, sorted, and parses back") {
  test::TempDir dir;
  RunConfig cfg;
  cfg.set("run.id", "demo");
  cfg.write_resolved(dir.path());
  RunConfig back;
  back.load_file(dir.path() / "config.resolved");
  CHECK(back.get("run.id") == "demo");
  CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("noisy flag selects the stronger defaults unless overridden") {
  RunConfig cfg;
  const NoisePolicy normal = cfg.noise_policy(false);
  CHECK(normal.mask_lo == 20);
  CHECK(normal.mask_hi == 60);
  CHECK(normal.gaussian_weight == 0.0);
  const NoisePolicy noisy = cfg.noise_policy(true);
  CHECK(noisy.mask_lo == 30);
  CHECK(noisy.mask_hi == 90);
  CHECK(noisy.gaussian_weight == 0.01);

  cfg.set("augment.mask_hi", "75");
  CHECK(cfg.noise_policy(true).mask_hi == 75);  // explicit beats the default
}

TEST_CASE("EMOTAG_CACHE overrides the cache dir") {
  RunConfig cfg;
  cfg.set("paths.cache_dir", "elsewhere");
  setenv("EMOTAG_CACHE", "/tmp/envcache", 1);
  cfg.apply_env();
  unsetenv("EMOTAG_CACHE");
  CHECK(cfg.get("paths.cache_dir") == "/tmp/envcache");
}

TEST_CASE("typed assemblies validate") {
  RunConfig cfg;
  cfg.set("train.patience", "0");
  CHECK_THROWS_AS(cfg.train_config(false), Error);
  cfg.set("train.patience", "5");
  cfg.set("train.lr", "-1");
  CHECK_THROWS_AS(cfg.train_config(false), Error);
}

}  // TEST_SUITE
