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

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "emotag/augment.hpp"
#include "emotag/hpcp.hpp"
#include "emotag/mel.hpp"
#include "emotag/model.hpp"
#include "emotag/train.hpp"

namespace emotag {

/// Flat key=value configuration with dotted namespaces. Every key is
/// registered with a default; unknown keys are rejected. `#` starts a
/// comment. The fully resolved set serializes into each run directory.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  void set_kv(const std::string& kv);  // "key=value"

  bool is_set(const std::string& key) const;  // explicitly, via file or set()
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  std::string serialize() const;
  void write_resolved(const std::filesystem::path& run_dir) const;

  /// Applies the EMOTAG_CACHE environment override.
  void apply_env();

  // Typed assemblies.
  MelConfig mel_config() const;
  HpcpConfig hpcp_config() const;
  NoisePolicy noise_policy(bool noisy) const;
  TrainConfig train_config(bool noisy) const;
  ModelConfig model_config(int num_tags, BranchMode branch, NetMode mode) const;

  std::filesystem::path runs_dir() const { return get("paths.runs_dir"); }
  std::filesystem::path run_dir() const { return runs_dir() / get("run.id"); }
  std::filesystem::path cache_dir() const { return get("paths.cache_dir"); }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace emotag
