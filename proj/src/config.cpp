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

#include "emotag/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emotag {
namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"paths.manifest", "manifest.tsv"},
      {"paths.vocab", "vocabulary.txt"},
      {"paths.cache_dir", "cache"},
      {"paths.runs_dir", "runs"},
      {"paths.audio_root", ""},  // empty: directory of the manifest
      {"run.id", ""},
      {"run.seed", "1"},

      {"features.sample_rate", "44100"},
      {"features.mel_window", "1024"},
      {"features.mel_hop", "512"},
      {"features.pool_factor", "10"},
      {"features.hpcp_window", "4096"},
      {"features.hpcp_hop", "2048"},
      {"features.hpcp_min_freq", "40"},
      {"features.hpcp_max_freq", "5000"},
      {"features.hpcp_ref_freq", "440"},
      {"features.hpcp_peak_floor_db", "-60"},
      {"features.hpcp_window_semitones", "1.3333333333333333"},
      {"extract.workers", "0"},  // 0: hardware concurrency

      {"augment.mask_lo", "20"},
      {"augment.mask_hi", "60"},
      {"augment.gaussian_weight", "0"},
      {"augment.seed", "0"},
      {"augment.masks_per_sample", "1"},

      {"train.mode", "short"},
      {"train.branch", "hpcp"},
      {"train.noisy", "false"},
      {"train.max_epochs", "100"},
      {"train.lr", "0.0001"},
      {"train.patience", "5"},
      {"train.batch_size", "4"},
      {"train.chunks_per_track", "1"},

      {"model.mel_channels", "32,64,128,256"},
      {"model.hpcp_channels", "32,64,128"},
      {"model.rnn_hidden", "128"},
      {"model.fusion_hidden", "256"},
      {"model.gem_p", "3.0"},
      {"model.stochastic_blocks", "3"},
      {"model.bypass_prob", "0.1"},
      {"model.dropout", "0.1"},

      {"selftrain.mix_ratio", "1.0"},
      {"selftrain.fixed_thresholds", "false"},
      {"selftrain.tau_pos", "0.1"},
      {"selftrain.tau_neg", "1e-6"},
      {"selftrain.teacher_run", ""},
      {"selftrain.pseudo_path", ""},

      {"ensemble.objective", "pr_auc"},
      {"ensemble.alpha", "0.7"},
      {"ensemble.sweep", "false"},
      {"ensemble.grid_step", "0.05"},
      {"ensemble.short_run", ""},
      {"ensemble.long_run", ""},
      {"ensemble.split", "test"},

      {"evaluate.threshold", "0.5"},
      {"evaluate.averaging", "macro"},
      {"evaluate.predictions", ""},
      {"evaluate.split", "test"},

      {"predict.run", ""},
      {"predict.split", "test"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open config file ", path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config", path.string(), ":", line_no, ": expected key=value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail("config", "unknown config key '", key, "'");
  it->second = value;
  explicit_.insert(key);
}

void RunConfig::set_kv(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) fail("config", "expected key=value, got '", kv, "'");
  set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

bool RunConfig::is_set(const std::string& key) const {
  return explicit_.count(key) > 0;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail("config", "unknown config key '", key, "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  try {
    size_t pos = 0;
    const int v = std::stoi(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("config", "key '", key, "' is not an integer: '", get(key), "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  try {
    size_t pos = 0;
    const double v = std::stod(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("config", "key '", key, "' is not a number: '", get(key), "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("config", "key '", key, "' is not a boolean: '", v, "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::istringstream is(get(key));
  std::string field;
  while (std::getline(is, field, ',')) {
    field = trim(field);
    if (field.empty()) continue;
    try {
      out.push_back(std::stoi(field));
    } catch (const std::exception&) {
      fail("config", "key '", key, "': bad integer '", field, "'");
    }
  }
  if (out.empty()) fail("config", "key '", key, "' must list at least one integer");
  return out;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
  return os.str();
}

void RunConfig::write_resolved(const std::filesystem::path& run_dir) const {
  std::filesystem::create_directories(run_dir);
  std::ofstream out(run_dir / "config.resolved", std::ios::trunc);
  if (!out) fail("io", "cannot write resolved config in ", run_dir.string());
  out << serialize();
}

void RunConfig::apply_env() {
  if (const char* cache = std::getenv("EMOTAG_CACHE"); cache && *cache)
    set("paths.cache_dir", cache);
}

MelConfig RunConfig::mel_config() const {
  MelConfig cfg;
  cfg.sample_rate = get_int("features.sample_rate");
  cfg.window = get_int("features.mel_window");
  cfg.hop = get_int("features.mel_hop");
  return cfg;
}

HpcpConfig RunConfig::hpcp_config() const {
  HpcpConfig cfg;
  cfg.sample_rate = get_int("features.sample_rate");
  cfg.window = get_int("features.hpcp_window");
  cfg.hop = get_int("features.hpcp_hop");
  cfg.min_freq = get_double("features.hpcp_min_freq");
  cfg.max_freq = get_double("features.hpcp_max_freq");
  cfg.ref_freq = get_double("features.hpcp_ref_freq");
  cfg.peak_floor_db = get_double("features.hpcp_peak_floor_db");
  cfg.window_semitones = get_double("features.hpcp_window_semitones");
  return cfg;
}

NoisePolicy RunConfig::noise_policy(bool noisy) const {
  NoisePolicy p;
  // Explicit augment.* settings win; otherwise the noisy flag selects the
  // stronger student defaults and the stream seed follows the run seed.
  p.mask_lo = is_set("augment.mask_lo") ? get_int("augment.mask_lo") : (noisy ? 30 : 20);
  p.mask_hi = is_set("augment.mask_hi") ? get_int("augment.mask_hi") : (noisy ? 90 : 60);
  p.gaussian_weight = is_set("augment.gaussian_weight")
                          ? get_double("augment.gaussian_weight")
                          : (noisy ? 0.01 : 0.0);
  p.seed = is_set("augment.seed")
               ? static_cast<uint64_t>(get_int("augment.seed"))
               : derive_seed(static_cast<uint64_t>(get_int("run.seed")),
                             0x6175676dULL);
  p.masks_per_sample = get_int("augment.masks_per_sample");
  p.validate();
  return p;
}

TrainConfig RunConfig::train_config(bool noisy) const {
  TrainConfig cfg;
  cfg.mode = parse_train_mode(get("train.mode"));
  cfg.max_epochs = get_int("train.max_epochs");
  cfg.lr = get_double("train.lr");
  cfg.patience = get_int("train.patience");
  cfg.batch_size = get_int("train.batch_size");
  cfg.chunks_per_track = get_int("train.chunks_per_track");
  cfg.noise = noise_policy(noisy);
  cfg.seed = static_cast<uint64_t>(get_int("run.seed"));
  cfg.validate();
  return cfg;
}

ModelConfig RunConfig::model_config(int num_tags, BranchMode branch,
                                    NetMode mode) const {
  ModelConfig cfg;
  cfg.num_tags = num_tags;
  cfg.branch = branch;
  cfg.mode = mode;
  cfg.mel_channels = get_int_list("model.mel_channels");
  cfg.hpcp_channels = get_int_list("model.hpcp_channels");
  cfg.rnn_hidden = get_int("model.rnn_hidden");
  cfg.fusion_hidden = get_int("model.fusion_hidden");
  cfg.gem_p_init = get_double("model.gem_p");
  cfg.stochastic_blocks = get_int("model.stochastic_blocks");
  cfg.bypass_prob = get_double("model.bypass_prob");
  cfg.dropout = get_double("model.dropout");
  cfg.init_seed = static_cast<uint64_t>(get_int("run.seed"));
  return cfg;
}

}  // namespace emotag
