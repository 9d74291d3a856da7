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
#include <fstream>
#include <map>

#include <json.hpp>

#include "emotag/chunking.hpp"
#include "emotag/model.hpp"

namespace emotag {

struct CheckpointMeta {
  ModelConfig config;
  TrainMode train_mode = TrainMode::short_mode;
  int epoch = 0;
  double best_val_auc = 0.0;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

namespace detail {

inline void ckpt_put_u32(std::ofstream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}
inline uint32_t ckpt_get_u32(std::ifstream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace detail

/// Single self-describing archive: "EMCK", version, JSON metadata (config +
/// training mode + epoch + best validation ROC-AUC), then named float32
/// tensors (parameters, GeM exponents, batchnorm running stats).
template <typename S>
void save_checkpoint(TaggerModel<S>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["config"] = model_config_to_json(meta.config);
  j["train_mode"] = to_string(meta.train_mode);
  j["epoch"] = meta.epoch;
  j["best_val_auc"] = meta.best_val_auc;
  const std::string header = j.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("io", "cannot write checkpoint ", path.string());
    out.write("EMCK", 4);
    out.put(1);
    detail::ckpt_put_u32(out, static_cast<uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    auto tensors = model.state();
    detail::ckpt_put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (auto& [name, mat] : tensors) {
      detail::ckpt_put_u32(out, static_cast<uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::ckpt_put_u32(out, static_cast<uint32_t>(mat->rows()));
      detail::ckpt_put_u32(out, static_cast<uint32_t>(mat->cols()));
      for (Index c = 0; c < mat->cols(); ++c)
        for (Index r = 0; r < mat->rows(); ++r) {
          const float v = static_cast<float>((*mat)(r, c));
          out.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
    }
    if (!out) fail("io", "write failed for ", path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline CheckpointMeta read_checkpoint_meta(std::ifstream& in,
                                           const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "EMCK")
    fail("corrupt-cache", path.string(), ": not a checkpoint file");
  if (in.get() != 1) fail("corrupt-cache", path.string(), ": bad version");
  const uint32_t len = detail::ckpt_get_u32(in);
  std::string header(len, '\0');
  in.read(header.data(), len);
  if (!in) fail("corrupt-cache", path.string(), ": truncated header");
  nlohmann::json j = nlohmann::json::parse(header, nullptr, false);
  if (j.is_discarded()) fail("corrupt-cache", path.string(), ": bad metadata");
  CheckpointMeta meta;
  meta.config = model_config_from_json(j.at("config"));
  meta.train_mode = parse_train_mode(j.at("train_mode").get<std::string>());
  meta.epoch = j.at("epoch").get<int>();
  meta.best_val_auc = j.at("best_val_auc").get<double>();
  return meta;
}

inline CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io", "cannot open checkpoint ", path.string(),
                "; run 'train' first");
  return read_checkpoint_meta(in, path);
}

/// Loads weights into an existing model after verifying the architecture
/// matches the stored config.
template <typename S>
CheckpointMeta load_checkpoint(TaggerModel<S>& model,
                               const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io", "cannot open checkpoint ", path.string(),
                "; run 'train' first");
  const CheckpointMeta meta = read_checkpoint_meta(in, path);
  if (!meta.config.compatible_with(model.config()))
    fail("config", path.string(),
         ": checkpoint architecture does not match the model");

  auto tensors = model.state();
  std::map<std::string, MatrixX<S>*> by_name;
  for (auto& [name, mat] : tensors) by_name[name] = mat;

  const uint32_t count = detail::ckpt_get_u32(in);
  if (count != tensors.size())
    fail("corrupt-cache", path.string(), ": tensor count ", count, " != expected ",
         tensors.size());
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = detail::ckpt_get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rows = detail::ckpt_get_u32(in);
    const uint32_t cols = detail::ckpt_get_u32(in);
    auto it = by_name.find(name);
    if (it == by_name.end())
      fail("corrupt-cache", path.string(), ": unknown tensor '", name, "'");
    if (it->second->rows() != static_cast<Index>(rows) ||
        it->second->cols() != static_cast<Index>(cols))
      fail("corrupt-cache", path.string(), ": tensor '", name, "' shape mismatch");
    for (uint32_t c = 0; c < cols; ++c)
      for (uint32_t r = 0; r < rows; ++r) {
        float v;
        in.read(reinterpret_cast<char*>(&v), sizeof(float));
        (*it->second)(r, c) = static_cast<S>(v);
      }
  }
  if (!in) fail("corrupt-cache", path.string(), ": truncated tensor data");
  return meta;
}

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"num_tags", cfg.num_tags},
          {"branch", to_string(cfg.branch)},
          {"mode", to_string(cfg.mode)},
          {"mel_channels", cfg.mel_channels},
          {"hpcp_channels", cfg.hpcp_channels},
          {"rnn_hidden", cfg.rnn_hidden},
          {"fusion_hidden", cfg.fusion_hidden},
          {"gem_p_init", cfg.gem_p_init},
          {"stochastic_blocks", cfg.stochastic_blocks},
          {"bypass_prob", cfg.bypass_prob},
          {"dropout", cfg.dropout},
          {"init_seed", cfg.init_seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.num_tags = j.at("num_tags").get<int>();
  cfg.branch = parse_branch_mode(j.at("branch").get<std::string>());
  cfg.mode = parse_net_mode(j.at("mode").get<std::string>());
  cfg.mel_channels = j.at("mel_channels").get<std::vector<int>>();
  cfg.hpcp_channels = j.at("hpcp_channels").get<std::vector<int>>();
  cfg.rnn_hidden = j.at("rnn_hidden").get<int>();
  cfg.fusion_hidden = j.at("fusion_hidden").get<int>();
  cfg.gem_p_init = j.at("gem_p_init").get<double>();
  cfg.stochastic_blocks = j.at("stochastic_blocks").get<int>();
  cfg.bypass_prob = j.at("bypass_prob").get<double>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.init_seed = j.at("init_seed").get<uint64_t>();
  return cfg;
}

}  // namespace emotag
