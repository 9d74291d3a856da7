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

#include "emotag/train.hpp"

#include <json.hpp>

#include <fstream>

namespace emotag {

std::vector<TrainExample> examples_for_split(const TrackManifest& manifest,
                                             Split split) {
  const int t = manifest.vocabulary.size();
  std::vector<TrainExample> out;
  for (const auto* rec : manifest.split_records(split)) {
    TrainExample e;
    e.track_id = rec->track_id;
    e.labels = RowVectorX<float>::Zero(t);
    for (const auto& tag : rec->tags)
      e.labels[manifest.vocabulary.index.at(tag)] = 1.0f;
    e.mask = RowVectorX<float>::Ones(t);
    out.push_back(std::move(e));
  }
  return out;
}

const FeatureMatrix& FeatureStore::mel(const std::string& track_id) {
  auto it = mel_.find(track_id);
  if (it == mel_.end())
    it = mel_.emplace(track_id, read_cache(track_id, FeatureKind::mel, dir_)).first;
  return it->second;
}

const FeatureMatrix* FeatureStore::hpcp(const std::string& track_id) {
  if (!want_hpcp_) return nullptr;
  auto it = hpcp_.find(track_id);
  if (it == hpcp_.end())
    it = hpcp_.emplace(track_id, read_cache(track_id, FeatureKind::hpcp, dir_)).first;
  return &it->second;
}

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("io", "cannot write training log ", path.string());
  for (const auto& e : log) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"val_roc_auc", e.val_roc_auc},
                     {"seconds", e.seconds}};
    out << j.dump() << "\n";
  }
}

}  // namespace emotag
