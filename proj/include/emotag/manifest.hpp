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
#include <string>
#include <unordered_map>
#include <vector>

#include "emotag/types.hpp"

namespace emotag {

/// Ordered tag list. Line order in the vocabulary file defines the column
/// index of each tag in every label/logit matrix.
struct TagVocabulary {
  std::vector<std::string> tags;
  std::unordered_map<std::string, int> index;

  static TagVocabulary from_tags(std::vector<std::string> tags);
  static TagVocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tags.size()); }
  bool contains(const std::string& tag) const { return index.count(tag) > 0; }
};

enum class Split { train, valid, test, unlabeled };

Split parse_split(const std::string& s);
const char* to_string(Split s);

struct TrackRecord {
  std::string track_id;
  std::string audio_path;  // relative to the manifest's directory
  double duration_s = 0.0;
  Split split = Split::train;
  std::vector<std::string> tags;  // file order preserved

  bool operator==(const TrackRecord&) const = default;
};

/// Track catalog. TSV schema (UTF-8, header row):
///   track_id<TAB>path<TAB>duration_s<TAB>split<TAB>tags
/// where `tags` is a comma-separated list (empty allowed) and split is one of
/// train/valid/test/unlabeled. Unlabeled rows must have an empty tag list.
struct TrackManifest {
  std::vector<TrackRecord> records;
  TagVocabulary vocabulary;

  static TrackManifest load(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& vocab_path);
  void save(const std::filesystem::path& manifest_path) const;

  std::vector<const TrackRecord*> split_records(Split split) const;
  const TrackRecord& find(const std::string& track_id) const;

  /// Binary [N x T] matrix for a labeled split, rows in manifest order.
  MatrixXf label_matrix(Split split) const;
};

}  // namespace emotag
