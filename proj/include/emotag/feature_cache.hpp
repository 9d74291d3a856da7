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

#include "emotag/types.hpp"

namespace emotag {

enum class FeatureKind : uint8_t { mel = 0, hpcp = 1 };

const char* to_string(FeatureKind k);

/// Time x feature matrix, stored feature-rows by frame-columns.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::mel;
  std::string track_id;
  double frame_rate = 0.0;  // frames per second
  MatrixXf data;            // rows x frames

  Index rows() const { return data.rows(); }
  Index frames() const { return data.cols(); }

  /// Enforces the per-kind row count (mel: 128, hpcp: 12).
  void validate() const;
};

/// Cache file layout (bit-exact, little-endian):
///   bytes 0-3  magic "EMOF"
///   byte  4    version = 1
///   byte  5    kind (0 = mel, 1 = hpcp)
///   bytes 6-9  rows   (u32)
///   bytes 10-13 frames (u32)
///   payload    rows*frames float32, row-major
/// Filename: <track_id>.<mel|hpcp>.emof
std::filesystem::path cache_path(const std::filesystem::path& dir,
                                 const std::string& track_id, FeatureKind kind);

bool cache_exists(const std::filesystem::path& dir, const std::string& track_id,
                  FeatureKind kind);

/// Writes via a temp file + atomic rename so concurrent extractors never
/// publish torn files.
void write_cache(const FeatureMatrix& m, const std::filesystem::path& dir);

FeatureMatrix read_cache(const std::string& track_id, FeatureKind kind,
                         const std::filesystem::path& dir);

}  // namespace emotag
