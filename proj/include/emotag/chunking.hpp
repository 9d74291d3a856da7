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

#include <string>

#include "emotag/error.hpp"
#include "emotag/feature_cache.hpp"
#include "emotag/rng.hpp"

namespace emotag {

enum class TrainMode { long_mode, short_mode };

inline const char* to_string(TrainMode m) {
  return m == TrainMode::long_mode ? "long" : "short";
}
inline TrainMode parse_train_mode(const std::string& s) {
  if (s == "long") return TrainMode::long_mode;
  if (s == "short") return TrainMode::short_mode;
  fail("config", "unknown training mode '", s, "' (expected long|short)");
}

/// Frame geometry shared by both branches. A mel chunk of 80 pooled frames
/// and an hpcp chunk of 200 frames cover the same audio span; chunk k starts
/// at mel frame 80k and hpcp frame 200k (ratio exactly 2.5).
struct ChunkDims {
  static constexpr Index mel_chunk = 80;
  static constexpr Index hpcp_chunk = 200;
  static constexpr Index mel_long = 1600;
  static constexpr Index hpcp_long = 4000;
};

/// One training/inference view: fixed-size windows, zero-padded on the right
/// when the track is shorter, with the unpadded frame counts recorded.
struct ExampleView {
  MatrixXf mel;
  MatrixXf hpcp;  // empty in normal (mel-only) runs
  Index mel_valid = 0;
  Index hpcp_valid = 0;
};

namespace detail {
inline MatrixXf padded_window(const MatrixXf& m, Index start, Index len,
                              Index* valid) {
  MatrixXf out = MatrixXf::Zero(m.rows(), len);
  const Index avail = std::max<Index>(0, std::min(len, m.cols() - start));
  if (avail > 0) out.leftCols(avail) = m.middleCols(start, avail);
  *valid = std::max<Index>(avail, 0);
  return out;
}
}  // namespace detail

/// Leading long window (1600 mel / 4000 hpcp frames).
inline ExampleView long_view(const FeatureMatrix& mel, const FeatureMatrix* hpcp) {
  ExampleView v;
  v.mel = detail::padded_window(mel.data, 0, ChunkDims::mel_long, &v.mel_valid);
  if (hpcp)
    v.hpcp =
        detail::padded_window(hpcp->data, 0, ChunkDims::hpcp_long, &v.hpcp_valid);
  return v;
}

/// Consecutive non-overlapping chunk count for inference (final partial chunk
/// padded); at least 1.
inline Index num_chunks(Index mel_frames) {
  return std::max<Index>(1, (mel_frames + ChunkDims::mel_chunk - 1) /
                                ChunkDims::mel_chunk);
}

/// Aligned chunk k (mel offset 80k, hpcp offset 200k), zero-padded.
inline ExampleView chunk_view(const FeatureMatrix& mel, const FeatureMatrix* hpcp,
                              Index k) {
  ExampleView v;
  v.mel = detail::padded_window(mel.data, k * ChunkDims::mel_chunk,
                                ChunkDims::mel_chunk, &v.mel_valid);
  if (hpcp)
    v.hpcp = detail::padded_window(hpcp->data, k * ChunkDims::hpcp_chunk,
                                   ChunkDims::hpcp_chunk, &v.hpcp_valid);
  return v;
}

/// Chunks fully covered by the track; 0 when shorter than one chunk.
inline Index num_full_chunks(Index mel_frames) {
  return mel_frames / ChunkDims::mel_chunk;
}

/// Uniform choice among full chunks (the single padded chunk when the track
/// is shorter than one chunk).
inline Index random_chunk_index(Index mel_frames, Rng& rng) {
  const Index full = num_full_chunks(mel_frames);
  if (full <= 1) return 0;
  return static_cast<Index>(rng.uniform_int(0, full - 1));
}

}  // namespace emotag
