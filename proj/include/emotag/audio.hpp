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
#include <vector>

#include "emotag/manifest.hpp"

namespace emotag {

struct AudioClip {
  std::vector<float> samples;  // mono, [-1, 1]
  int sample_rate = 0;
};

/// Decodes a RIFF/WAV file (PCM 8/16/24/32-bit or IEEE float 32/64) to mono
/// by channel mean.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes mono samples as 16-bit PCM WAV.
void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate);

/// Windowed-sinc resampler. Output length = round(n * to_rate / from_rate).
std::vector<float> resample(const std::vector<float>& in, int from_rate, int to_rate);

/// Decodes the record's audio file and resamples to `sample_rate` if needed.
/// Decode failures carry the track_id.
AudioClip load_audio(const TrackRecord& record, int sample_rate,
                     const std::filesystem::path& audio_root);

}  // namespace emotag
