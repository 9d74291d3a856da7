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
#include <vector>

#include "emotag/feature_cache.hpp"
#include "emotag/types.hpp"

namespace emotag {

struct MelConfig {
  int sample_rate = 44100;
  int window = 1024;
  int hop = 512;
  int bins = kMelBins;
  double log_floor = 1e-6;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Center frequencies (Hz) of the triangular filters, mel-spaced over
/// [0, sample_rate/2].
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

/// Log-compressed Mel energy spectrogram, pre-pooling: [bins x frames] with
/// frames = 1 + floor(n/hop). Silence maps to log(log_floor) everywhere.
FeatureMatrix mel_spectrogram(const std::vector<float>& samples,
                              const std::string& track_id,
                              const MelConfig& cfg = {});

/// Column-wise average pooling by `factor`; trailing remainder frames are
/// dropped. factor 1 is the identity.
FeatureMatrix temporal_avg_pool(const FeatureMatrix& m, int factor);

MatrixXf temporal_avg_pool(const MatrixXf& m, int factor);

}  // namespace emotag
