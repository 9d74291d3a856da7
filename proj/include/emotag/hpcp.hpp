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

struct HpcpConfig {
  int sample_rate = 44100;
  int window = 4096;
  int hop = 2048;
  int bins = kHpcpBins;
  double min_freq = 40.0;
  double max_freq = 5000.0;
  double ref_freq = 440.0;         // pitch class 0 sits on A
  double peak_floor_db = -60.0;    // relative to the frame maximum
  double window_semitones = 4.0 / 3.0;  // full width of the cos^2 window
};

/// 12-bin harmonic pitch class profile, one column per frame.
///
/// Per frame: spectral peaks are picked from the magnitude spectrum inside
/// [min_freq, max_freq] above the relative floor; each peak's frequency is
/// refined by parabolic interpolation and its energy taken as the summed
/// squared magnitude of the surrounding mainlobe bins; the energy is spread
/// over pitch-class bins within the cos^2 weighting window; finally the frame
/// is normalized by its own maximum (silent frames stay all-zero).
FeatureMatrix hpcp(const std::vector<float>& samples, const std::string& track_id,
                   const HpcpConfig& cfg = {});

}  // namespace emotag
