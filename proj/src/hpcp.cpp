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

#include "emotag/hpcp.hpp"

#include <cmath>

#include "emotag/error.hpp"
#include "emotag/stft.hpp"

namespace emotag {
namespace {

// Offset of the true peak from the center bin, from a parabola through the
// three log-magnitudes around a local maximum.
double parabolic_offset(double l, double c, double r) {
  const double denom = l - 2.0 * c + r;
  if (denom == 0.0) return 0.0;
  double d = 0.5 * (l - r) / denom;
  if (d > 0.5) d = 0.5;
  if (d < -0.5) d = -0.5;
  return d;
}

}  // namespace

FeatureMatrix hpcp(const std::vector<float>& samples, const std::string& track_id,
                   const HpcpConfig& cfg) {
  if (samples.empty()) fail("too-short", "empty audio for track '", track_id, "'");
  const MatrixXd mag = stft_magnitude(samples, cfg.window, cfg.hop);
  const int fft_bins = static_cast<int>(mag.rows());
  const Index frames = mag.cols();

  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.window;
  int k_lo = static_cast<int>(std::ceil(cfg.min_freq / bin_hz));
  int k_hi = static_cast<int>(std::floor(cfg.max_freq / bin_hz));
  k_lo = std::max(k_lo, 1);
  k_hi = std::min(k_hi, fft_bins - 2);
  const double floor_ratio = std::pow(10.0, cfg.peak_floor_db / 20.0);
  const double half_window = cfg.window_semitones / 2.0;

  MatrixXd out = MatrixXd::Zero(cfg.bins, frames);

  for (Index f = 0; f < frames; ++f) {
    const auto col = mag.col(f);
    const double frame_max = col.segment(k_lo, k_hi - k_lo + 1).maxCoeff();
    if (frame_max <= 0.0) continue;  // silent frame stays all-zero
    const double threshold = frame_max * floor_ratio;

    for (int k = k_lo; k <= k_hi; ++k) {
      const double c = col(k);
      if (c < threshold) continue;
      if (!(c > col(k - 1) && c >= col(k + 1))) continue;  // local maximum

      // Refine the peak frequency on the log-magnitude parabola.
      const double eps = frame_max * 1e-12;
      const double delta = parabolic_offset(std::log(col(k - 1) + eps),
                                            std::log(c + eps),
                                            std::log(col(k + 1) + eps));
      const double freq = (k + delta) * bin_hz;
      if (freq < cfg.min_freq || freq > cfg.max_freq) continue;

      // Mainlobe energy: scalloping-invariant squared magnitude.
      double energy = 0.0;
      for (int j = std::max(0, k - 3); j <= std::min(fft_bins - 1, k + 3); ++j)
        energy += col(j) * col(j);

      // Pitch-class position in semitones relative to the reference.
      double pc = 12.0 * std::log2(freq / cfg.ref_freq);
      pc = std::fmod(pc, 12.0);
      if (pc < 0.0) pc += 12.0;

      for (int b = 0; b < cfg.bins; ++b) {
        double d = std::fabs(pc - b);
        d = std::min(d, 12.0 - d);  // circular distance
        if (d > half_window) continue;
        const double w = std::cos(M_PI / 2.0 * d / half_window);
        out(b, f) += w * w * energy;
      }
    }

    const double m = out.col(f).maxCoeff();
    if (m > 0.0) out.col(f) /= m;
  }

  FeatureMatrix result;
  result.kind = FeatureKind::hpcp;
  result.track_id = track_id;
  result.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop;
  result.data = out.cast<float>();
  return result;
}

}  // namespace emotag
