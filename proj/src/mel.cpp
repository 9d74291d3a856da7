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

#include "emotag/mel.hpp"

#include <cmath>

#include "emotag/error.hpp"
#include "emotag/stft.hpp"

namespace emotag {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// Triangular filters with unit peak, edges mel-spaced over [0, sr/2].
// Returns [bins x fft_bins].
MatrixXd mel_filterbank(const MelConfig& cfg) {
  const int fft_bins = cfg.window / 2 + 1;
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(static_cast<size_t>(cfg.bins) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / (cfg.bins + 1));

  MatrixXd fb = MatrixXd::Zero(cfg.bins, fft_bins);
  for (int m = 0; m < cfg.bins; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double mid = edges[static_cast<size_t>(m) + 1];
    const double hi = edges[static_cast<size_t>(m) + 2];
    for (int k = 0; k < fft_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.window;
      if (f > lo && f < mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> centers(static_cast<size_t>(cfg.bins));
  for (int m = 0; m < cfg.bins; ++m)
    centers[static_cast<size_t>(m)] = mel_to_hz(mel_max * (m + 1) / (cfg.bins + 1));
  return centers;
}

FeatureMatrix mel_spectrogram(const std::vector<float>& samples,
                              const std::string& track_id, const MelConfig& cfg) {
  if (samples.empty()) fail("too-short", "empty audio for track '", track_id, "'");
  const MatrixXd mag = stft_magnitude(samples, cfg.window, cfg.hop);
  const MatrixXd power = mag.array().square();
  const MatrixXd energies = mel_filterbank(cfg) * power;

  FeatureMatrix m;
  m.kind = FeatureKind::mel;
  m.track_id = track_id;
  m.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop;
  m.data = (energies.array() + cfg.log_floor).log().cast<float>();
  return m;
}

MatrixXf temporal_avg_pool(const MatrixXf& m, int factor) {
  if (factor < 1) fail("config", "pooling factor must be >= 1, got ", factor);
  if (factor == 1) return m;
  if (m.cols() < factor)
    fail("too-short", m.cols(), " frames cannot be pooled by factor ", factor);
  const Index out_frames = m.cols() / factor;
  MatrixXf out(m.rows(), out_frames);
  for (Index c = 0; c < out_frames; ++c)
    out.col(c) = m.middleCols(c * factor, factor).rowwise().mean();
  return out;
}

FeatureMatrix temporal_avg_pool(const FeatureMatrix& m, int factor) {
  FeatureMatrix out = m;
  out.data = temporal_avg_pool(m.data, factor);
  out.frame_rate = m.frame_rate / factor;
  return out;
}

}  // namespace emotag
