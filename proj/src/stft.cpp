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

#include "emotag/stft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>

#include "emotag/error.hpp"

namespace emotag {

Index stft_frame_count(Index n_samples, int hop) {
  return 1 + n_samples / hop;
}

MatrixXd stft_magnitude(const std::vector<float>& samples, int window, int hop) {
  const auto n = static_cast<Index>(samples.size());
  if (n < window)
    fail("too-short", "signal of ", n, " samples is shorter than one ", window,
         "-sample analysis window");

  VectorXd hann(window);
  for (int i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / window);

  const Index frames = stft_frame_count(n, hop);
  const int bins = window / 2 + 1;
  MatrixXd mag(bins, frames);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<size_t>(window));
  std::vector<std::complex<double>> spectrum;

  for (Index f = 0; f < frames; ++f) {
    const Index start = f * hop - window / 2;
    for (int i = 0; i < window; ++i) {
      const Index s = start + i;
      buf[static_cast<size_t>(i)] =
          (s >= 0 && s < n) ? hann[i] * samples[static_cast<size_t>(s)] : 0.0;
    }
    fft.fwd(spectrum, buf);
    for (int b = 0; b < bins; ++b)
      mag(b, f) = std::abs(spectrum[static_cast<size_t>(b)]);
  }
  return mag;
}

}  // namespace emotag
