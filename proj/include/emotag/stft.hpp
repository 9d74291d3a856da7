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

#include <vector>

#include "emotag/types.hpp"

namespace emotag {

/// Frames are centered: frame k covers samples [k*hop - window/2,
/// k*hop + window/2), zero-padded at the signal edges, so
/// frame count = 1 + floor(n/hop).
Index stft_frame_count(Index n_samples, int hop);

/// Magnitude spectrogram, Hann window, centered frames.
/// Returns [window/2 + 1 x frames]. Throws "too-short" when the signal is
/// shorter than one window.
MatrixXd stft_magnitude(const std::vector<float>& samples, int window, int hop);

}  // namespace emotag
