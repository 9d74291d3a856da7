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

#include "emotag/error.hpp"
#include "emotag/rng.hpp"
#include "emotag/types.hpp"

namespace emotag {

/// Training-time noise policy. Evaluation paths never touch this module.
struct NoisePolicy {
  int mask_lo = 20;
  int mask_hi = 60;
  double gaussian_weight = 0.0;
  uint64_t seed = 0;
  int masks_per_sample = 1;  // time+frequency mask pairs per sample

  static NoisePolicy normal(uint64_t seed) { return {20, 60, 0.0, seed, 1}; }
  static NoisePolicy noisy_student(uint64_t seed) { return {30, 90, 0.01, seed, 1}; }

  void validate() const {
    if (mask_lo < 0 || mask_lo > mask_hi)
      fail("config", "mask budget range [", mask_lo, ", ", mask_hi, "] invalid");
    if (gaussian_weight < 0.0)
      fail("config", "gaussian_weight must be >= 0");
    if (masks_per_sample < 1)
      fail("config", "masks_per_sample must be >= 1");
  }
};

namespace detail {
// Stream tags keep the per-purpose RNG draws independent of each other.
constexpr uint64_t kBudgetStream = 0x6275646765ULL;
constexpr uint64_t kMaskStream = 0x6d61736bULL;
constexpr uint64_t kGaussStream = 0x6761757373ULL;
}  // namespace detail

/// Max mask length for a batch, uniform on [lo, hi]; one budget is shared by
/// the time and frequency masks of every sample in the batch.
inline int sample_mask_budget(const NoisePolicy& policy, int64_t batch_index) {
  policy.validate();
  Rng rng(derive_seed(derive_seed(policy.seed, detail::kBudgetStream),
                      static_cast<uint64_t>(batch_index)));
  return static_cast<int>(rng.uniform_int(policy.mask_lo, policy.mask_hi));
}

/// One time mask (length ~ U[0, min(l_max, frames)], contiguous columns) and
/// one frequency mask (length ~ U[0, min(l_max, rows)], contiguous rows) per
/// sample — repeated masks_per_sample times — filled with the sample's
/// pre-mask mean. `sample_offset` distinguishes streams when several matrices
/// belong to the same sample (e.g. the mel and hpcp views).
template <typename Scalar>
void apply_masks(std::vector<MatrixX<Scalar>>& batch, int l_max,
                 const NoisePolicy& policy, int64_t batch_index,
                 int64_t sample_offset = 0) {
  if (l_max < 0) fail("config", "mask budget must be >= 0");
  policy.validate();
  const uint64_t base =
      derive_seed(derive_seed(policy.seed, detail::kMaskStream),
                  static_cast<uint64_t>(batch_index));
  for (size_t s = 0; s < batch.size(); ++s) {
    auto& m = batch[s];
    if (m.size() == 0) continue;
    Rng rng(derive_seed(base, static_cast<uint64_t>(sample_offset + static_cast<int64_t>(s))));
    const Scalar fill = m.mean();
    const Index frames = m.cols();
    const Index rows = m.rows();

    for (int rep = 0; rep < policy.masks_per_sample; ++rep) {
      const auto len_t = static_cast<Index>(
          rng.uniform_int(0, std::min<Index>(l_max, frames)));
      const auto t0 = static_cast<Index>(rng.uniform_int(0, frames - len_t));
      if (len_t > 0) m.middleCols(t0, len_t).setConstant(fill);

      const auto len_f = static_cast<Index>(
          rng.uniform_int(0, std::min<Index>(l_max, rows)));
      const auto f0 = static_cast<Index>(rng.uniform_int(0, rows - len_f));
      if (len_f > 0) m.middleRows(f0, len_f).setConstant(fill);
    }
  }
}

/// Adds weight * N(0,1) noise per cell.
template <typename Scalar>
void add_gaussian(std::vector<MatrixX<Scalar>>& batch, double weight, Rng& rng) {
  if (weight < 0.0) fail("config", "gaussian weight must be >= 0");
  if (weight == 0.0) return;
  for (auto& m : batch)
    for (Index c = 0; c < m.cols(); ++c)
      for (Index r = 0; r < m.rows(); ++r)
        m(r, c) += static_cast<Scalar>(weight * rng.normal());
}

/// Full training-time noise for one batch: shared mask budget, per-sample
/// masks, then Gaussian noise. Pure function of (batch, policy, batch_index).
template <typename Scalar>
void augment_batch(std::vector<MatrixX<Scalar>>& batch, const NoisePolicy& policy,
                   int64_t batch_index, int64_t sample_offset = 0) {
  const int budget = sample_mask_budget(policy, batch_index);
  apply_masks(batch, budget, policy, batch_index, sample_offset);
  if (policy.gaussian_weight > 0.0) {
    Rng rng(derive_seed(derive_seed(policy.seed, detail::kGaussStream),
                        static_cast<uint64_t>(batch_index) * 0x10000 +
                            static_cast<uint64_t>(sample_offset)));
    add_gaussian(batch, policy.gaussian_weight, rng);
  }
}

}  // namespace emotag
