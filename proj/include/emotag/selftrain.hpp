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
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "emotag/train.hpp"

namespace emotag {

/// Fixed fallback decision thresholds (used when calibration is disabled).
constexpr double kFixedTauPos = 0.1;
constexpr double kFixedTauNeg = 1e-6;

enum class PseudoLabel : uint8_t { negative = 0, positive = 1, abstain = 2 };

/// Ternary teacher labels per (track, tag); abstentions are implicit (absent
/// from `entries`).
struct PseudoLabelSet {
  std::map<std::pair<std::string, int>, bool> entries;  // true = positive
  double tau_pos = kFixedTauPos;
  double tau_neg = kFixedTauNeg;
  std::string teacher_run_id;
  int64_t n_positive = 0, n_negative = 0, n_abstain = 0;

  PseudoLabel at(const std::string& track_id, int tag) const {
    auto it = entries.find({track_id, tag});
    if (it == entries.end()) return PseudoLabel::abstain;
    return it->second ? PseudoLabel::positive : PseudoLabel::negative;
  }

  /// TSV `track_id<TAB>tag_index<TAB>{1|0}` (abstain omitted) plus a JSON
  /// sidecar with thresholds, teacher run id and class counts.
  void save(const std::filesystem::path& tsv_path) const;
  static PseudoLabelSet load(const std::filesystem::path& tsv_path);
};

/// Sigmoid of chunk-averaged track logits, [N x T] in (0, 1).
template <typename S>
MatrixXd teacher_predict(TaggerModel<S>& teacher, FeatureStore& store,
                         const std::vector<std::string>& track_ids,
                         TrainMode mode) {
  const MatrixXd logits = predict_tracks(teacher, store, track_ids, mode);
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

/// Nearest-rank percentiles of the teacher's score distribution on labeled
/// data: tau_pos is the 95th percentile of scores at ground-truth-positive
/// cells, tau_neg the 5th percentile at ground-truth-negative cells.
std::pair<double, double> calibrate_thresholds(const MatrixXd& scores,
                                               const MatrixXf& labels);

/// Nearest-rank percentile of a sample (p in (0, 100]).
double nearest_rank_percentile(std::vector<double> values, double p);

PseudoLabelSet build_pseudo_labels(const MatrixXd& probs,
                                   const std::vector<std::string>& track_ids,
                                   double tau_pos, double tau_neg);

/// Pseudo-labeled training examples: one per track with at least one
/// non-abstain cell (all-abstain tracks contribute nothing and are dropped so
/// an all-abstain set reduces exactly to supervised training).
std::vector<TrainExample> pseudo_examples(const PseudoLabelSet& set, int num_tags);

/// Noisy-student training: labeled examples (full label rows) plus
/// pseudo-labeled ones (loss masked to non-abstain cells), early stopping on
/// the original labeled validation split. One teacher -> student generation.
template <typename S>
TrainResult train_student(TaggerModel<S>& student,
                          const std::vector<TrainExample>& labeled_train,
                          const std::vector<TrainExample>& valid_examples,
                          const PseudoLabelSet& pseudo, FeatureStore& store,
                          const TrainConfig& cfg, double mix_ratio = 1.0,
                          const std::filesystem::path* run_dir = nullptr) {
  if (student.config().mode != NetMode::student)
    fail("config", "train_student requires a student-mode model");
  auto extra = pseudo_examples(pseudo, student.config().num_tags);
  if (extra.empty())
    std::cerr << "warning: pseudo-label set has no usable entries; "
                 "proceeding as supervised-only\n";
  std::vector<TrainExample> combined = labeled_train;
  if (mix_ratio <= 0.0 || mix_ratio > 1.0)
    fail("config", "selftrain.mix_ratio must be in (0, 1]");
  if (mix_ratio >= 1.0) {
    combined.insert(combined.end(), extra.begin(), extra.end());
  } else {
    Rng rng(derive_seed(cfg.seed, 0x6d6978ULL));
    for (auto& e : extra)
      if (rng.bernoulli(mix_ratio)) combined.push_back(std::move(e));
  }
  return train_model(student, combined, valid_examples, store, cfg, run_dir);
}

}  // namespace emotag
