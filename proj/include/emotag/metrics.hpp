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
#include <optional>
#include <string>
#include <vector>

#include "emotag/types.hpp"

namespace emotag {

/// Probability that a random positive outranks a random negative, ties
/// counted half (Mann-Whitney). nullopt when only one class is present.
std::optional<double> roc_auc(const VectorXd& scores, const VectorXi& labels);

/// Average precision over descending-score prefixes (tied scores enter as one
/// group). nullopt when there are no positives.
std::optional<double> pr_auc(const VectorXd& scores, const VectorXi& labels);

/// Binary F1 at a decision threshold (predicted positive when score >
/// threshold); 0 when nothing is predicted positive.
double f_score_tag(const VectorXd& scores, const VectorXi& labels, double threshold);

std::optional<double> tpr_tag(const VectorXd& scores, const VectorXi& labels,
                              double threshold);
std::optional<double> tnr_tag(const VectorXd& scores, const VectorXi& labels,
                              double threshold);

struct TagMetrics {
  std::string tag;
  std::optional<double> roc_auc, pr_auc, tpr, tnr;
  double f_score = 0.0;
  double threshold = 0.5;
};

/// Macro metrics over tags; undefined per-tag values are dropped from the
/// corresponding mean (the included-tag counts say how many survived).
struct MetricsReport {
  double roc_auc = 0.0, pr_auc = 0.0, f_score = 0.0, avg_tpr = 0.0, avg_tnr = 0.0;
  int roc_tags = 0, pr_tags = 0, tpr_tags = 0, tnr_tags = 0;
  std::string averaging = "macro";
  std::vector<TagMetrics> per_tag;

  std::string to_json() const;
  std::string per_tag_csv() const;
};

/// scores: [N x T] (logits or probabilities; ranking metrics are
/// transform-invariant, thresholds apply to the given values as-is).
MetricsReport compute_report(const MatrixXd& scores, const MatrixXf& labels,
                             const std::vector<std::string>& tag_names,
                             const VectorXd& thresholds, bool micro = false);

MetricsReport compute_report(const MatrixXd& scores, const MatrixXf& labels,
                             const std::vector<std::string>& tag_names,
                             double threshold = 0.5, bool micro = false);

/// Per-tag thresholds maximizing F1 on the given data.
VectorXd tune_thresholds(const MatrixXd& scores, const MatrixXf& labels);

/// Macro ROC-AUC convenience used as the validation metric during training.
double macro_roc_auc(const MatrixXd& scores, const MatrixXf& labels);

/// Prediction TSV: `track_id` then T logits per row.
void write_predictions(const std::filesystem::path& path,
                       const std::vector<std::string>& track_ids,
                       const MatrixXd& logits);
std::pair<std::vector<std::string>, MatrixXd> read_predictions(
    const std::filesystem::path& path);

}  // namespace emotag
