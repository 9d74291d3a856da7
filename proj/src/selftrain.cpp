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

#include "emotag/selftrain.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace emotag {

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) fail("calibration", "empty sample for percentile");
  if (p <= 0.0 || p > 100.0) fail("calibration", "percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<size_t>(std::ceil(p / 100.0 * n));
  rank = std::max<size_t>(rank, 1);
  return values[rank - 1];
}

std::pair<double, double> calibrate_thresholds(const MatrixXd& scores,
                                               const MatrixXf& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    fail("shape", "calibration score/label shape mismatch");
  std::vector<double> pos, neg;
  for (Index j = 0; j < scores.cols(); ++j)
    for (Index i = 0; i < scores.rows(); ++i) {
      if (labels(i, j) > 0.5f)
        pos.push_back(scores(i, j));
      else
        neg.push_back(scores(i, j));
    }
  if (pos.empty())
    fail("calibration",
         "no ground-truth-positive cells; pass --fixed-thresholds to use the "
         "fixed constants");
  if (neg.empty())
    fail("calibration",
         "no ground-truth-negative cells; pass --fixed-thresholds to use the "
         "fixed constants");
  const double tau_pos = nearest_rank_percentile(pos, 95.0);
  const double tau_neg = nearest_rank_percentile(neg, 5.0);
  if (!(tau_neg < tau_pos))
    fail("calibration", "calibrated tau_neg ", tau_neg, " >= tau_pos ", tau_pos);
  return {tau_pos, tau_neg};
}

PseudoLabelSet build_pseudo_labels(const MatrixXd& probs,
                                   const std::vector<std::string>& track_ids,
                                   double tau_pos, double tau_neg) {
  if (static_cast<Index>(track_ids.size()) != probs.rows())
    fail("shape", "track id count != probability rows");
  if (!(tau_neg < tau_pos))
    fail("calibration", "tau_neg must be < tau_pos");
  PseudoLabelSet set;
  set.tau_pos = tau_pos;
  set.tau_neg = tau_neg;
  for (Index i = 0; i < probs.rows(); ++i)
    for (Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(i, j);
      if (p > tau_pos) {
        set.entries[{track_ids[static_cast<size_t>(i)], static_cast<int>(j)}] = true;
        ++set.n_positive;
      } else if (p < tau_neg) {
        set.entries[{track_ids[static_cast<size_t>(i)], static_cast<int>(j)}] = false;
        ++set.n_negative;
      } else {
        ++set.n_abstain;
      }
    }
  return set;
}

std::vector<TrainExample> pseudo_examples(const PseudoLabelSet& set, int num_tags) {
  std::map<std::string, TrainExample> by_track;
  for (const auto& [key, positive] : set.entries) {
    const auto& [track_id, tag] = key;
    if (tag < 0 || tag >= num_tags)
      fail("integrity", "pseudo-label tag index ", tag, " out of range");
    auto it = by_track.find(track_id);
    if (it == by_track.end()) {
      TrainExample e;
      e.track_id = track_id;
      e.labels = RowVectorX<float>::Zero(num_tags);
      e.mask = RowVectorX<float>::Zero(num_tags);
      it = by_track.emplace(track_id, std::move(e)).first;
    }
    it->second.labels[tag] = positive ? 1.0f : 0.0f;
    it->second.mask[tag] = 1.0f;
  }
  std::vector<TrainExample> out;
  out.reserve(by_track.size());
  for (auto& [id, e] : by_track) out.push_back(std::move(e));
  return out;
}

void PseudoLabelSet::save(const std::filesystem::path& tsv_path) const {
  {
    std::ofstream out(tsv_path, std::ios::trunc);
    if (!out) fail("io", "cannot write pseudo labels ", tsv_path.string());
    for (const auto& [key, positive] : entries)
      out << key.first << '\t' << key.second << '\t' << (positive ? 1 : 0) << "\n";
  }
  nlohmann::json j{{"tau_pos", tau_pos},
                   {"tau_neg", tau_neg},
                   {"teacher_run_id", teacher_run_id},
                   {"n_positive", n_positive},
                   {"n_negative", n_negative},
                   {"n_abstain", n_abstain}};
  std::ofstream side(tsv_path.string() + ".json", std::ios::trunc);
  if (!side) fail("io", "cannot write pseudo-label sidecar");
  side << j.dump(2) << "\n";
}

PseudoLabelSet PseudoLabelSet::load(const std::filesystem::path& tsv_path) {
  PseudoLabelSet set;
  std::ifstream in(tsv_path);
  if (!in) fail("io", "cannot open pseudo labels ", tsv_path.string(),
                "; run 'pseudolabel' first");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string id, tag_s, val_s;
    if (!std::getline(is, id, '\t') || !std::getline(is, tag_s, '\t') ||
        !std::getline(is, val_s, '\t'))
      fail("parse", tsv_path.string(), ":", line_no, ": expected 3 fields");
    int tag = 0;
    try {
      tag = std::stoi(tag_s);
    } catch (const std::exception&) {
      fail("parse", tsv_path.string(), ":", line_no, ": bad tag index");
    }
    if (val_s != "0" && val_s != "1")
      fail("parse", tsv_path.string(), ":", line_no, ": label must be 0 or 1");
    const bool positive = val_s == "1";
    set.entries[{id, tag}] = positive;
    if (positive)
      ++set.n_positive;
    else
      ++set.n_negative;
  }

  const auto sidecar = tsv_path.string() + ".json";
  std::ifstream side(sidecar);
  if (side) {
    nlohmann::json j = nlohmann::json::parse(side, nullptr, false);
    if (!j.is_discarded()) {
      set.tau_pos = j.value("tau_pos", set.tau_pos);
      set.tau_neg = j.value("tau_neg", set.tau_neg);
      set.teacher_run_id = j.value("teacher_run_id", std::string{});
      set.n_abstain = j.value("n_abstain", int64_t{0});
    }
  }
  return set;
}

}  // namespace emotag
