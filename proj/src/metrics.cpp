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

#include "emotag/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emotag/error.hpp"

namespace emotag {
namespace {

struct Counts {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Counts confusion(const VectorXd& scores, const VectorXi& labels, double thr) {
  Counts c;
  for (Index i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > thr;
    const bool actual = labels[i] != 0;
    if (pred && actual)
      ++c.tp;
    else if (pred)
      ++c.fp;
    else if (actual)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double mean_or_nan(double sum, int count) {
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::optional<double> roc_auc(const VectorXd& scores, const VectorXi& labels) {
  if (scores.size() != labels.size()) fail("shape", "roc_auc size mismatch");
  const Index n = scores.size();
  int64_t pos = 0;
  for (Index i = 0; i < n; ++i) pos += labels[i] != 0;
  const int64_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores[a] < scores[b]; });

  // Average ranks across ties, 1-based.
  double rank_sum_pos = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores[order[static_cast<size_t>(j + 1)]] ==
                            scores[order[static_cast<size_t>(i)]])
      ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (Index k = i; k <= j; ++k)
      if (labels[order[static_cast<size_t>(k)]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::optional<double> pr_auc(const VectorXd& scores, const VectorXi& labels) {
  if (scores.size() != labels.size()) fail("shape", "pr_auc size mismatch");
  const Index n = scores.size();
  int64_t total_pos = 0;
  for (Index i = 0; i < n; ++i) total_pos += labels[i] != 0;
  if (total_pos == 0) return std::nullopt;

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores[a] > scores[b]; });

  double ap = 0.0, recall_prev = 0.0;
  int64_t tp = 0, seen = 0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores[order[static_cast<size_t>(j + 1)]] ==
                            scores[order[static_cast<size_t>(i)]])
      ++j;
    for (Index k = i; k <= j; ++k) {
      ++seen;
      tp += labels[order[static_cast<size_t>(k)]] != 0;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j + 1;
  }
  return ap;
}

double f_score_tag(const VectorXd& scores, const VectorXi& labels, double thr) {
  const Counts c = confusion(scores, labels, thr);
  if (c.tp + c.fp == 0) return 0.0;  // no predicted positives
  if (c.tp == 0) return 0.0;
  const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 2.0 * p * r / (p + r);
}

std::optional<double> tpr_tag(const VectorXd& scores, const VectorXi& labels,
                              double thr) {
  const Counts c = confusion(scores, labels, thr);
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> tnr_tag(const VectorXd& scores, const VectorXi& labels,
                              double thr) {
  const Counts c = confusion(scores, labels, thr);
  if (c.tn + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

MetricsReport compute_report(const MatrixXd& scores, const MatrixXf& labels,
                             const std::vector<std::string>& tag_names,
                             const VectorXd& thresholds, bool micro) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    fail("shape", "predictions ", scores.rows(), "x", scores.cols(),
         " vs labels ", labels.rows(), "x", labels.cols());
  const Index t = scores.cols();
  if (static_cast<Index>(tag_names.size()) != t)
    fail("shape", "tag name count mismatch");
  if (thresholds.size() != t) fail("shape", "threshold count mismatch");

  MetricsReport rep;
  double roc_sum = 0, pr_sum = 0, f_sum = 0, tpr_sum = 0, tnr_sum = 0;
  for (Index j = 0; j < t; ++j) {
    const VectorXd s = scores.col(j);
    VectorXi y(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i)
      y[i] = labels(i, j) > 0.5f ? 1 : 0;

    TagMetrics tm;
    tm.tag = tag_names[static_cast<size_t>(j)];
    tm.threshold = thresholds[j];
    tm.roc_auc = roc_auc(s, y);
    tm.pr_auc = pr_auc(s, y);
    tm.f_score = f_score_tag(s, y, tm.threshold);
    tm.tpr = tpr_tag(s, y, tm.threshold);
    tm.tnr = tnr_tag(s, y, tm.threshold);

    if (tm.roc_auc) {
      roc_sum += *tm.roc_auc;
      ++rep.roc_tags;
    }
    if (tm.pr_auc) {
      pr_sum += *tm.pr_auc;
      ++rep.pr_tags;
    }
    f_sum += tm.f_score;
    if (tm.tpr) {
      tpr_sum += *tm.tpr;
      ++rep.tpr_tags;
    }
    if (tm.tnr) {
      tnr_sum += *tm.tnr;
      ++rep.tnr_tags;
    }
    rep.per_tag.push_back(std::move(tm));
  }

  if (micro) {
    // Pool every (track, tag) cell into one binary problem.
    const Index cells = scores.rows() * t;
    VectorXd s(cells);
    VectorXi y(cells);
    VectorXd thr_cells(cells);
    Index k = 0;
    for (Index j = 0; j < t; ++j)
      for (Index i = 0; i < scores.rows(); ++i, ++k) {
        s[k] = scores(i, j);
        y[k] = labels(i, j) > 0.5f ? 1 : 0;
        thr_cells[k] = thresholds[j];
      }
    rep.averaging = "micro";
    rep.roc_auc = roc_auc(s, y).value_or(std::numeric_limits<double>::quiet_NaN());
    rep.pr_auc = pr_auc(s, y).value_or(std::numeric_limits<double>::quiet_NaN());
    // Micro F/TPR/TNR from pooled confusion counts at per-tag thresholds.
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (Index c = 0; c < cells; ++c) {
      const bool pred = s[c] > thr_cells[c];
      const bool actual = y[c] != 0;
      tp += pred && actual;
      fp += pred && !actual;
      fn += !pred && actual;
      tn += !pred && !actual;
    }
    rep.f_score = (tp + fp == 0 || tp == 0)
                      ? 0.0
                      : 2.0 * tp / (2.0 * tp + static_cast<double>(fp + fn));
    rep.avg_tpr = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn)
                              : std::numeric_limits<double>::quiet_NaN();
    rep.avg_tnr = tn + fp > 0 ? static_cast<double>(tn) / (tn + fp)
                              : std::numeric_limits<double>::quiet_NaN();
  } else {
    rep.roc_auc = mean_or_nan(roc_sum, rep.roc_tags);
    rep.pr_auc = mean_or_nan(pr_sum, rep.pr_tags);
    rep.f_score = static_cast<double>(t) > 0 ? f_sum / static_cast<double>(t) : 0.0;
    rep.avg_tpr = mean_or_nan(tpr_sum, rep.tpr_tags);
    rep.avg_tnr = mean_or_nan(tnr_sum, rep.tnr_tags);
  }
  return rep;
}

MetricsReport compute_report(const MatrixXd& scores, const MatrixXf& labels,
                             const std::vector<std::string>& tag_names,
                             double threshold, bool micro) {
  return compute_report(scores, labels, tag_names,
                        VectorXd::Constant(scores.cols(), threshold), micro);
}

VectorXd tune_thresholds(const MatrixXd& scores, const MatrixXf& labels) {
  VectorXd out(scores.cols());
  for (Index j = 0; j < scores.cols(); ++j) {
    const VectorXd s = scores.col(j);
    VectorXi y(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i) y[i] = labels(i, j) > 0.5f ? 1 : 0;
    // Candidate thresholds: midpoints between consecutive distinct scores.
    std::vector<double> sorted(s.data(), s.data() + s.size());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    double best_thr = 0.5, best_f = f_score_tag(s, y, 0.5);
    for (size_t k = 0; k + 1 < sorted.size(); ++k) {
      const double thr = (sorted[k] + sorted[k + 1]) / 2.0;
      const double f = f_score_tag(s, y, thr);
      if (f > best_f) {
        best_f = f;
        best_thr = thr;
      }
    }
    out[j] = best_thr;
  }
  return out;
}

double macro_roc_auc(const MatrixXd& scores, const MatrixXf& labels) {
  double sum = 0;
  int count = 0;
  for (Index j = 0; j < scores.cols(); ++j) {
    const VectorXd s = scores.col(j);
    VectorXi y(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i) y[i] = labels(i, j) > 0.5f ? 1 : 0;
    if (auto a = roc_auc(s, y)) {
      sum += *a;
      ++count;
    }
  }
  return mean_or_nan(sum, count);
}

namespace {
nlohmann::json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}
}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["averaging"] = averaging;
  j["roc_auc"] = std::isnan(roc_auc) ? nlohmann::json(nullptr) : nlohmann::json(roc_auc);
  j["pr_auc"] = std::isnan(pr_auc) ? nlohmann::json(nullptr) : nlohmann::json(pr_auc);
  j["f_score"] = f_score;
  j["avg_tpr"] = std::isnan(avg_tpr) ? nlohmann::json(nullptr) : nlohmann::json(avg_tpr);
  j["avg_tnr"] = std::isnan(avg_tnr) ? nlohmann::json(nullptr) : nlohmann::json(avg_tnr);
  j["included_tags"] = {{"roc_auc", roc_tags},
                        {"pr_auc", pr_tags},
                        {"tpr", tpr_tags},
                        {"tnr", tnr_tags}};
  j["per_tag"] = nlohmann::json::array();
  for (const auto& t : per_tag) {
    j["per_tag"].push_back({{"tag", t.tag},
                            {"roc_auc", opt_json(t.roc_auc)},
                            {"pr_auc", opt_json(t.pr_auc)},
                            {"f_score", t.f_score},
                            {"tpr", opt_json(t.tpr)},
                            {"tnr", opt_json(t.tnr)},
                            {"threshold", t.threshold}});
  }
  return j.dump(2);
}

std::string MetricsReport::per_tag_csv() const {
  std::ostringstream os;
  os << "tag,roc_auc,pr_auc,f_score,tpr,tnr,threshold\n";
  auto cell = [&](const std::optional<double>& v) {
    if (v)
      os << *v;
    else
      os << "";
  };
  for (const auto& t : per_tag) {
    os << t.tag << ',';
    cell(t.roc_auc);
    os << ',';
    cell(t.pr_auc);
    os << ',' << t.f_score << ',';
    cell(t.tpr);
    os << ',';
    cell(t.tnr);
    os << ',' << t.threshold << "\n";
  }
  return os.str();
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<std::string>& track_ids,
                       const MatrixXd& logits) {
  if (static_cast<Index>(track_ids.size()) != logits.rows())
    fail("shape", "track id count != logit rows");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("io", "cannot write predictions ", path.string());
  out.precision(17);
  for (Index i = 0; i < logits.rows(); ++i) {
    out << track_ids[static_cast<size_t>(i)];
    for (Index j = 0; j < logits.cols(); ++j) out << '\t' << logits(i, j);
    out << "\n";
  }
}

std::pair<std::vector<std::string>, MatrixXd> read_predictions(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open predictions ", path.string(),
                "; run 'predict' first");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string id;
    if (!std::getline(is, id, '\t'))
      fail("parse", path.string(), ":", line_no, ": missing track_id");
    std::vector<double> vals;
    std::string field;
    while (std::getline(is, field, '\t')) {
      try {
        vals.push_back(std::stod(field));
      } catch (const std::exception&) {
        fail("parse", path.string(), ":", line_no, ": bad logit '", field, "'");
      }
    }
    if (!rows.empty() && vals.size() != rows.front().size())
      fail("parse", path.string(), ":", line_no, ": inconsistent column count");
    ids.push_back(id);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) fail("parse", path.string(), ": empty predictions file");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return {std::move(ids), std::move(m)};
}

}  // namespace emotag
