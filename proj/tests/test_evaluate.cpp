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

#include <doctest.h>

#include <cmath>
#include <set>

#include "emotag/ensemble.hpp"
#include "emotag/error.hpp"
#include "emotag/metrics.hpp"
#include "emotag/rng.hpp"
#include "testsupport.hpp"

using namespace emotag;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorXi ivec(std::initializer_list<int> v) {
  VectorXi out(static_cast<Index>(v.size()));
  Index i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

// Brute-force ROC-AUC: explicit pair counting with half credit for ties.
std::optional<double> roc_auc_oracle(const VectorXd& s, const VectorXi& y) {
  int64_t pos = 0, neg = 0;
  for (Index i = 0; i < y.size(); ++i) (y[i] != 0 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  double score = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0) continue;
    for (Index j = 0; j < y.size(); ++j) {
      if (y[j] != 0) continue;
      if (s[i] > s[j]) score += 1.0;
      else if (s[i] == s[j]) score += 0.5;
    }
  }
  return score / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Brute-force average precision: walk distinct thresholds from the top and
// re-count the confusion table from scratch at each one.
std::optional<double> pr_auc_oracle(const VectorXd& s, const VectorXi& y) {
  int64_t total_pos = 0;
  for (Index i = 0; i < y.size(); ++i) total_pos += y[i] != 0;
  if (total_pos == 0) return std::nullopt;
  std::set<double, std::greater<double>> thresholds(s.data(), s.data() + s.size());
  double ap = 0.0, recall_prev = 0.0;
  for (double t : thresholds) {
    int64_t tp = 0, n = 0;
    for (Index i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        ++n;
        tp += y[i] != 0;
      }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(n);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
  }
  return ap;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("roc_auc reference cases") {
  CHECK(*roc_auc(vec({0.9, 0.8, 0.3, 0.2}), ivec({1, 1, 0, 0})) == 1.0);
  CHECK(*roc_auc(vec({0.9, 0.8, 0.3, 0.2}), ivec({1, 0, 1, 0})) == 0.75);
  CHECK_FALSE(roc_auc(vec({0.9, 0.8}), ivec({1, 1})).has_value());
  CHECK_FALSE(roc_auc(vec({0.9, 0.8}), ivec({0, 0})).has_value());
  // All ties: every pair gets half credit.
  CHECK(*roc_auc(vec({0.5, 0.5, 0.5, 0.5}), ivec({1, 0, 1, 0})) == 0.5);
}

TEST_CASE("pr_auc reference cases") {
  CHECK(*pr_auc(vec({0.9, 0.8, 0.3, 0.2}), ivec({1, 1, 0, 0})) == 1.0);
  CHECK(*pr_auc(vec({0.9, 0.8, 0.3, 0.2}), ivec({1, 0, 1, 0})) ==
        doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-12));
  CHECK(*pr_auc(vec({0.9, 0.8, 0.3, 0.2}), ivec({0, 0, 0, 1})) == 0.25);
  CHECK_FALSE(pr_auc(vec({0.1, 0.2}), ivec({0, 0})).has_value());
}

TEST_CASE("f_score reference cases") {
  // Predictions identical to labels at threshold 0.5.
  CHECK(f_score_tag(vec({1.0, 0.0, 1.0, 0.0}), ivec({1, 0, 1, 0}), 0.5) == 1.0);
  // TP=1, FP=1, FN=1.
  CHECK(f_score_tag(vec({0.9, 0.1, 0.9}), ivec({1, 1, 0}), 0.5) == 0.5);
  // No predicted positives but actual positives exist.
  CHECK(f_score_tag(vec({0.1, 0.2}), ivec({1, 1}), 0.5) == 0.0);
}

TEST_CASE("tpr / tnr reference cases") {
  // Perfect classifier.
  CHECK(*tpr_tag(vec({0.9, 0.1}), ivec({1, 0}), 0.5) == 1.0);
  CHECK(*tnr_tag(vec({0.9, 0.1}), ivec({1, 0}), 0.5) == 1.0);
  // Always-positive classifier.
  CHECK(*tpr_tag(vec({0.9, 0.9}), ivec({1, 0}), 0.5) == 1.0);
  CHECK(*tnr_tag(vec({0.9, 0.9}), ivec({1, 0}), 0.5) == 0.0);
  // Undefined sides.
  CHECK_FALSE(tpr_tag(vec({0.9, 0.1}), ivec({0, 0}), 0.5).has_value());
  CHECK_FALSE(tnr_tag(vec({0.9, 0.1}), ivec({1, 1}), 0.5).has_value());
}

TEST_CASE("macro tpr/tnr averages per-tag rates") {
  // Tag 0: TPR 0.5 (one of two positives found), TNR 1.0 (two negatives).
  // Tag 1: TPR 1.0, TNR 0.8 (four of five negatives below threshold).
  MatrixXd scores(6, 2);
  MatrixXf labels(6, 2);
  scores.col(0) << 0.9, 0.1, 0.2, 0.3, 0.1, 0.2;
  labels.col(0) << 1, 1, 0, 0, 0, 0;
  scores.col(1) << 0.9, 0.2, 0.1, 0.2, 0.9, 0.1;
  labels.col(1) << 1, 0, 0, 0, 0, 0;
  const auto rep = compute_report(scores, labels, {"a", "b"}, 0.5);
  CHECK(rep.avg_tpr == doctest::Approx(0.75));
  CHECK(rep.avg_tnr == doctest::Approx(0.9));
  CHECK(rep.tpr_tags == 2);
  CHECK(rep.tnr_tags == 2);
}

TEST_CASE("roc and pr match exhaustive oracles exactly for N <= 8") {
  Rng rng(2024);
  for (int n = 2; n <= 8; ++n) {
    std::vector<VectorXd> score_sets;
    for (int v = 0; v < 100; ++v) {
      VectorXd s(n);
      for (int i = 0; i < n; ++i) s[i] = rng.uniform();
      if (v % 5 == 0) s[rng.uniform_int(0, n - 1)] = s[0];  // inject ties
      score_sets.push_back(s);
    }
    for (uint32_t bits = 0; bits < (1u << n); ++bits) {
      VectorXi y(n);
      for (int i = 0; i < n; ++i) y[i] = (bits >> i) & 1u;
      for (const auto& s : score_sets) {
        const auto fast_roc = roc_auc(s, y);
        const auto slow_roc = roc_auc_oracle(s, y);
        REQUIRE(fast_roc.has_value() == slow_roc.has_value());
        if (fast_roc) REQUIRE(*fast_roc == *slow_roc);
        const auto fast_pr = pr_auc(s, y);
        const auto slow_pr = pr_auc_oracle(s, y);
        REQUIRE(fast_pr.has_value() == slow_pr.has_value());
        if (fast_pr) REQUIRE(*fast_pr == *slow_pr);
      }
    }
  }
}

TEST_CASE("roc_auc is invariant under strictly monotone transforms") {
  Rng rng(7);
  VectorXd s(40);
  VectorXi y(40);
  for (int i = 0; i < 40; ++i) {
    s[i] = rng.normal();
    y[i] = rng.bernoulli(0.4) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  const double base = *roc_auc(s, y);
  const VectorXd affine = 2.0 * s.array() + 1.0;
  const VectorXd sig = (1.0 / (1.0 + (-s.array()).exp()));
  CHECK(*roc_auc(affine, y) == base);
  CHECK(*roc_auc(sig, y) == base);
}

TEST_CASE("f_score and tpr/tnr ignore score changes that do not cross the threshold") {
  const VectorXi y = ivec({1, 0, 1, 0, 0});
  const VectorXd s = vec({0.9, 0.6, 0.2, 0.1, 0.4});
  const VectorXd nudged = vec({0.8, 0.7, 0.35, 0.05, 0.45});
  CHECK(f_score_tag(s, y, 0.5) == f_score_tag(nudged, y, 0.5));
  CHECK(*tpr_tag(s, y, 0.5) == *tpr_tag(nudged, y, 0.5));
  CHECK(*tnr_tag(s, y, 0.5) == *tnr_tag(nudged, y, 0.5));
}

TEST_CASE("report: identity predictions score 1.0 everywhere") {
  MatrixXd scores(4, 2);
  MatrixXf labels(4, 2);
  labels << 1, 0, 0, 1, 1, 1, 0, 0;
  scores = labels.cast<double>();
  const auto rep = compute_report(scores, labels, {"a", "b"}, 0.5);
  CHECK(rep.roc_auc == 1.0);
  CHECK(rep.pr_auc == 1.0);
  CHECK(rep.f_score == 1.0);
  CHECK(rep.avg_tpr == 1.0);
  CHECK(rep.avg_tnr == 1.0);
}

TEST_CASE("report: random balanced scores sit at roc 0.5 +- 0.02") {
  Rng rng(99);
  const int n = 10000;
  MatrixXd scores(n, 1);
  MatrixXf labels(n, 1);
  for (int i = 0; i < n; ++i) {
    scores(i, 0) = rng.uniform();
    labels(i, 0) = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  }
  const auto rep = compute_report(scores, labels, {"t"}, 0.5);
  CHECK(std::abs(rep.roc_auc - 0.5) < 0.02);
}

TEST_CASE("single-tag report: macro equals the per-tag value") {
  const auto rep = compute_report(
      (MatrixXd(4, 1) << 0.9, 0.8, 0.3, 0.2).finished(),
      (MatrixXf(4, 1) << 1, 0, 1, 0).finished(), {"only"}, 0.5);
  REQUIRE(rep.per_tag.size() == 1);
  CHECK(rep.roc_auc == *rep.per_tag[0].roc_auc);
  CHECK(rep.pr_auc == *rep.per_tag[0].pr_auc);
  CHECK(rep.f_score == rep.per_tag[0].f_score);
}

TEST_CASE("macro aggregation drops undefined tags and reports the counts") {
  MatrixXd scores(3, 2);
  MatrixXf labels(3, 2);
  scores.col(0) << 0.9, 0.8, 0.1;
  labels.col(0) << 1, 0, 0;
  scores.col(1) << 0.5, 0.6, 0.7;
  labels.col(1) << 1, 1, 1;  // single-class: roc undefined, tnr undefined
  const auto rep = compute_report(scores, labels, {"a", "b"}, 0.5);
  CHECK(rep.roc_tags == 1);
  CHECK(rep.tnr_tags == 1);
  CHECK(rep.roc_auc == *rep.per_tag[0].roc_auc);  // only tag a contributes
}

TEST_CASE("micro averaging pools all cells") {
  MatrixXd scores(2, 2);
  MatrixXf labels(2, 2);
  scores << 0.9, 0.1, 0.2, 0.8;
  labels << 1, 0, 0, 1;
  const auto macro = compute_report(scores, labels, {"a", "b"}, 0.5, false);
  const auto micro = compute_report(scores, labels, {"a", "b"}, 0.5, true);
  CHECK(macro.averaging == "macro");
  CHECK(micro.averaging == "micro");
  CHECK(micro.roc_auc == 1.0);  // pooled ranking is still perfect
}

TEST_CASE("ensemble formula") {
  MatrixXd a = MatrixXd::Constant(1, 1, 1.0);
  MatrixXd b = MatrixXd::Constant(1, 1, 0.0);
  CHECK(ensemble_logits(a, b, 0.7)(0, 0) == 0.7 * 1.0 + (1.0 - 0.7) * 0.0);

  MatrixXd l_short(1, 2), l_long(1, 2);
  l_short << 0.2, -1.0;
  l_long << 1.0, 1.0;
  const MatrixXd combined = ensemble_logits(l_short, l_long, 0.7);
  CHECK(combined(0, 0) == 0.7 * 0.2 + (1.0 - 0.7) * 1.0);   // 0.44
  CHECK(combined(0, 1) == 0.7 * -1.0 + (1.0 - 0.7) * 1.0);  // -0.4
  CHECK(combined(0, 0) == doctest::Approx(0.44).epsilon(1e-12));
  CHECK(combined(0, 1) == doctest::Approx(-0.4).epsilon(1e-12));

  CHECK(ensemble_logits(l_short, l_long, 0.0) == l_long);  // endpoint
  CHECK(ensemble_logits(l_short, l_long, 1.0) == l_short);

  MatrixXd wrong(2, 2);
  CHECK_THROWS_AS(ensemble_logits(l_short, wrong, 0.5), Error);
  CHECK_THROWS_AS(ensemble_logits(l_short, l_long, 1.5), Error);
}

TEST_CASE("ensemble with alpha 0.5 is symmetric") {
  Rng rng(3);
  MatrixXd a(4, 3), b(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) {
      a(i, j) = rng.normal();
      b(i, j) = rng.normal();
    }
  CHECK(ensemble_logits(a, b, 0.5) == ensemble_logits(b, a, 0.5));
}

TEST_CASE("alpha sweep: dominance forces the endpoint") {
  // Short run ranks perfectly; the long run anti-ranks with magnitudes so
  // large that any non-trivial mixture stays anti-ranked.
  MatrixXd l_short(4, 1), l_long(4, 1);
  l_short << 4, 3, 2, 1;
  l_long << -400, -300, 300, 400;
  MatrixXf labels(4, 1);
  labels << 1, 1, 0, 0;
  const auto sweep =
      sweep_alpha(l_short, l_long, labels, alpha_grid(0.1), SweepObjective::pr_auc);
  CHECK(sweep.best_alpha == 1.0);

  const auto reversed =
      sweep_alpha(l_long, l_short, labels, alpha_grid(0.1), SweepObjective::pr_auc);
  CHECK(reversed.best_alpha == 0.0);
}

TEST_CASE("alpha sweep: identical logits give a constant curve and the tie rule") {
  MatrixXd l(4, 1);
  l << 4, 3, 2, 1;
  MatrixXf labels(4, 1);
  labels << 1, 0, 1, 0;
  const auto sweep = sweep_alpha(l, l, labels, alpha_grid(0.25));
  CHECK(sweep.best_alpha == 0.0);  // ties resolve to the smaller alpha
  for (const auto& [a, m] : sweep.curve) CHECK(m == sweep.curve.front().second);
}

TEST_CASE("alpha sweep: constructed mid-optimum picks 0.5") {
  // Each run gets one tag right with margin 2 and the other wrong with margin
  // 1, so only the mixture ranks both tags correctly:
  //   tag 0 correct iff 2a > 1-a (a > 1/3); tag 1 correct iff 2(1-a) > a.
  MatrixXd l_short(2, 2), l_long(2, 2);
  MatrixXf labels(2, 2);
  labels.col(0) << 1, 0;
  labels.col(1) << 1, 0;
  l_short.col(0) << 2, 0;
  l_short.col(1) << 0, 1;
  l_long.col(0) << 0, 1;
  l_long.col(1) << 2, 0;
  const auto sweep = sweep_alpha(l_short, l_long, labels,
                                 std::vector<double>{0.0, 0.5, 1.0},
                                 SweepObjective::pr_auc);
  CHECK(sweep.best_alpha == 0.5);
  CHECK(sweep.best_metric == 1.0);
}

TEST_CASE("tuned thresholds never lower the per-tag f-score") {
  Rng rng(12);
  MatrixXd scores(30, 3);
  MatrixXf labels(30, 3);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 3; ++j) {
      labels(i, j) = rng.bernoulli(0.3) ? 1.0f : 0.0f;
      scores(i, j) = 0.4 * rng.uniform() + 0.5 * labels(i, j);
    }
  const VectorXd tuned = tune_thresholds(scores, labels);
  for (Index j = 0; j < 3; ++j) {
    VectorXi y(30);
    for (Index i = 0; i < 30; ++i) y[i] = labels(i, j) > 0.5f ? 1 : 0;
    CHECK(f_score_tag(scores.col(j), y, tuned[j]) >=
          f_score_tag(scores.col(j), y, 0.5));
  }
}

TEST_CASE("prediction files round-trip") {
  test::TempDir dir;
  Rng rng(5);
  MatrixXd logits(3, 4);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) logits(i, j) = rng.normal();
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto path = dir.path() / "pred.tsv";
  write_predictions(path, ids, logits);
  const auto [back_ids, back] = read_predictions(path);
  CHECK(back_ids == ids);
  CHECK(back == logits);  // %.17g round-trips doubles exactly
}

}  // TEST_SUITE
