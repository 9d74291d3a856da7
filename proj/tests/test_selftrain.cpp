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

#include "emotag/selftrain.hpp"
#include "testsupport.hpp"

using namespace emotag;

namespace {

ModelConfig small_model_config(int num_tags, NetMode mode, uint64_t seed) {
  ModelConfig cfg;
  cfg.num_tags = num_tags;
  cfg.branch = BranchMode::hpcp_fusion;
  cfg.mode = mode;
  cfg.mel_channels = {4, 8, 12, 16};
  cfg.hpcp_channels = {4, 8, 12};
  cfg.rnn_hidden = 16;
  cfg.fusion_hidden = 32;
  cfg.init_seed = seed;
  return cfg;
}

TrainConfig small_train_config(int epochs, uint64_t seed, bool noisy) {
  TrainConfig cfg;
  cfg.mode = TrainMode::short_mode;
  cfg.max_epochs = epochs;
  cfg.lr = 3e-3;
  cfg.patience = 5;
  cfg.batch_size = 4;
  cfg.noise = noisy ? NoisePolicy::noisy_student(seed) : NoisePolicy::normal(seed);
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("selftrain") {

TEST_CASE("nearest-rank percentile oracle cases") {
  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i / 100.0);
  CHECK(nearest_rank_percentile(hundred, 95.0) == 0.95);
  CHECK(nearest_rank_percentile(hundred, 5.0) == 0.05);
  CHECK(nearest_rank_percentile({0.7, 0.7, 0.7}, 95.0) == 0.7);
  CHECK(nearest_rank_percentile({3.0}, 50.0) == 3.0);
}

TEST_CASE("calibration on the 100-point example gives 0.95 / 0.05") {
  // 100 positive cells scoring 0.01..1.00 and 100 negative cells likewise.
  MatrixXd scores(100, 2);
  MatrixXf labels(100, 2);
  for (int i = 0; i < 100; ++i) {
    scores(i, 0) = (i + 1) / 100.0;
    labels(i, 0) = 1.0f;
    scores(i, 1) = (i + 1) / 100.0;
    labels(i, 1) = 0.0f;
  }
  const auto [tau_pos, tau_neg] = calibrate_thresholds(scores, labels);
  CHECK(tau_pos == 0.95);
  CHECK(tau_neg == 0.05);
}

TEST_CASE("degenerate positive distribution calibrates to itself") {
  MatrixXd scores(3, 2);
  MatrixXf labels(3, 2);
  scores << 0.7, 0.1, 0.7, 0.2, 0.7, 0.3;
  labels << 1, 0, 1, 0, 1, 0;
  const auto [tau_pos, tau_neg] = calibrate_thresholds(scores, labels);
  CHECK(tau_pos == 0.7);
}

TEST_CASE("calibration with a class absent raises a calibration error") {
  MatrixXd scores = MatrixXd::Constant(4, 1, 0.5);
  CHECK_THROWS_AS(calibrate_thresholds(scores, MatrixXf::Ones(4, 1)), Error);
  CHECK_THROWS_AS(calibrate_thresholds(scores, MatrixXf::Zero(4, 1)), Error);
}

TEST_CASE("fixed thresholds map {0.5, 1e-7, 0.05} to {pos, neg, abstain}") {
  MatrixXd probs(1, 3);
  probs << 0.5, 1e-7, 0.05;
  const auto set = build_pseudo_labels(probs, {"t"}, kFixedTauPos, kFixedTauNeg);
  CHECK(set.at("t", 0) == PseudoLabel::positive);
  CHECK(set.at("t", 1) == PseudoLabel::negative);
  CHECK(set.at("t", 2) == PseudoLabel::abstain);
  CHECK(set.n_positive == 1);
  CHECK(set.n_negative == 1);
  CHECK(set.n_abstain == 1);
}

TEST_CASE("every cell lands in exactly one class and counts sum to NxT") {
  Rng rng(5);
  const int n = 17, t = 7;
  MatrixXd probs(n, t);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < t; ++j)
      probs(i, j) = std::pow(rng.uniform(), 4.0);  // skew towards small values
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("x" + std::to_string(i));
  const auto set = build_pseudo_labels(probs, ids, 0.3, 1e-3);
  CHECK(set.n_positive + set.n_negative + set.n_abstain == n * t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < t; ++j) {
      const PseudoLabel l = set.at(ids[static_cast<size_t>(i)], j);
      const double p = probs(i, j);
      if (p > 0.3) CHECK(l == PseudoLabel::positive);
      else if (p < 1e-3) CHECK(l == PseudoLabel::negative);
      else CHECK(l == PseudoLabel::abstain);
    }
}

TEST_CASE("raising tau_pos never increases positives; lowering tau_neg never increases negatives") {
  Rng rng(9);
  MatrixXd probs(40, 5);
  for (Index i = 0; i < probs.rows(); ++i)
    for (Index j = 0; j < probs.cols(); ++j) probs(i, j) = rng.uniform();
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("x" + std::to_string(i));

  int64_t prev_pos = std::numeric_limits<int64_t>::max();
  for (double tau_pos : {0.2, 0.4, 0.6, 0.8}) {
    const auto set = build_pseudo_labels(probs, ids, tau_pos, 1e-4);
    CHECK(set.n_positive <= prev_pos);
    prev_pos = set.n_positive;
  }
  int64_t prev_neg = std::numeric_limits<int64_t>::max();
  for (double tau_neg : {0.4, 0.3, 0.2, 0.1}) {
    const auto set = build_pseudo_labels(probs, ids, 0.9, tau_neg);
    CHECK(set.n_negative <= prev_neg);
    prev_neg = set.n_negative;
  }
}

TEST_CASE("tau_neg >= tau_pos is rejected") {
  MatrixXd probs = MatrixXd::Constant(1, 1, 0.5);
  CHECK_THROWS_AS(build_pseudo_labels(probs, {"t"}, 0.1, 0.1), Error);
}

TEST_CASE("pseudo-label file round-trip") {
  test::TempDir dir;
  MatrixXd probs(2, 3);
  probs << 0.9, 1e-8, 0.05, 0.02, 0.99, 1e-9;
  auto set = build_pseudo_labels(probs, {"a", "b"}, 0.1, 1e-6);
  set.teacher_run_id = "short-hpcp";
  const auto path = dir.path() / "pseudo_labels.tsv";
  set.save(path);
  const auto back = PseudoLabelSet::load(path);
  CHECK(back.entries == set.entries);
  CHECK(back.tau_pos == set.tau_pos);
  CHECK(back.tau_neg == set.tau_neg);
  CHECK(back.teacher_run_id == "short-hpcp");
  CHECK(back.n_abstain == set.n_abstain);
}

TEST_CASE("mask semantics: gradient flows only through non-abstain tags") {
  PseudoLabelSet set;
  set.entries[{"p", 0}] = true;  // tag 0 positive, tag 1 abstain
  const auto ex = pseudo_examples(set, 2);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].mask[0] == 1.0f);
  CHECK(ex[0].mask[1] == 0.0f);

  MatrixX<float> logits(2, 1), targets(2, 1), mask(2, 1);
  logits << 0.3f, -0.7f;
  targets << ex[0].labels[0], ex[0].labels[1];
  mask << ex[0].mask[0], ex[0].mask[1];
  MatrixX<float> dlogits;
  nn::masked_bce<float>(logits, targets, mask, &dlogits);
  CHECK(dlogits(0, 0) != 0.0f);
  CHECK(dlogits(1, 0) == 0.0f);
}

TEST_CASE("teacher_predict yields sigmoid probabilities with the right shape") {
  test::TempDir dir;
  const auto corpus = test::make_feature_corpus(dir.path(), 3, 1, 0, 0, 5, 160, 61);
  FeatureStore store(dir.path(), true);
  TaggerModel<float> teacher(small_model_config(5, NetMode::teacher, 3));
  const MatrixXd probs = teacher_predict(teacher, store, {"trk0", "trk1", "trk2"},
                                         TrainMode::short_mode);
  CHECK(probs.rows() == 3);
  CHECK(probs.cols() == 5);
  CHECK((probs.array() > 0.0).all());
  CHECK((probs.array() < 1.0).all());

  // Sigmoid arithmetic: logit 0 -> 0.5, logit -20 -> below the negative
  // threshold.
  CHECK(1.0 / (1.0 + std::exp(-0.0)) == 0.5);
  CHECK(1.0 / (1.0 + std::exp(20.0)) < 1e-6);
}

TEST_CASE("all-abstain pseudo set reproduces the supervised run bit for bit") {
  test::TempDir dir;
  const auto corpus = test::make_feature_corpus(dir.path(), 8, 2, 0, 4, 2, 160, 71);
  FeatureStore store(dir.path(), true);
  auto train_ex = examples_for_split(corpus.manifest, Split::train);
  auto valid_ex = examples_for_split(corpus.manifest, Split::valid);
  const TrainConfig cfg = small_train_config(3, 23, true);

  PseudoLabelSet empty_set;  // nothing but abstentions

  TaggerModel<float> student_a(small_model_config(2, NetMode::student, 23));
  const TrainResult a =
      train_student(student_a, train_ex, valid_ex, empty_set, store, cfg);

  TaggerModel<float> student_b(small_model_config(2, NetMode::student, 23));
  const TrainResult b = train_model(student_b, train_ex, valid_ex, store, cfg);

  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_roc_auc == b.log[i].val_roc_auc);
  }
  const VectorXd pa = predict_track(student_a, store, "trk0", cfg.mode);
  const VectorXd pb = predict_track(student_b, store, "trk0", cfg.mode);
  CHECK(pa == pb);
}

TEST_CASE("student smoke run lands near the teacher") {
  test::TempDir dir;
  const auto corpus = test::make_feature_corpus(dir.path(), 16, 4, 0, 8, 4, 160, 81);
  FeatureStore store(dir.path(), true);
  auto train_ex = examples_for_split(corpus.manifest, Split::train);
  auto valid_ex = examples_for_split(corpus.manifest, Split::valid);

  TaggerModel<float> teacher(small_model_config(4, NetMode::teacher, 31));
  const TrainConfig teacher_cfg = small_train_config(12, 31, false);
  const TrainResult teacher_result =
      train_model(teacher, train_ex, valid_ex, store, teacher_cfg);

  std::vector<std::string> unlabeled_ids;
  for (const auto* r : corpus.manifest.split_records(Split::unlabeled))
    unlabeled_ids.push_back(r->track_id);
  const MatrixXd probs =
      teacher_predict(teacher, store, unlabeled_ids, TrainMode::short_mode);
  const auto pseudo =
      build_pseudo_labels(probs, unlabeled_ids, kFixedTauPos, kFixedTauNeg);

  TaggerModel<float> student(small_model_config(4, NetMode::student, 32));
  CHECK(student.count_parameters() >= teacher.count_parameters());
  const TrainConfig student_cfg = small_train_config(12, 32, true);
  const TrainResult student_result = train_student(
      student, train_ex, valid_ex, pseudo, store, student_cfg);

  CHECK(std::isfinite(student_result.best_val_auc));
  CHECK(std::abs(student_result.best_val_auc - teacher_result.best_val_auc) <= 0.05);
}

}  // TEST_SUITE
