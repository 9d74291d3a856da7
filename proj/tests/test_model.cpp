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

#include "emotag/model.hpp"

using namespace emotag;

namespace {

ModelConfig tiny_config(BranchMode branch, NetMode mode) {
  ModelConfig cfg;
  cfg.num_tags = 2;
  cfg.branch = branch;
  cfg.mode = mode;
  cfg.mel_channels = {3, 4};
  cfg.hpcp_channels = {3};
  cfg.rnn_hidden = 5;
  cfg.fusion_hidden = 7;
  cfg.stochastic_blocks = 3;
  cfg.init_seed = 42;
  return cfg;
}

template <typename S>
struct TinyInputs {
  std::vector<MatrixX<S>> mel, hpcp;
  std::vector<Index> mel_valid, hpcp_valid;
};

template <typename S>
TinyInputs<S> tiny_inputs(int batch, Index frames, uint64_t seed) {
  TinyInputs<S> in;
  Rng rng(seed);
  for (int s = 0; s < batch; ++s) {
    MatrixX<S> mel(kMelBins, frames), hp(kHpcpBins, frames);
    for (Index c = 0; c < frames; ++c) {
      for (Index r = 0; r < kMelBins; ++r) mel(r, c) = static_cast<S>(rng.normal());
      for (Index r = 0; r < kHpcpBins; ++r) hp(r, c) = static_cast<S>(rng.normal());
    }
    in.mel.push_back(std::move(mel));
    in.hpcp.push_back(std::move(hp));
    in.mel_valid.push_back(frames);
    in.hpcp_valid.push_back(frames);
  }
  return in;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("gem_pool reference values") {
  VectorX<double> x(3);
  x << 1, 2, 3;
  CHECK(nn::gem_pool(x, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(nn::gem_pool(x, 100.0) - 3.0) < 0.05);  // p -> inf is max
  VectorX<double> c = VectorX<double>::Constant(5, 4.0);
  for (double p : {1.0, 2.0, 3.0, 10.0})
    CHECK(nn::gem_pool(c, p) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gem limits: p=1 is the mean, p=100 approaches the max") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorX<double> w(4);
    for (int i = 0; i < 4; ++i) w[i] = rng.uniform();
    CHECK(std::abs(nn::gem_pool(w, 1.0) - w.mean()) < 1e-9);
    const double g = nn::gem_pool(w, 100.0);
    const double mx = w.maxCoeff();
    CHECK(std::abs(g - mx) <= 0.02 * mx);
  }
}

TEST_CASE("gem dp gradient matches finite differences within 1e-4") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    nn::Tensor<double> t;
    MatrixX<double> win(2, 2);
    for (Index c = 0; c < 2; ++c)
      for (Index r = 0; r < 2; ++r) win(r, c) = rng.uniform() + 0.05;
    t.ch = {win};

    const double p0 = 1.5 + 2.0 * rng.uniform();
    nn::GeMPool2d<double> pool(p0);
    nn::FwdOpts rec{false, false, true, nullptr};
    auto y = pool.forward({t}, rec);
    nn::Batch<double> dy(1);
    dy[0].ch = {MatrixX<double>::Ones(1, 1)};
    pool.backward(dy);
    std::vector<nn::ParamRef<double>> params;
    pool.collect_params("gem", params);
    const double analytic = (*params[0].grad)(0, 0);

    const double h = 1e-6;
    nn::GeMPool2d<double> plus(p0 + h), minus(p0 - h);
    const double fp = plus.forward({t}, nn::eval_opts())[0].ch[0](0, 0);
    const double fm = minus.forward({t}, nn::eval_opts())[0].ch[0](0, 0);
    CHECK(std::abs(analytic - (fp - fm) / (2 * h)) < 1e-4);
  }
}

TEST_CASE("forward shape contract") {
  ModelConfig cfg = tiny_config(BranchMode::hpcp_fusion, NetMode::teacher);
  cfg.num_tags = 5;
  TaggerModel<float> model(cfg);
  Rng rng(1);
  std::vector<MatrixXf> mel(2), hp(2);
  for (int s = 0; s < 2; ++s) {
    mel[s] = MatrixXf::Zero(128, 80);
    hp[s] = MatrixXf::Zero(12, 200);
    for (Index c = 0; c < 80; ++c) mel[s](c % 128, c) = static_cast<float>(rng.normal());
  }
  const MatrixXf logits = model.predict(mel, hp);
  CHECK(logits.rows() == 5);  // tags
  CHECK(logits.cols() == 2);  // batch
  CHECK(logits.allFinite());
}

TEST_CASE("normal branch ignores hpcp input entirely") {
  TaggerModel<float> model(tiny_config(BranchMode::normal, NetMode::teacher));
  auto in = tiny_inputs<float>(2, 16, 5);
  const MatrixXf a = model.forward(in.mel, {}, in.mel_valid, {}, nn::eval_opts());
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 2);
}

TEST_CASE("eval forward is deterministic") {
  TaggerModel<float> model(tiny_config(BranchMode::hpcp_fusion, NetMode::student));
  auto in = tiny_inputs<float>(2, 16, 9);
  const MatrixXf a = model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid,
                                   nn::eval_opts());
  const MatrixXf b = model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid,
                                   nn::eval_opts());
  CHECK(a == b);
}

TEST_CASE("eval forward is invariant to noisy forwards in between") {
  TaggerModel<float> model(tiny_config(BranchMode::hpcp_fusion, NetMode::student));
  auto in = tiny_inputs<float>(2, 16, 11);
  const MatrixXf before = model.forward(in.mel, in.hpcp, in.mel_valid,
                                        in.hpcp_valid, nn::eval_opts());
  // Stochastic-depth and dropout draws must leave no persistent state.
  for (int i = 0; i < 20; ++i) {
    nn::FwdOpts noisy{false, true, false, nullptr};
    model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid, noisy);
  }
  const MatrixXf after = model.forward(in.mel, in.hpcp, in.mel_valid,
                                       in.hpcp_valid, nn::eval_opts());
  CHECK(before == after);
}

TEST_CASE("permuting the batch permutes eval logits identically") {
  TaggerModel<float> model(tiny_config(BranchMode::hpcp_fusion, NetMode::teacher));
  auto in = tiny_inputs<float>(3, 16, 13);
  const MatrixXf logits = model.forward(in.mel, in.hpcp, in.mel_valid,
                                        in.hpcp_valid, nn::eval_opts());
  std::vector<MatrixXf> mel{in.mel[2], in.mel[0], in.mel[1]};
  std::vector<MatrixXf> hp{in.hpcp[2], in.hpcp[0], in.hpcp[1]};
  std::vector<Index> mv{16, 16, 16}, hv{16, 16, 16};
  const MatrixXf permuted = model.forward(mel, hp, mv, hv, nn::eval_opts());
  CHECK(permuted.col(0) == logits.col(2));
  CHECK(permuted.col(1) == logits.col(0));
  CHECK(permuted.col(2) == logits.col(1));
}

TEST_CASE("student parameter count >= teacher parameter count") {
  TaggerModel<float> teacher(tiny_config(BranchMode::hpcp_fusion, NetMode::teacher));
  TaggerModel<float> student(tiny_config(BranchMode::hpcp_fusion, NetMode::student));
  CHECK(student.count_parameters() >= teacher.count_parameters());
}

TEST_CASE("parameter count arithmetic") {
  Rng rng(1);
  nn::Linear<float> lin(512, 256, rng);
  std::vector<nn::ParamRef<float>> params;
  lin.collect_params("lin", params);
  CHECK(nn::count_parameters(params) == 512 * 256 + 256);

  const std::vector<nn::ParamRef<float>> empty;
  CHECK(nn::count_parameters(empty) == 0);
}

TEST_CASE("stochastic blocks bypass ~10% of training forwards") {
  ModelConfig cfg = tiny_config(BranchMode::normal, NetMode::student);
  cfg.mel_channels = {2, 2, 2};  // three blocks, all stochastic
  TaggerModel<float> model(cfg);
  auto in = tiny_inputs<float>(1, 8, 21);
  model.reseed_noise(777);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    nn::FwdOpts noisy{false, true, false, nullptr};
    model.forward(in.mel, {}, in.mel_valid, {}, noisy);
  }
  const auto counts = model.stochastic_bypass_counts();
  const auto totals = model.stochastic_forward_counts();
  REQUIRE(counts.size() == 3);
  for (size_t b = 0; b < counts.size(); ++b) {
    CHECK(totals[b] == n);
    const double rate = static_cast<double>(counts[b]) / n;
    CHECK(rate > 0.09);
    CHECK(rate < 0.11);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  TaggerModel<double> model(tiny_config(BranchMode::hpcp_fusion, NetMode::student));
  auto in = tiny_inputs<double>(2, 8, 7);  // 8-frame input

  MatrixX<double> targets(2, 2);
  targets << 1, 0, 0, 1;
  const MatrixX<double> mask = MatrixX<double>::Ones(2, 2);

  // Eval-mode graph (running batchnorm stats, stochastic blocks forced on).
  nn::FwdOpts record{false, false, true, nullptr};
  auto loss_at = [&] {
    const auto logits =
        model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid, record);
    return nn::masked_bce<double>(logits, targets, mask, nullptr);
  };

  model.zero_grads();
  const auto logits =
      model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid, record);
  MatrixX<double> dlogits;
  nn::masked_bce<double>(logits, targets, mask, &dlogits);
  model.backward(dlogits);

  auto params = model.params();
  Rng pick(123);
  int checked = 0;
  while (checked < 220) {
    auto& p = params[static_cast<size_t>(
        pick.uniform_int(0, static_cast<int64_t>(params.size()) - 1))];
    const Index i = pick.uniform_int(0, p.value->rows() - 1);
    const Index j = pick.uniform_int(0, p.value->cols() - 1);
    const double orig = (*p.value)(i, j);
    const double h = 1e-6 * std::max(1.0, std::abs(orig));
    (*p.value)(i, j) = orig + h;
    const double lp = loss_at();
    (*p.value)(i, j) = orig - h;
    const double lm = loss_at();
    (*p.value)(i, j) = orig;
    const double fd = (lp - lm) / (2 * h);
    const double an = (*p.grad)(i, j);
    const bool ok = std::abs(fd - an) <= 1e-3 * std::max(std::abs(fd), std::abs(an)) ||
                    std::abs(fd - an) <= 1e-7;
    CHECK_MESSAGE(ok, p.name, "(", i, ",", j, "): analytic ", an, " vs fd ", fd);
    ++checked;
  }
}

TEST_CASE("gradients also match under batch-statistics batchnorm") {
  TaggerModel<double> model(tiny_config(BranchMode::hpcp_fusion, NetMode::teacher));
  auto in = tiny_inputs<double>(3, 8, 31);
  MatrixX<double> targets = MatrixX<double>::Zero(2, 3);
  targets(0, 0) = 1;
  targets(1, 2) = 1;
  const MatrixX<double> mask = MatrixX<double>::Ones(2, 3);

  nn::FwdOpts record{true, false, true, nullptr};
  auto loss_at = [&] {
    const auto logits =
        model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid, record);
    return nn::masked_bce<double>(logits, targets, mask, nullptr);
  };
  model.zero_grads();
  const auto logits =
      model.forward(in.mel, in.hpcp, in.mel_valid, in.hpcp_valid, record);
  MatrixX<double> dlogits;
  nn::masked_bce<double>(logits, targets, mask, &dlogits);
  model.backward(dlogits);

  auto params = model.params();
  Rng pick(5);
  for (int t = 0; t < 120; ++t) {
    auto& p = params[static_cast<size_t>(
        pick.uniform_int(0, static_cast<int64_t>(params.size()) - 1))];
    const Index i = pick.uniform_int(0, p.value->rows() - 1);
    const Index j = pick.uniform_int(0, p.value->cols() - 1);
    const double orig = (*p.value)(i, j);
    const double h = 1e-6 * std::max(1.0, std::abs(orig));
    (*p.value)(i, j) = orig + h;
    const double lp = loss_at();
    (*p.value)(i, j) = orig - h;
    const double lm = loss_at();
    (*p.value)(i, j) = orig;
    const double fd = (lp - lm) / (2 * h);
    const double an = (*p.grad)(i, j);
    const bool ok = std::abs(fd - an) <= 1e-3 * std::max(std::abs(fd), std::abs(an)) ||
                    std::abs(fd - an) <= 1e-7;
    CHECK_MESSAGE(ok, p.name, ": analytic ", an, " vs fd ", fd);
  }
}

TEST_CASE("feature too short for the conv stack raises a shape error") {
  TaggerModel<float> model(tiny_config(BranchMode::hpcp_fusion, NetMode::teacher));
  std::vector<MatrixXf> bad_mel{MatrixXf::Zero(64, 8)};  // wrong row count
  std::vector<MatrixXf> hp{MatrixXf::Zero(12, 8)};
  CHECK_THROWS_AS(model.forward(bad_mel, hp, {8}, {8}, nn::eval_opts()), Error);
}

TEST_CASE("masked bce matches a hand-written plain bce bit for bit") {
  Rng rng(2);
  MatrixX<double> logits(3, 4), targets(3, 4);
  for (Index c = 0; c < 4; ++c)
    for (Index r = 0; r < 3; ++r) {
      logits(r, c) = rng.normal();
      targets(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
  const MatrixX<double> ones = MatrixX<double>::Ones(3, 4);
  const double masked = nn::masked_bce<double>(logits, targets, ones, nullptr);

  double total = 0, count = 0;
  for (Index c = 0; c < 4; ++c)
    for (Index r = 0; r < 3; ++r) {
      const double l = logits(r, c), y = targets(r, c);
      count += 1.0;
      total += 1.0 * (std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l))));
    }
  CHECK(masked == total / count);
}

}  // TEST_SUITE
