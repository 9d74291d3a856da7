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

#include <chrono>
#include <functional>
#include <limits>
#include <map>

#include "emotag/adam.hpp"
#include "emotag/augment.hpp"
#include "emotag/checkpoint.hpp"
#include "emotag/chunking.hpp"
#include "emotag/manifest.hpp"
#include "emotag/metrics.hpp"
#include "emotag/model.hpp"

namespace emotag {

struct TrainConfig {
  TrainMode mode = TrainMode::short_mode;
  int max_epochs = 100;
  double lr = 1e-4;        // Adam, beta = (0.9, 0.999), eps = 1e-8
  int patience = 5;        // epochs without val ROC-AUC improvement
  int batch_size = 4;
  int chunks_per_track = 1;  // short-mode visits per track per epoch
  NoisePolicy noise;
  uint64_t seed = 0;

  void validate() const {
    if (patience < 1) fail("config", "patience must be >= 1");
    if (lr <= 0.0) fail("config", "learning rate must be > 0");
    if (max_epochs < 1) fail("config", "max_epochs must be >= 1");
    if (batch_size < 1) fail("config", "batch_size must be >= 1");
    if (chunks_per_track < 1) fail("config", "chunks_per_track must be >= 1");
    noise.validate();
  }
};

/// Stops when the metric has not strictly improved for `patience` epochs;
/// the best epoch's weights are the ones kept.
struct EarlyStopper {
  explicit EarlyStopper(int patience) : patience(patience) {}

  bool observe(int epoch, double metric) {
    if (metric > best_metric) {
      best_metric = metric;
      best_epoch = epoch;
      epochs_since_improve = 0;
      return true;
    }
    ++epochs_since_improve;
    return false;
  }
  bool should_stop() const { return epochs_since_improve >= patience; }

  int patience;
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_improve = 0;
};

/// One training unit: a track plus its label row and a per-tag loss mask
/// (all-ones for labeled data; pseudo-labeled tracks mask out abstentions).
struct TrainExample {
  std::string track_id;
  RowVectorX<float> labels;
  RowVectorX<float> mask;
};

std::vector<TrainExample> examples_for_split(const TrackManifest& manifest,
                                             Split split);

/// Memoizing loader over the feature cache.
class FeatureStore {
 public:
  FeatureStore(std::filesystem::path cache_dir, bool want_hpcp)
      : dir_(std::move(cache_dir)), want_hpcp_(want_hpcp) {}

  const FeatureMatrix& mel(const std::string& track_id);
  const FeatureMatrix* hpcp(const std::string& track_id);
  bool want_hpcp() const { return want_hpcp_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  bool want_hpcp_;
  std::map<std::string, FeatureMatrix> mel_, hpcp_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_roc_auc = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_auc = 0.0;
};

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochLog>& log);

/// Mean of per-chunk logits; the one inference path both modes share.
inline VectorXd average_chunk_logits(
    Index n_chunks, const std::function<VectorXd(Index)>& chunk_logits) {
  if (n_chunks < 1) fail("shape", "no chunks to average");
  VectorXd acc = chunk_logits(0);
  for (Index k = 1; k < n_chunks; ++k) acc += chunk_logits(k);
  return acc / static_cast<double>(n_chunks);
}

namespace detail {

inline ExampleView training_view(FeatureStore& store, const std::string& track_id,
                                 TrainMode mode, Rng& chunk_rng) {
  const FeatureMatrix& mel = store.mel(track_id);
  const FeatureMatrix* hp = store.hpcp(track_id);
  if (mode == TrainMode::long_mode) return long_view(mel, hp);
  return chunk_view(mel, hp, random_chunk_index(mel.frames(), chunk_rng));
}

template <typename S>
std::vector<MatrixX<S>> cast_batch(std::vector<MatrixXf>&& in) {
  std::vector<MatrixX<S>> out(in.size());
  for (size_t i = 0; i < in.size(); ++i) out[i] = in[i].template cast<S>();
  return out;
}

}  // namespace detail

/// Track-level logits: long mode scores the leading long window; short mode
/// averages the logits of every consecutive chunk (final partial chunk
/// padded). Eval path, no augmentation.
template <typename S>
VectorXd predict_track(TaggerModel<S>& model, FeatureStore& store,
                       const std::string& track_id, TrainMode mode) {
  const FeatureMatrix& mel = store.mel(track_id);
  const FeatureMatrix* hp = store.hpcp(track_id);

  auto forward_view = [&](const ExampleView& v) {
    std::vector<MatrixX<S>> mels{v.mel.cast<S>()};
    std::vector<MatrixX<S>> hps;
    std::vector<Index> mv{v.mel_valid}, hv;
    if (hp) {
      hps.push_back(v.hpcp.cast<S>());
      hv.push_back(v.hpcp_valid);
    }
    const MatrixX<S> logits = model.forward(mels, hps, mv, hv, nn::eval_opts());
    return logits.col(0).template cast<double>().eval();
  };

  if (mode == TrainMode::long_mode) return forward_view(long_view(mel, hp));
  return average_chunk_logits(num_chunks(mel.frames()), [&](Index k) {
    return forward_view(chunk_view(mel, hp, k));
  });
}

/// Logit matrix [N x T] for a list of tracks.
template <typename S>
MatrixXd predict_tracks(TaggerModel<S>& model, FeatureStore& store,
                        const std::vector<std::string>& track_ids, TrainMode mode) {
  if (track_ids.empty()) fail("empty-split", "no tracks to predict");
  MatrixXd out(static_cast<Index>(track_ids.size()), model.config().num_tags);
  for (size_t i = 0; i < track_ids.size(); ++i)
    out.row(static_cast<Index>(i)) =
        predict_track(model, store, track_ids[i], mode).transpose();
  return out;
}

namespace detail {

template <typename S>
std::vector<MatrixX<S>> snapshot_state(TaggerModel<S>& model) {
  std::vector<MatrixX<S>> out;
  for (auto& [name, mat] : model.state()) out.push_back(*mat);
  return out;
}

template <typename S>
void restore_state(TaggerModel<S>& model, const std::vector<MatrixX<S>>& snap) {
  auto state = model.state();
  for (size_t i = 0; i < state.size(); ++i) *state[i].second = snap[i];
}

}  // namespace detail

/// Supervised loop with early stopping on validation macro ROC-AUC. Runs at
/// most max_epochs; returns with the best epoch's weights restored in the
/// model. When `run_dir` is given, writes best.ckpt, last.ckpt and
/// train_log.jsonl there.
template <typename S>
TrainResult train_model(TaggerModel<S>& model,
                        const std::vector<TrainExample>& train_examples,
                        const std::vector<TrainExample>& valid_examples,
                        FeatureStore& store, const TrainConfig& cfg,
                        const std::filesystem::path* run_dir = nullptr) {
  cfg.validate();
  if (train_examples.empty()) fail("empty-split", "train split is empty");
  if (valid_examples.empty()) fail("empty-split", "valid split is empty");
  const int num_tags = model.config().num_tags;
  for (const auto& e : train_examples)
    if (e.labels.size() != num_tags || e.mask.size() != num_tags)
      fail("shape", "label row size mismatch for '", e.track_id, "'");

  model.reseed_noise(derive_seed(cfg.seed, 0x64726f70ULL));
  Adam<S> opt(cfg.lr);
  EarlyStopper stopper(cfg.patience);
  TrainResult result;

  MatrixXf valid_labels(static_cast<Index>(valid_examples.size()), num_tags);
  std::vector<std::string> valid_ids;
  for (size_t i = 0; i < valid_examples.size(); ++i) {
    valid_labels.row(static_cast<Index>(i)) = valid_examples[i].labels;
    valid_ids.push_back(valid_examples[i].track_id);
  }

  std::vector<MatrixX<S>> best_state = detail::snapshot_state(model);
  int64_t batch_counter = 0;
  int last_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    // Epoch order: every track `chunks_per_track` times, shuffled.
    std::vector<size_t> order;
    const int visits = cfg.mode == TrainMode::short_mode ? cfg.chunks_per_track : 1;
    for (int v = 0; v < visits; ++v)
      for (size_t i = 0; i < train_examples.size(); ++i) order.push_back(i);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566ULL + static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    Rng chunk_rng(derive_seed(cfg.seed, 0x6368756eULL + static_cast<uint64_t>(epoch)));

    double loss_sum = 0.0;
    int64_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      const auto b = static_cast<Index>(end - start);

      std::vector<MatrixXf> mel_f, hpcp_f;
      std::vector<Index> mel_valid, hpcp_valid;
      MatrixX<S> targets(num_tags, b), mask(num_tags, b);
      for (size_t i = start; i < end; ++i) {
        const auto& ex = train_examples[order[i]];
        ExampleView v = detail::training_view(store, ex.track_id, cfg.mode, chunk_rng);
        mel_f.push_back(std::move(v.mel));
        mel_valid.push_back(v.mel_valid);
        if (store.want_hpcp()) {
          hpcp_f.push_back(std::move(v.hpcp));
          hpcp_valid.push_back(v.hpcp_valid);
        }
        targets.col(static_cast<Index>(i - start)) =
            ex.labels.transpose().template cast<S>();
        mask.col(static_cast<Index>(i - start)) =
            ex.mask.transpose().template cast<S>();
      }
      augment_batch(mel_f, cfg.noise, batch_counter, 0);
      if (!hpcp_f.empty())
        augment_batch(hpcp_f, cfg.noise, batch_counter,
                      static_cast<int64_t>(mel_f.size()));

      auto mel_b = detail::cast_batch<S>(std::move(mel_f));
      auto hpcp_b = detail::cast_batch<S>(std::move(hpcp_f));

      model.zero_grads();
      const MatrixX<S> logits =
          model.forward(mel_b, hpcp_b, mel_valid, hpcp_valid,
                        nn::train_opts(nullptr));
      MatrixX<S> dlogits;
      const S loss = nn::masked_bce<S>(logits, targets, mask, &dlogits);
      if (!std::isfinite(static_cast<double>(loss)))
        fail("train", "non-finite loss at epoch ", epoch, ", batch ", n_batches,
             ", lr ", cfg.lr);
      model.backward(dlogits);
      auto params = model.params();
      opt.step(params);

      loss_sum += static_cast<double>(loss);
      ++n_batches;
      ++batch_counter;
    }

    const double val_auc = [&] {
      const MatrixXd scores = predict_tracks(model, store, valid_ids, cfg.mode);
      return macro_roc_auc(scores, valid_labels);
    }();

    if (stopper.observe(epoch, val_auc)) best_state = detail::snapshot_state(model);

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(std::max<int64_t>(1, n_batches));
    entry.val_roc_auc = val_auc;
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    last_epoch = epoch;

    if (stopper.should_stop()) break;
  }

  result.best_epoch = stopper.best_epoch;
  result.best_val_auc = stopper.best_metric;

  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    CheckpointMeta last_meta{model.config(), cfg.mode, last_epoch,
                             stopper.best_metric};
    save_checkpoint(model, last_meta, *run_dir / "last.ckpt");
  }
  detail::restore_state(model, best_state);
  if (run_dir) {
    CheckpointMeta best_meta{model.config(), cfg.mode, stopper.best_epoch,
                             stopper.best_metric};
    save_checkpoint(model, best_meta, *run_dir / "best.ckpt");
    write_train_log(*run_dir / "train_log.jsonl", result.log);
  }
  return result;
}

}  // namespace emotag
