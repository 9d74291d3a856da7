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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emotag/nn.hpp"

namespace emotag {

enum class BranchMode { normal, hpcp_fusion };
enum class NetMode { teacher, student };

inline const char* to_string(BranchMode b) {
  return b == BranchMode::normal ? "normal" : "hpcp";
}
inline const char* to_string(NetMode m) {
  return m == NetMode::teacher ? "teacher" : "student";
}

BranchMode parse_branch_mode(const std::string& s);
NetMode parse_net_mode(const std::string& s);

struct ModelConfig {
  int num_tags = 0;
  BranchMode branch = BranchMode::hpcp_fusion;
  NetMode mode = NetMode::teacher;
  std::vector<int> mel_channels{32, 64, 128, 256};
  std::vector<int> hpcp_channels{32, 64, 128};
  int rnn_hidden = 128;      // per direction; branch latent = 2 * rnn_hidden
  int fusion_hidden = 256;
  double gem_p_init = 3.0;
  int stochastic_blocks = 3;  // deepest mel blocks become stochastic (student)
  double bypass_prob = 0.1;
  double dropout = 0.1;
  uint64_t init_seed = 1;

  bool compatible_with(const ModelConfig& other) const {
    return num_tags == other.num_tags && branch == other.branch &&
           mode == other.mode && mel_channels == other.mel_channels &&
           hpcp_channels == other.hpcp_channels &&
           rnn_hidden == other.rnn_hidden && fusion_hidden == other.fusion_hidden &&
           stochastic_blocks == other.stochastic_blocks;
  }
};

/// Spatial length after n 2x2 GeM downsamples with ceil semantics.
inline Index downsampled_length(Index len, int n_blocks) {
  for (int i = 0; i < n_blocks; ++i) len = (len + 1) / 2;
  return std::max<Index>(len, 1);
}

namespace nn {

// conv3x3 -> bn -> relu -> conv3x3 -> bn, + shortcut (1x1 projection when
// channel counts differ), relu, then 2x2 GeM downsample. The stochastic
// variant may be bypassed as a whole (shortcut + pool only) during noisy
// training and adds dropout after the post-sum relu.
template <typename S>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(int in_ch, int out_ch, double gem_p, Rng& rng, bool stochastic,
            double bypass_prob, double dropout)
      : stochastic_(stochastic),
        bypass_prob_(bypass_prob),
        c1_(in_ch, out_ch, 3, rng),
        bn1_(out_ch),
        c2_(out_ch, out_ch, 3, rng),
        bn2_(out_ch),
        pool_(static_cast<S>(gem_p)),
        drop_(dropout) {
    if (in_ch != out_ch) proj_.emplace(in_ch, out_ch, 1, rng);
  }

  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    if (stochastic_ && opts.noise) {
      ++forward_count_;
      if (opts.rng->bernoulli(bypass_prob_)) {
        ++bypass_count_;
        bypassed_ = opts.record;
        Batch<S> sc = proj_ ? proj_->forward(x, opts) : x;
        return pool_.forward(sc, opts);
      }
    }
    bypassed_ = false;
    Batch<S> main = c1_.forward(x, opts);
    main = bn1_.forward(main, opts);
    main = relu1_.forward(main, opts);
    main = c2_.forward(main, opts);
    main = bn2_.forward(main, opts);
    Batch<S> sc = proj_ ? proj_->forward(x, opts) : x;
    for (size_t s = 0; s < main.size(); ++s)
      for (size_t c = 0; c < main[s].ch.size(); ++c)
        main[s].ch[c] += sc[s].ch[c];
    main = relu2_.forward(main, opts);
    if (stochastic_) main = drop_.forward(main, opts);
    return pool_.forward(main, opts);
  }

  Batch<S> backward(const Batch<S>& dy) {
    Batch<S> d = pool_.backward(dy);
    if (bypassed_) return proj_ ? proj_->backward(d) : d;
    if (stochastic_) d = drop_.backward(d);
    d = relu2_.backward(d);
    // d now feeds both the main path and the shortcut.
    Batch<S> dmain = bn2_.backward(d);
    dmain = c2_.backward(dmain);
    dmain = relu1_.backward(dmain);
    dmain = bn1_.backward(dmain);
    dmain = c1_.backward(dmain);
    Batch<S> dsc = proj_ ? proj_->backward(d) : d;
    for (size_t s = 0; s < dmain.size(); ++s)
      for (size_t c = 0; c < dmain[s].ch.size(); ++c)
        dmain[s].ch[c] += dsc[s].ch[c];
    return dmain;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    c1_.collect_params(prefix + ".c1", out);
    bn1_.collect_params(prefix + ".bn1", out);
    c2_.collect_params(prefix + ".c2", out);
    bn2_.collect_params(prefix + ".bn2", out);
    if (proj_) proj_->collect_params(prefix + ".proj", out);
    pool_.collect_params(prefix + ".gem", out);
  }
  void collect_buffers(const std::string& prefix,
                       std::vector<std::pair<std::string, MatrixX<S>*>>& out) {
    bn1_.collect_buffers(prefix + ".bn1", out);
    bn2_.collect_buffers(prefix + ".bn2", out);
  }

  bool stochastic() const { return stochastic_; }
  int64_t bypass_count() const { return bypass_count_; }
  int64_t forward_count() const { return forward_count_; }
  void reset_counters() { bypass_count_ = forward_count_ = 0; }

 private:
  bool stochastic_ = false;
  double bypass_prob_ = 0.1;
  bool bypassed_ = false;
  int64_t bypass_count_ = 0, forward_count_ = 0;
  Conv2d<S> c1_;
  BatchNorm2d<S> bn1_;
  Relu<S> relu1_;
  Conv2d<S> c2_;
  BatchNorm2d<S> bn2_;
  std::optional<Conv2d<S>> proj_;
  Relu<S> relu2_;
  GeMPool2d<S> pool_;
  Dropout<S> drop_;
};

// Conv stack -> flatten (channels x freq per step) -> BiGRU -> temporal GeM.
template <typename S>
class Branch {
 public:
  Branch() = default;
  Branch(const std::vector<int>& channels, int rnn_hidden, Index input_rows,
         double gem_p, Rng& rng, int stochastic_tail, double bypass_prob,
         double dropout)
      : input_rows_(input_rows) {
    int in_ch = 1;
    const int n = static_cast<int>(channels.size());
    for (int i = 0; i < n; ++i) {
      const bool stoch = i >= n - stochastic_tail;
      blocks_.emplace_back(std::make_unique<ConvBlock<S>>(
          in_ch, channels[static_cast<size_t>(i)], gem_p, rng, stoch, bypass_prob,
          dropout));
      in_ch = channels[static_cast<size_t>(i)];
    }
    const Index out_rows = downsampled_length(input_rows, n);
    rnn_input_dim_ = static_cast<int>(in_ch * out_rows);
    rnn_ = BiGru<S>(rnn_input_dim_, rnn_hidden, rng);
    tpool_ = GeMPoolTime<S>(static_cast<S>(gem_p));
  }

  /// inputs: per-sample [rows x frames]; valid_frames: unpadded frame counts.
  /// Returns latents [2*rnn_hidden x batch].
  MatrixX<S> forward(const std::vector<MatrixX<S>>& inputs,
                     const std::vector<Index>& valid_frames, const FwdOpts& opts) {
    const size_t b = inputs.size();
    Batch<S> batch(b);
    for (size_t s = 0; s < b; ++s) {
      if (inputs[s].rows() != input_rows_)
        fail("shape", "branch expects ", input_rows_, " rows, got ",
             inputs[s].rows());
      batch[s].ch = {inputs[s]};
    }
    for (auto& blk : blocks_) batch = blk->forward(batch, opts);

    std::vector<MatrixX<S>> seqs(b);
    for (size_t s = 0; s < b; ++s) seqs[s] = to_sequence(batch[s]);
    if (opts.record) {
      conv_out_rows_ = batch.front().rows();
      conv_out_ch_ = batch.front().channels();
    }
    auto rnn_out = rnn_.forward(seqs, opts);

    std::vector<Index> valid_steps(b);
    for (size_t s = 0; s < b; ++s) {
      const Index steps = downsampled_length(valid_frames[s],
                                             static_cast<int>(blocks_.size()));
      valid_steps[s] = std::min<Index>(steps, rnn_out[s].cols());
    }
    return tpool_.forward(rnn_out, valid_steps, opts);
  }

  void backward(const MatrixX<S>& dlatent) {
    auto d_rnn_out = tpool_.backward(dlatent);
    auto d_seq = rnn_.backward(d_rnn_out);
    Batch<S> d(d_seq.size());
    for (size_t s = 0; s < d_seq.size(); ++s)
      d[s] = from_sequence(d_seq[s]);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
      d = (*it)->backward(d);
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    for (size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i]->collect_params(prefix + ".b" + std::to_string(i), out);
    rnn_.collect_params(prefix + ".rnn", out);
    tpool_.collect_params(prefix + ".tgem", out);
  }
  void collect_buffers(const std::string& prefix,
                       std::vector<std::pair<std::string, MatrixX<S>*>>& out) {
    for (size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i]->collect_buffers(prefix + ".b" + std::to_string(i), out);
  }

  std::vector<ConvBlock<S>*> stochastic_blocks() {
    std::vector<ConvBlock<S>*> out;
    for (auto& b : blocks_)
      if (b->stochastic()) out.push_back(b.get());
    return out;
  }

 private:
  // [C x h x w] -> [C*h x w]: per time step, stack all channels' frequency
  // columns.
  MatrixX<S> to_sequence(const Tensor<S>& t) const {
    const Index h = t.rows(), w = t.cols(), c = t.channels();
    MatrixX<S> seq(c * h, w);
    for (Index ci = 0; ci < c; ++ci)
      seq.middleRows(ci * h, h) = t.ch[static_cast<size_t>(ci)];
    return seq;
  }
  Tensor<S> from_sequence(const MatrixX<S>& seq) const {
    Tensor<S> t;
    const Index h = conv_out_rows_, c = conv_out_ch_;
    t.ch.resize(static_cast<size_t>(c));
    for (Index ci = 0; ci < c; ++ci)
      t.ch[static_cast<size_t>(ci)] = seq.middleRows(ci * h, h);
    return t;
  }

  Index input_rows_ = 0;
  int rnn_input_dim_ = 0;
  Index conv_out_rows_ = 0, conv_out_ch_ = 0;
  std::vector<std::unique_ptr<ConvBlock<S>>> blocks_;
  BiGru<S> rnn_;
  GeMPoolTime<S> tpool_;
};

}  // namespace nn

/// Two-branch tagger. The mel branch is always present; the hpcp branch and
/// 512-wide fusion input exist only in hpcp_fusion mode. Student mode turns
/// the deepest mel blocks stochastic.
template <typename S>
class TaggerModel {
 public:
  explicit TaggerModel(const ModelConfig& cfg) : cfg_(cfg) {
    if (cfg.num_tags < 1) fail("config", "model needs num_tags >= 1");
    Rng rng(derive_seed(cfg.init_seed, 0x6d6f64656cULL));
    const int stochastic_tail =
        cfg.mode == NetMode::student
            ? std::min<int>(cfg.stochastic_blocks,
                            static_cast<int>(cfg.mel_channels.size()))
            : 0;
    mel_ = nn::Branch<S>(cfg.mel_channels, cfg.rnn_hidden, kMelBins,
                         cfg.gem_p_init, rng, stochastic_tail, cfg.bypass_prob,
                         cfg.dropout);
    int fusion_in = 2 * cfg.rnn_hidden;
    if (cfg.branch == BranchMode::hpcp_fusion) {
      hpcp_ = std::make_unique<nn::Branch<S>>(cfg.hpcp_channels, cfg.rnn_hidden,
                                              kHpcpBins, cfg.gem_p_init, rng, 0,
                                              cfg.bypass_prob, cfg.dropout);
      fusion_in = 4 * cfg.rnn_hidden;
    }
    fuse1_ = nn::Linear<S>(fusion_in, cfg.fusion_hidden, rng);
    fuse2_ = nn::Linear<S>(cfg.fusion_hidden, cfg.num_tags, rng);
    noise_rng_ = Rng(derive_seed(cfg.init_seed, 0x6e6f697365ULL));
  }

  /// mel: per-sample [128 x F]; hpcp ignored in normal mode.
  /// Returns logits [num_tags x batch].
  MatrixX<S> forward(const std::vector<MatrixX<S>>& mel,
                     const std::vector<MatrixX<S>>& hpcp,
                     const std::vector<Index>& mel_valid,
                     const std::vector<Index>& hpcp_valid, nn::FwdOpts opts) {
    if (mel.empty()) fail("shape", "empty batch");
    if (opts.noise && opts.rng == nullptr) opts.rng = &noise_rng_;
    MatrixX<S> latent = mel_.forward(mel, mel_valid, opts);
    if (hpcp_) {
      if (hpcp.size() != mel.size())
        fail("shape", "hpcp batch size ", hpcp.size(), " != mel batch size ",
             mel.size());
      MatrixX<S> hl = hpcp_->forward(hpcp, hpcp_valid, opts);
      MatrixX<S> cat(latent.rows() + hl.rows(), latent.cols());
      cat.topRows(latent.rows()) = latent;
      cat.bottomRows(hl.rows()) = hl;
      latent = std::move(cat);
    }
    MatrixX<S> hidden = fuse1_.forward(latent, opts);
    hidden = fuse_relu_.forward(hidden, opts);
    return fuse2_.forward(hidden, opts);
  }

  /// Convenience eval-mode forward with full-valid inputs.
  MatrixX<S> predict(const std::vector<MatrixX<S>>& mel,
                     const std::vector<MatrixX<S>>& hpcp) {
    std::vector<Index> mv(mel.size()), hv(hpcp.size());
    for (size_t i = 0; i < mel.size(); ++i) mv[i] = mel[i].cols();
    for (size_t i = 0; i < hpcp.size(); ++i) hv[i] = hpcp[i].cols();
    return forward(mel, hpcp, mv, hv, nn::eval_opts());
  }

  void backward(const MatrixX<S>& dlogits) {
    MatrixX<S> d = fuse2_.backward(dlogits);
    d = fuse_relu_.backward(d);
    d = fuse1_.backward(d);
    const Index mel_dim = 2 * cfg_.rnn_hidden;
    mel_.backward(d.topRows(mel_dim));
    if (hpcp_) hpcp_->backward(d.bottomRows(2 * cfg_.rnn_hidden));
  }

  std::vector<nn::ParamRef<S>> params() {
    std::vector<nn::ParamRef<S>> out;
    mel_.collect_params("mel", out);
    if (hpcp_) hpcp_->collect_params("hpcp", out);
    fuse1_.collect_params("fuse1", out);
    fuse2_.collect_params("fuse2", out);
    return out;
  }

  /// Params plus batchnorm running buffers; the full checkpoint state.
  std::vector<std::pair<std::string, MatrixX<S>*>> state() {
    std::vector<std::pair<std::string, MatrixX<S>*>> out;
    for (auto& p : params()) out.push_back({p.name, p.value});
    mel_.collect_buffers("mel", out);
    if (hpcp_) hpcp_->collect_buffers("hpcp", out);
    return out;
  }

  void zero_grads() {
    for (auto& p : params()) p.grad->setZero();
  }

  int64_t count_parameters() { return nn::count_parameters(params()); }

  const ModelConfig& config() const { return cfg_; }

  std::vector<int64_t> stochastic_bypass_counts() {
    std::vector<int64_t> out;
    for (auto* b : mel_.stochastic_blocks()) out.push_back(b->bypass_count());
    return out;
  }
  std::vector<int64_t> stochastic_forward_counts() {
    std::vector<int64_t> out;
    for (auto* b : mel_.stochastic_blocks()) out.push_back(b->forward_count());
    return out;
  }
  void reset_stochastic_counters() {
    for (auto* b : mel_.stochastic_blocks()) b->reset_counters();
  }

  void reseed_noise(uint64_t seed) { noise_rng_ = Rng(seed); }

 private:
  ModelConfig cfg_;
  nn::Branch<S> mel_;
  std::unique_ptr<nn::Branch<S>> hpcp_;
  nn::Linear<S> fuse1_, fuse2_;
  nn::Relu<S> fuse_relu_;
  Rng noise_rng_{0};
};

inline BranchMode parse_branch_mode(const std::string& s) {
  if (s == "normal") return BranchMode::normal;
  if (s == "hpcp") return BranchMode::hpcp_fusion;
  fail("config", "unknown branch '", s, "' (expected normal|hpcp)");
}

inline NetMode parse_net_mode(const std::string& s) {
  if (s == "teacher") return NetMode::teacher;
  if (s == "student") return NetMode::student;
  fail("config", "unknown net mode '", s, "'");
}

}  // namespace emotag
