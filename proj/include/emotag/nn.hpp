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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emotag/error.hpp"
#include "emotag/rng.hpp"
#include "emotag/types.hpp"

// Dense layers with explicit forward/backward passes. Everything is
// templated on the scalar so the same graph runs in float for training and
// in double for finite-difference checks. Layers own their caches; backward
// must follow a recording forward in exact reverse order.

namespace emotag::nn {

template <typename S>
struct Tensor {
  std::vector<MatrixX<S>> ch;  // channels, each rows x cols

  Index channels() const { return static_cast<Index>(ch.size()); }
  Index rows() const { return ch.empty() ? 0 : ch.front().rows(); }
  Index cols() const { return ch.empty() ? 0 : ch.front().cols(); }
};

template <typename S>
using Batch = std::vector<Tensor<S>>;

template <typename S>
struct ParamRef {
  std::string name;
  MatrixX<S>* value;
  MatrixX<S>* grad;
  S min_value = std::numeric_limits<S>::lowest();  // clamp after updates
};

struct FwdOpts {
  bool batch_stats = false;  // batchnorm uses batch statistics (else running)
  bool noise = false;        // dropout / stochastic depth active
  bool record = false;       // keep caches for a subsequent backward
  Rng* rng = nullptr;        // required when noise is set
};

inline FwdOpts train_opts(Rng* rng) { return {true, true, true, rng}; }
inline FwdOpts eval_opts() { return {false, false, false, nullptr}; }

// ---------------------------------------------------------------------------
// Conv2d: k x k, stride 1, zero "same" padding (k in {1, 3}).
// ---------------------------------------------------------------------------
template <typename S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, Rng& rng)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize) {
    weight_.resize(out_ch, in_ch * k_ * k_);
    const double std = std::sqrt(2.0 / (in_ch * k_ * k_));
    for (Index i = 0; i < weight_.rows(); ++i)
      for (Index j = 0; j < weight_.cols(); ++j)
        weight_(i, j) = static_cast<S>(rng.normal() * std);
    bias_ = MatrixX<S>::Zero(out_ch, 1);
    wgrad_ = MatrixX<S>::Zero(weight_.rows(), weight_.cols());
    bgrad_ = MatrixX<S>::Zero(out_ch, 1);
  }

  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    const Index b = static_cast<Index>(x.size());
    Batch<S> y(static_cast<size_t>(b));
    if (opts.record) cols_.assign(static_cast<size_t>(b), {});
    for (Index s = 0; s < b; ++s) {
      MatrixX<S> col = im2col(x[static_cast<size_t>(s)]);
      MatrixX<S> out = weight_ * col;
      out.colwise() += bias_.col(0);
      y[static_cast<size_t>(s)] = unflatten(out, x[static_cast<size_t>(s)].rows(),
                                            x[static_cast<size_t>(s)].cols());
      if (opts.record) cols_[static_cast<size_t>(s)] = std::move(col);
    }
    return y;
  }

  Batch<S> backward(const Batch<S>& dy) {
    const auto b = dy.size();
    Batch<S> dx(b);
    for (size_t s = 0; s < b; ++s) {
      const MatrixX<S> dout = flatten(dy[s]);
      wgrad_.noalias() += dout * cols_[s].transpose();
      bgrad_.col(0) += dout.rowwise().sum();
      const MatrixX<S> dcol = weight_.transpose() * dout;
      dx[s] = col2im(dcol, dy[s].rows(), dy[s].cols());
    }
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".w", &weight_, &wgrad_});
    out.push_back({prefix + ".b", &bias_, &bgrad_});
  }

 private:
  MatrixX<S> im2col(const Tensor<S>& x) const {
    const Index h = x.rows(), w = x.cols();
    const int pad = k_ / 2;
    MatrixX<S> col = MatrixX<S>::Zero(static_cast<Index>(in_ch_) * k_ * k_, h * w);
    for (int c = 0; c < in_ch_; ++c) {
      const auto& plane = x.ch[static_cast<size_t>(c)];
      for (int dy = 0; dy < k_; ++dy)
        for (int dx = 0; dx < k_; ++dx) {
          const Index row = static_cast<Index>(c) * k_ * k_ + dy * k_ + dx;
          for (Index xx = 0; xx < w; ++xx) {
            const Index sx = xx + dx - pad;
            if (sx < 0 || sx >= w) continue;
            for (Index yy = 0; yy < h; ++yy) {
              const Index sy = yy + dy - pad;
              if (sy < 0 || sy >= h) continue;
              col(row, xx * h + yy) = plane(sy, sx);
            }
          }
        }
    }
    return col;
  }

  Tensor<S> col2im(const MatrixX<S>& dcol, Index h, Index w) const {
    Tensor<S> dx;
    dx.ch.assign(static_cast<size_t>(in_ch_), MatrixX<S>::Zero(h, w));
    const int pad = k_ / 2;
    for (int c = 0; c < in_ch_; ++c) {
      auto& plane = dx.ch[static_cast<size_t>(c)];
      for (int dy = 0; dy < k_; ++dy)
        for (int dx2 = 0; dx2 < k_; ++dx2) {
          const Index row = static_cast<Index>(c) * k_ * k_ + dy * k_ + dx2;
          for (Index xx = 0; xx < w; ++xx) {
            const Index sx = xx + dx2 - pad;
            if (sx < 0 || sx >= w) continue;
            for (Index yy = 0; yy < h; ++yy) {
              const Index sy = yy + dy - pad;
              if (sy < 0 || sy >= h) continue;
              plane(sy, sx) += dcol(row, xx * h + yy);
            }
          }
        }
    }
    return dx;
  }

  // [out_ch x h*w] with column index x*h + y, matching Eigen's column-major
  // plane layout so flatten/unflatten are pure reshapes.
  static MatrixX<S> flatten(const Tensor<S>& t) {
    MatrixX<S> m(t.channels(), t.rows() * t.cols());
    for (Index c = 0; c < t.channels(); ++c)
      m.row(c) = Eigen::Map<const VectorX<S>>(t.ch[static_cast<size_t>(c)].data(),
                                              t.rows() * t.cols());
    return m;
  }
  static Tensor<S> unflatten(const MatrixX<S>& m, Index h, Index w) {
    Tensor<S> t;
    t.ch.resize(static_cast<size_t>(m.rows()));
    for (Index c = 0; c < m.rows(); ++c) {
      const VectorX<S> row = m.row(c);
      t.ch[static_cast<size_t>(c)] = Eigen::Map<const MatrixX<S>>(row.data(), h, w);
    }
    return t;
  }

  int in_ch_ = 0, out_ch_ = 0, k_ = 3;
  MatrixX<S> weight_, bias_, wgrad_, bgrad_;
  std::vector<MatrixX<S>> cols_;
};

// ---------------------------------------------------------------------------
// BatchNorm2d over (batch, rows, cols) per channel.
// ---------------------------------------------------------------------------
template <typename S>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels) : c_(channels) {
    gamma_ = MatrixX<S>::Ones(channels, 1);
    beta_ = MatrixX<S>::Zero(channels, 1);
    ggrad_ = MatrixX<S>::Zero(channels, 1);
    bgrad_ = MatrixX<S>::Zero(channels, 1);
    run_mean_ = MatrixX<S>::Zero(channels, 1);
    run_var_ = MatrixX<S>::Ones(channels, 1);
  }

  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    const auto b = x.size();
    Batch<S> y(b);
    for (auto& t : y) t.ch.resize(static_cast<size_t>(c_));
    if (opts.record) {
      xhat_.assign(b, {});
      for (auto& t : xhat_) t.ch.resize(static_cast<size_t>(c_));
      inv_std_.resize(c_);
      used_batch_stats_ = opts.batch_stats;
    }

    const auto n_per_ch =
        static_cast<S>(b * static_cast<size_t>(x.front().rows() * x.front().cols()));
    for (int c = 0; c < c_; ++c) {
      S mean, var;
      if (opts.batch_stats) {
        S sum = 0, sq = 0;
        for (const auto& t : x) {
          sum += t.ch[static_cast<size_t>(c)].sum();
          sq += t.ch[static_cast<size_t>(c)].array().square().sum();
        }
        mean = sum / n_per_ch;
        var = sq / n_per_ch - mean * mean;
        if (var < 0) var = 0;
        if (opts.record) {
          // Unbiased variance feeds the running estimate.
          const S unbiased = n_per_ch > 1 ? var * n_per_ch / (n_per_ch - 1) : var;
          run_mean_(c, 0) = (1 - kMomentum) * run_mean_(c, 0) + kMomentum * mean;
          run_var_(c, 0) = (1 - kMomentum) * run_var_(c, 0) + kMomentum * unbiased;
        }
      } else {
        mean = run_mean_(c, 0);
        var = run_var_(c, 0);
      }
      const S inv_std = S(1) / std::sqrt(var + kEps);
      if (opts.record) inv_std_[static_cast<size_t>(c)] = inv_std;
      for (size_t s = 0; s < b; ++s) {
        MatrixX<S> xh =
            ((x[s].ch[static_cast<size_t>(c)].array() - mean) * inv_std).matrix();
        y[s].ch[static_cast<size_t>(c)] =
            (xh.array() * gamma_(c, 0) + beta_(c, 0)).matrix();
        if (opts.record) xhat_[s].ch[static_cast<size_t>(c)] = std::move(xh);
      }
    }
    return y;
  }

  Batch<S> backward(const Batch<S>& dy) {
    const auto b = dy.size();
    Batch<S> dx(b);
    for (auto& t : dx) t.ch.resize(static_cast<size_t>(c_));
    const auto n =
        static_cast<S>(b * static_cast<size_t>(dy.front().rows() * dy.front().cols()));
    for (int c = 0; c < c_; ++c) {
      S sum_dy = 0, sum_dy_xhat = 0;
      for (size_t s = 0; s < b; ++s) {
        sum_dy += dy[s].ch[static_cast<size_t>(c)].sum();
        sum_dy_xhat += (dy[s].ch[static_cast<size_t>(c)].array() *
                        xhat_[s].ch[static_cast<size_t>(c)].array())
                           .sum();
      }
      ggrad_(c, 0) += sum_dy_xhat;
      bgrad_(c, 0) += sum_dy;
      const S g = gamma_(c, 0);
      const S inv_std = inv_std_[static_cast<size_t>(c)];
      for (size_t s = 0; s < b; ++s) {
        const auto& d = dy[s].ch[static_cast<size_t>(c)].array();
        if (used_batch_stats_) {
          const auto& xh = xhat_[s].ch[static_cast<size_t>(c)].array();
          dx[s].ch[static_cast<size_t>(c)] =
              (g * inv_std / n * (n * d - sum_dy - xh * sum_dy_xhat)).matrix();
        } else {
          dx[s].ch[static_cast<size_t>(c)] = (d * g * inv_std).matrix();
        }
      }
    }
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".g", &gamma_, &ggrad_});
    out.push_back({prefix + ".b", &beta_, &bgrad_});
  }
  void collect_buffers(const std::string& prefix,
                       std::vector<std::pair<std::string, MatrixX<S>*>>& out) {
    out.push_back({prefix + ".rm", &run_mean_});
    out.push_back({prefix + ".rv", &run_var_});
  }

 private:
  static constexpr S kMomentum = static_cast<S>(0.1);
  static constexpr S kEps = static_cast<S>(1e-5);
  int c_ = 0;
  MatrixX<S> gamma_, beta_, ggrad_, bgrad_, run_mean_, run_var_;
  Batch<S> xhat_;
  std::vector<S> inv_std_;
  bool used_batch_stats_ = false;
};

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------
template <typename S>
class Relu {
 public:
  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    Batch<S> y(x.size());
    if (opts.record) mask_.assign(x.size(), {});
    for (size_t s = 0; s < x.size(); ++s) {
      y[s].ch.resize(x[s].ch.size());
      if (opts.record) mask_[s].ch.resize(x[s].ch.size());
      for (size_t c = 0; c < x[s].ch.size(); ++c) {
        y[s].ch[c] = x[s].ch[c].cwiseMax(S(0));
        if (opts.record)
          mask_[s].ch[c] = (x[s].ch[c].array() > S(0)).template cast<S>().matrix();
      }
    }
    return y;
  }

  Batch<S> backward(const Batch<S>& dy) {
    Batch<S> dx(dy.size());
    for (size_t s = 0; s < dy.size(); ++s) {
      dx[s].ch.resize(dy[s].ch.size());
      for (size_t c = 0; c < dy[s].ch.size(); ++c)
        dx[s].ch[c] = dy[s].ch[c].cwiseProduct(mask_[s].ch[c]);
    }
    return dx;
  }

  // Matrix-shaped variant used by the fusion head.
  MatrixX<S> forward(const MatrixX<S>& x, const FwdOpts& opts) {
    if (opts.record) mmask_ = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseMax(S(0));
  }
  MatrixX<S> backward(const MatrixX<S>& dy) { return dy.cwiseProduct(mmask_); }

 private:
  Batch<S> mask_;
  MatrixX<S> mmask_;
};

// ---------------------------------------------------------------------------
// Generalized-mean pooling: gem(x) = (mean(clamp(x, eps)^p))^(1/p).
// ---------------------------------------------------------------------------
constexpr double kGemEps = 1e-6;

/// Scalar reference form over one window.
template <typename S>
S gem_pool(const VectorX<S>& window, S p) {
  if (window.size() == 0) fail("shape", "gem_pool over an empty window");
  const auto c = window.array().max(static_cast<S>(kGemEps));
  const S mean = c.pow(p).mean();
  return std::pow(mean, S(1) / p);
}

/// 2x2 spatial GeM downsample with ceil semantics (edge windows shrink).
template <typename S>
class GeMPool2d {
 public:
  GeMPool2d() = default;
  explicit GeMPool2d(S p_init) {
    p_ = MatrixX<S>::Constant(1, 1, p_init);
    pgrad_ = MatrixX<S>::Zero(1, 1);
  }

  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    const S p = p_(0, 0);
    Batch<S> y(x.size());
    if (opts.record) {
      in_ = x;
      smean_.assign(x.size(), {});
    }
    for (size_t s = 0; s < x.size(); ++s) {
      const Index h = x[s].rows(), w = x[s].cols();
      const Index ho = (h + 1) / 2, wo = (w + 1) / 2;
      y[s].ch.resize(x[s].ch.size());
      if (opts.record) smean_[s].ch.resize(x[s].ch.size());
      for (size_t c = 0; c < x[s].ch.size(); ++c) {
        MatrixX<S> out(ho, wo), smat(ho, wo);
        for (Index oy = 0; oy < ho; ++oy)
          for (Index ox = 0; ox < wo; ++ox) {
            const Index wy = std::min<Index>(2, h - oy * 2);
            const Index wx = std::min<Index>(2, w - ox * 2);
            const auto win = x[s].ch[c].block(oy * 2, ox * 2, wy, wx).array();
            // Floor keeps eps^p away from a hard zero when p grows.
            const S smean = std::max(win.max(static_cast<S>(kGemEps)).pow(p).mean(),
                                     std::numeric_limits<S>::min());
            smat(oy, ox) = smean;
            out(oy, ox) = std::pow(smean, S(1) / p);
          }
        y[s].ch[c] = std::move(out);
        if (opts.record) smean_[s].ch[c] = std::move(smat);
      }
    }
    return y;
  }

  Batch<S> backward(const Batch<S>& dy) {
    const S p = p_(0, 0);
    S dp_total = 0;
    Batch<S> dx(in_.size());
    for (size_t s = 0; s < in_.size(); ++s) {
      const Index h = in_[s].rows(), w = in_[s].cols();
      dx[s].ch.resize(in_[s].ch.size());
      for (size_t c = 0; c < in_[s].ch.size(); ++c) {
        dx[s].ch[c] = MatrixX<S>::Zero(h, w);
        const Index ho = dy[s].ch[c].rows(), wo = dy[s].ch[c].cols();
        for (Index oy = 0; oy < ho; ++oy)
          for (Index ox = 0; ox < wo; ++ox) {
            const Index wy = std::min<Index>(2, h - oy * 2);
            const Index wx = std::min<Index>(2, w - ox * 2);
            const S g = dy[s].ch[c](oy, ox);
            if (g == S(0)) continue;
            const S smean = smean_[s].ch[c](oy, ox);
            const S yv = std::pow(smean, S(1) / p);
            const auto n = static_cast<S>(wy * wx);
            S t_sum = 0;  // sum of clamp^p * log(clamp)
            for (Index iy = 0; iy < wy; ++iy)
              for (Index ix = 0; ix < wx; ++ix) {
                const S xv = in_[s].ch[c](oy * 2 + iy, ox * 2 + ix);
                const S cv = std::max(xv, static_cast<S>(kGemEps));
                const S cpow = std::pow(cv, p);
                t_sum += cpow * std::log(cv);
                if (xv >= static_cast<S>(kGemEps))
                  dx[s].ch[c](oy * 2 + iy, ox * 2 + ix) +=
                      g * yv * cpow / (cv * n * smean);
              }
            dp_total += g * yv *
                        (-std::log(smean) / (p * p) + t_sum / (p * n * smean));
          }
      }
    }
    pgrad_(0, 0) += dp_total;
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".p", &p_, &pgrad_, S(1)});
  }
  S p() const { return p_(0, 0); }

 private:
  MatrixX<S> p_, pgrad_;
  Batch<S> in_, smean_;
};

/// GeM over time: [d x len] -> [d], honoring a per-sample valid-step count so
/// zero-padded frames never contribute.
template <typename S>
class GeMPoolTime {
 public:
  GeMPoolTime() = default;
  explicit GeMPoolTime(S p_init) {
    p_ = MatrixX<S>::Constant(1, 1, p_init);
    pgrad_ = MatrixX<S>::Zero(1, 1);
  }

  // seqs: one [d x len] matrix per sample. Returns [d x batch].
  MatrixX<S> forward(const std::vector<MatrixX<S>>& seqs,
                     const std::vector<Index>& valid, const FwdOpts& opts) {
    const S p = p_(0, 0);
    const Index d = seqs.front().rows();
    MatrixX<S> out(d, static_cast<Index>(seqs.size()));
    if (opts.record) {
      in_ = seqs;
      valid_ = valid;
      smean_.resize(d, static_cast<Index>(seqs.size()));
    }
    for (size_t s = 0; s < seqs.size(); ++s) {
      const Index n = std::max<Index>(1, std::min<Index>(valid[s], seqs[s].cols()));
      const auto c =
          seqs[s].leftCols(n).array().max(static_cast<S>(kGemEps));
      const VectorX<S> smean = c.pow(p).rowwise().mean().matrix();
      for (Index i = 0; i < d; ++i) {
        const S sm = std::max(smean(i), std::numeric_limits<S>::min());
        out(i, static_cast<Index>(s)) = std::pow(sm, S(1) / p);
        if (opts.record) smean_(i, static_cast<Index>(s)) = sm;
      }
    }
    return out;
  }

  std::vector<MatrixX<S>> backward(const MatrixX<S>& dout) {
    const S p = p_(0, 0);
    S dp_total = 0;
    std::vector<MatrixX<S>> dx(in_.size());
    for (size_t s = 0; s < in_.size(); ++s) {
      const Index d = in_[s].rows(), len = in_[s].cols();
      dx[s] = MatrixX<S>::Zero(d, len);
      const Index n = std::max<Index>(1, std::min<Index>(valid_[s], len));
      for (Index i = 0; i < d; ++i) {
        const S g = dout(i, static_cast<Index>(s));
        if (g == S(0)) continue;
        const S smean = smean_(i, static_cast<Index>(s));
        const S yv = std::pow(smean, S(1) / p);
        S t_sum = 0;
        for (Index t = 0; t < n; ++t) {
          const S xv = in_[s](i, t);
          const S cv = std::max(xv, static_cast<S>(kGemEps));
          const S cpow = std::pow(cv, p);
          t_sum += cpow * std::log(cv);
          if (xv >= static_cast<S>(kGemEps))
            dx[s](i, t) += g * yv * cpow / (cv * static_cast<S>(n) * smean);
        }
        dp_total += g * yv *
                    (-std::log(smean) / (p * p) +
                     t_sum / (p * static_cast<S>(n) * smean));
      }
    }
    pgrad_(0, 0) += dp_total;
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".p", &p_, &pgrad_, S(1)});
  }
  S p() const { return p_(0, 0); }

 private:
  MatrixX<S> p_, pgrad_;
  std::vector<MatrixX<S>> in_;
  std::vector<Index> valid_;
  MatrixX<S> smean_;
};

// ---------------------------------------------------------------------------
// Dropout (inverted scaling; identity when noise is off).
// ---------------------------------------------------------------------------
template <typename S>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double rate) : rate_(rate) {}

  Batch<S> forward(const Batch<S>& x, const FwdOpts& opts) {
    if (!opts.noise || rate_ == 0.0) {
      if (opts.record) {
        mask_.clear();
        active_ = false;
      }
      return x;
    }
    active_ = true;
    const S scale = static_cast<S>(1.0 / (1.0 - rate_));
    Batch<S> y(x.size());
    mask_.assign(x.size(), {});
    for (size_t s = 0; s < x.size(); ++s) {
      y[s].ch.resize(x[s].ch.size());
      mask_[s].ch.resize(x[s].ch.size());
      for (size_t c = 0; c < x[s].ch.size(); ++c) {
        MatrixX<S> m(x[s].ch[c].rows(), x[s].ch[c].cols());
        for (Index j = 0; j < m.cols(); ++j)
          for (Index i = 0; i < m.rows(); ++i)
            m(i, j) = opts.rng->bernoulli(rate_) ? S(0) : scale;
        y[s].ch[c] = x[s].ch[c].cwiseProduct(m);
        mask_[s].ch[c] = std::move(m);
      }
    }
    return y;
  }

  Batch<S> backward(const Batch<S>& dy) {
    if (!active_) return dy;
    Batch<S> dx(dy.size());
    for (size_t s = 0; s < dy.size(); ++s) {
      dx[s].ch.resize(dy[s].ch.size());
      for (size_t c = 0; c < dy[s].ch.size(); ++c)
        dx[s].ch[c] = dy[s].ch[c].cwiseProduct(mask_[s].ch[c]);
    }
    return dx;
  }

 private:
  double rate_ = 0.0;
  Batch<S> mask_;
  bool active_ = false;
};

// ---------------------------------------------------------------------------
// Linear: y = W x + b on [in x batch] column blocks.
// ---------------------------------------------------------------------------
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim, Rng& rng) {
    const double limit = std::sqrt(6.0 / (in_dim + out_dim));
    weight_.resize(out_dim, in_dim);
    for (Index i = 0; i < weight_.rows(); ++i)
      for (Index j = 0; j < weight_.cols(); ++j)
        weight_(i, j) = static_cast<S>(rng.uniform(-limit, limit));
    bias_ = MatrixX<S>::Zero(out_dim, 1);
    wgrad_ = MatrixX<S>::Zero(out_dim, in_dim);
    bgrad_ = MatrixX<S>::Zero(out_dim, 1);
  }

  MatrixX<S> forward(const MatrixX<S>& x, const FwdOpts& opts) {
    if (opts.record) in_ = x;
    MatrixX<S> y = weight_ * x;
    y.colwise() += bias_.col(0);
    return y;
  }

  MatrixX<S> backward(const MatrixX<S>& dy) {
    wgrad_.noalias() += dy * in_.transpose();
    bgrad_.col(0) += dy.rowwise().sum();
    return weight_.transpose() * dy;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".w", &weight_, &wgrad_});
    out.push_back({prefix + ".b", &bias_, &bgrad_});
  }

 private:
  MatrixX<S> weight_, bias_, wgrad_, bgrad_, in_;
};

// ---------------------------------------------------------------------------
// GRU, single direction.
//   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br)
//   n = tanh(Wn x + r .* (Un h) + bn), h' = (1 - z) .* n + z .* h
// ---------------------------------------------------------------------------
template <typename S>
class Gru {
 public:
  Gru() = default;
  Gru(int in_dim, int hidden, Rng& rng) : d_(in_dim), h_(hidden) {
    auto init = [&](int rows, int cols) {
      const double limit = std::sqrt(6.0 / (rows + cols));
      MatrixX<S> m(rows, cols);
      for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
          m(i, j) = static_cast<S>(rng.uniform(-limit, limit));
      return m;
    };
    wz_ = init(hidden, in_dim);
    wr_ = init(hidden, in_dim);
    wn_ = init(hidden, in_dim);
    uz_ = init(hidden, hidden);
    ur_ = init(hidden, hidden);
    un_ = init(hidden, hidden);
    bz_ = MatrixX<S>::Zero(hidden, 1);
    br_ = MatrixX<S>::Zero(hidden, 1);
    bn_ = MatrixX<S>::Zero(hidden, 1);
    dwz_ = MatrixX<S>::Zero(hidden, in_dim);
    dwr_ = MatrixX<S>::Zero(hidden, in_dim);
    dwn_ = MatrixX<S>::Zero(hidden, in_dim);
    duz_ = MatrixX<S>::Zero(hidden, hidden);
    dur_ = MatrixX<S>::Zero(hidden, hidden);
    dun_ = MatrixX<S>::Zero(hidden, hidden);
    dbz_ = MatrixX<S>::Zero(hidden, 1);
    dbr_ = MatrixX<S>::Zero(hidden, 1);
    dbn_ = MatrixX<S>::Zero(hidden, 1);
  }

  // seqs: per sample [d x len]; returns per sample [h x len].
  std::vector<MatrixX<S>> forward(const std::vector<MatrixX<S>>& seqs,
                                  const FwdOpts& opts) {
    std::vector<MatrixX<S>> out(seqs.size());
    if (opts.record) {
      x_ = seqs;
      z_.resize(seqs.size());
      r_.resize(seqs.size());
      n_.resize(seqs.size());
      unh_.resize(seqs.size());
      hs_.resize(seqs.size());
    }
    for (size_t s = 0; s < seqs.size(); ++s) {
      const Index len = seqs[s].cols();
      MatrixX<S> hseq(h_, len);
      MatrixX<S> zs(h_, len), rs(h_, len), ns(h_, len), unhs(h_, len);
      VectorX<S> h = VectorX<S>::Zero(h_);
      for (Index t = 0; t < len; ++t) {
        const auto x = seqs[s].col(t);
        const VectorX<S> z =
            sigmoid(wz_ * x + uz_ * h + bz_.col(0));
        const VectorX<S> r =
            sigmoid(wr_ * x + ur_ * h + br_.col(0));
        const VectorX<S> unh = un_ * h;
        const VectorX<S> n =
            (wn_ * x + r.cwiseProduct(unh) + bn_.col(0)).array().tanh();
        h = (VectorX<S>::Ones(h_) - z).cwiseProduct(n) + z.cwiseProduct(h);
        hseq.col(t) = h;
        if (opts.record) {
          zs.col(t) = z;
          rs.col(t) = r;
          ns.col(t) = n;
          unhs.col(t) = unh;
        }
      }
      out[s] = hseq;
      if (opts.record) {
        z_[s] = std::move(zs);
        r_[s] = std::move(rs);
        n_[s] = std::move(ns);
        unh_[s] = std::move(unhs);
        hs_[s] = out[s];
      }
    }
    return out;
  }

  std::vector<MatrixX<S>> backward(const std::vector<MatrixX<S>>& dout) {
    std::vector<MatrixX<S>> dx(dout.size());
    for (size_t s = 0; s < dout.size(); ++s) {
      const Index len = dout[s].cols();
      dx[s] = MatrixX<S>::Zero(d_, len);
      VectorX<S> dh_next = VectorX<S>::Zero(h_);
      for (Index t = len - 1; t >= 0; --t) {
        const VectorX<S> dh = dout[s].col(t) + dh_next;
        const auto z = z_[s].col(t);
        const auto r = r_[s].col(t);
        const auto n = n_[s].col(t);
        const auto unh = unh_[s].col(t);
        const VectorX<S> h_prev =
            t > 0 ? VectorX<S>(hs_[s].col(t - 1)) : VectorX<S>::Zero(h_);
        const auto x = x_[s].col(t);

        const VectorX<S> dz = dh.cwiseProduct(h_prev - n);
        const VectorX<S> dn =
            dh.cwiseProduct((VectorX<S>::Ones(h_) - z).eval());
        VectorX<S> dh_prev = dh.cwiseProduct(z);

        const VectorX<S> dn_pre =
            dn.array() * (S(1) - n.array().square());
        const VectorX<S> dr = dn_pre.cwiseProduct(unh);
        const VectorX<S> dunh = dn_pre.cwiseProduct(r);

        const VectorX<S> dz_pre = dz.array() * z.array() * (S(1) - z.array());
        const VectorX<S> dr_pre = dr.array() * r.array() * (S(1) - r.array());

        dwz_.noalias() += dz_pre * x.transpose();
        dwr_.noalias() += dr_pre * x.transpose();
        dwn_.noalias() += dn_pre * x.transpose();
        duz_.noalias() += dz_pre * h_prev.transpose();
        dur_.noalias() += dr_pre * h_prev.transpose();
        dun_.noalias() += dunh * h_prev.transpose();
        dbz_.col(0) += dz_pre;
        dbr_.col(0) += dr_pre;
        dbn_.col(0) += dn_pre;

        dh_prev.noalias() += uz_.transpose() * dz_pre;
        dh_prev.noalias() += ur_.transpose() * dr_pre;
        dh_prev.noalias() += un_.transpose() * dunh;
        dx[s].col(t) = wz_.transpose() * dz_pre + wr_.transpose() * dr_pre +
                       wn_.transpose() * dn_pre;
        dh_next = dh_prev;
      }
    }
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    out.push_back({prefix + ".wz", &wz_, &dwz_});
    out.push_back({prefix + ".wr", &wr_, &dwr_});
    out.push_back({prefix + ".wn", &wn_, &dwn_});
    out.push_back({prefix + ".uz", &uz_, &duz_});
    out.push_back({prefix + ".ur", &ur_, &dur_});
    out.push_back({prefix + ".un", &un_, &dun_});
    out.push_back({prefix + ".bz", &bz_, &dbz_});
    out.push_back({prefix + ".br", &br_, &dbr_});
    out.push_back({prefix + ".bn", &bn_, &dbn_});
  }

 private:
  static VectorX<S> sigmoid(const VectorX<S>& v) {
    return (S(1) / (S(1) + (-v.array()).exp())).matrix();
  }

  int d_ = 0, h_ = 0;
  MatrixX<S> wz_, wr_, wn_, uz_, ur_, un_, bz_, br_, bn_;
  MatrixX<S> dwz_, dwr_, dwn_, duz_, dur_, dun_, dbz_, dbr_, dbn_;
  std::vector<MatrixX<S>> x_, z_, r_, n_, unh_, hs_;
};

/// Bidirectional GRU; output stacks forward (top) and backward (bottom)
/// hidden states per time step: [2h x len].
template <typename S>
class BiGru {
 public:
  BiGru() = default;
  BiGru(int in_dim, int hidden, Rng& rng)
      : h_(hidden), fwd_(in_dim, hidden, rng), bwd_(in_dim, hidden, rng) {}

  std::vector<MatrixX<S>> forward(const std::vector<MatrixX<S>>& seqs,
                                  const FwdOpts& opts) {
    auto f = fwd_.forward(seqs, opts);
    std::vector<MatrixX<S>> rev(seqs.size());
    for (size_t s = 0; s < seqs.size(); ++s) rev[s] = seqs[s].rowwise().reverse();
    auto b = bwd_.forward(rev, opts);
    std::vector<MatrixX<S>> out(seqs.size());
    for (size_t s = 0; s < seqs.size(); ++s) {
      out[s].resize(2 * h_, seqs[s].cols());
      out[s].topRows(h_) = f[s];
      out[s].bottomRows(h_) = b[s].rowwise().reverse();
    }
    return out;
  }

  std::vector<MatrixX<S>> backward(const std::vector<MatrixX<S>>& dout) {
    std::vector<MatrixX<S>> df(dout.size()), db(dout.size());
    for (size_t s = 0; s < dout.size(); ++s) {
      df[s] = dout[s].topRows(h_);
      db[s] = dout[s].bottomRows(h_).rowwise().reverse();
    }
    auto dxf = fwd_.backward(df);
    auto dxb = bwd_.backward(db);
    std::vector<MatrixX<S>> dx(dout.size());
    for (size_t s = 0; s < dout.size(); ++s)
      dx[s] = dxf[s] + dxb[s].rowwise().reverse();
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
    fwd_.collect_params(prefix + ".f", out);
    bwd_.collect_params(prefix + ".b", out);
  }

 private:
  int h_ = 0;
  Gru<S> fwd_, bwd_;
};

// ---------------------------------------------------------------------------
// Per-tag sigmoid binary cross-entropy with a per-cell mask. With an all-ones
// mask this is exactly the standard BCE mean.
// ---------------------------------------------------------------------------
template <typename S>
S masked_bce(const MatrixX<S>& logits, const MatrixX<S>& targets,
             const MatrixX<S>& mask, MatrixX<S>* dlogits) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols() ||
      logits.rows() != mask.rows() || logits.cols() != mask.cols())
    fail("shape", "loss shape mismatch");
  S total = 0, count = 0;
  for (Index c = 0; c < logits.cols(); ++c)
    for (Index r = 0; r < logits.rows(); ++r) {
      const S m = mask(r, c);
      count += m;
      const S l = logits(r, c);
      const S y = targets(r, c);
      const S term = std::max(l, S(0)) - l * y + std::log1p(std::exp(-std::abs(l)));
      total += m * term;
    }
  if (dlogits) {
    dlogits->resize(logits.rows(), logits.cols());
    if (count > 0) {
      for (Index c = 0; c < logits.cols(); ++c)
        for (Index r = 0; r < logits.rows(); ++r) {
          const S sig = S(1) / (S(1) + std::exp(-logits(r, c)));
          (*dlogits)(r, c) = mask(r, c) * (sig - targets(r, c)) / count;
        }
    } else {
      dlogits->setZero();
    }
  }
  return count > 0 ? total / count : S(0);
}

template <typename S>
int64_t count_parameters(const std::vector<ParamRef<S>>& params) {
  int64_t n = 0;
  for (const auto& p : params) n += static_cast<int64_t>(p.value->size());
  return n;
}

}  // namespace emotag::nn
