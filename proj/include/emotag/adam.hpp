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

#include <vector>

#include "emotag/nn.hpp"

namespace emotag {

/// Adam with bias correction; per-parameter lower bounds (GeM p >= 1) are
/// clamped after each update.
template <typename S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(std::vector<nn::ParamRef<S>>& params) {
    if (slots_.empty()) {
      slots_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        slots_[i].m = MatrixX<S>::Zero(params[i].value->rows(), params[i].value->cols());
        slots_[i].v = slots_[i].m;
      }
    }
    ++t_;
    const S bc1 = static_cast<S>(1.0 - std::pow(b1_, t_));
    const S bc2 = static_cast<S>(1.0 - std::pow(b2_, t_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      auto& s = slots_[i];
      s.m = static_cast<S>(b1_) * s.m + static_cast<S>(1.0 - b1_) * (*p.grad);
      s.v = (static_cast<S>(b2_) * s.v.array() +
             static_cast<S>(1.0 - b2_) * p.grad->array().square())
                .matrix();
      p.value->array() -= static_cast<S>(lr_) * (s.m.array() / bc1) /
                          ((s.v.array() / bc2).sqrt() + static_cast<S>(eps_));
      if (p.min_value > std::numeric_limits<S>::lowest())
        *p.value = p.value->cwiseMax(p.min_value);
    }
  }

  double lr() const { return lr_; }

 private:
  struct Slot {
    MatrixX<S> m, v;
  };
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace emotag
