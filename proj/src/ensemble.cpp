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

#include "emotag/ensemble.hpp"

#include <cmath>
#include <sstream>

#include "emotag/error.hpp"
#include "emotag/metrics.hpp"

namespace emotag {

MatrixXd ensemble_logits(const MatrixXd& l_short, const MatrixXd& l_long,
                         double alpha) {
  if (l_short.rows() != l_long.rows() || l_short.cols() != l_long.cols())
    fail("shape", "logit shapes differ: ", l_short.rows(), "x", l_short.cols(),
         " vs ", l_long.rows(), "x", l_long.cols());
  if (alpha < 0.0 || alpha > 1.0) fail("config", "alpha must be in [0, 1]");
  return alpha * l_short + (1.0 - alpha) * l_long;
}

SweepObjective parse_sweep_objective(const std::string& s) {
  if (s == "roc_auc") return SweepObjective::roc_auc;
  if (s == "pr_auc") return SweepObjective::pr_auc;
  if (s == "f_score") return SweepObjective::f_score;
  fail("config", "unknown ensemble objective '", s, "'");
}

const char* to_string(SweepObjective o) {
  switch (o) {
    case SweepObjective::roc_auc: return "roc_auc";
    case SweepObjective::pr_auc: return "pr_auc";
    case SweepObjective::f_score: return "f_score";
  }
  return "?";
}

namespace {
double objective_value(const MatrixXd& logits, const MatrixXf& labels,
                       SweepObjective objective) {
  std::vector<std::string> names(static_cast<size_t>(logits.cols()));
  for (size_t j = 0; j < names.size(); ++j) names[j] = "t" + std::to_string(j);
  switch (objective) {
    case SweepObjective::roc_auc:
      return compute_report(logits, labels, names).roc_auc;
    case SweepObjective::pr_auc:
      return compute_report(logits, labels, names).pr_auc;
    case SweepObjective::f_score: {
      const MatrixXd probs =
          (1.0 / (1.0 + (-logits.array()).exp())).matrix();
      return compute_report(probs, labels, names).f_score;
    }
  }
  return 0.0;
}
}  // namespace

AlphaSweep sweep_alpha(const MatrixXd& l_short, const MatrixXd& l_long,
                       const MatrixXf& labels, const std::vector<double>& grid,
                       SweepObjective objective) {
  if (grid.empty()) fail("config", "alpha grid is empty");
  AlphaSweep sweep;
  bool first = true;
  for (double alpha : grid) {
    const MatrixXd combined = ensemble_logits(l_short, l_long, alpha);
    const double metric = objective_value(combined, labels, objective);
    sweep.curve.emplace_back(alpha, metric);
    if (first || metric > sweep.best_metric) {  // strict: ties keep smaller alpha
      sweep.best_alpha = alpha;
      sweep.best_metric = metric;
      first = false;
    }
  }
  return sweep;
}

std::vector<double> alpha_grid(double step) {
  if (step <= 0.0 || step > 1.0) fail("config", "alpha grid step must be in (0, 1]");
  std::vector<double> grid;
  for (int64_t i = 0;; ++i) {
    double a = static_cast<double>(i) * step;
    if (a >= 1.0 - 1e-12) {
      grid.push_back(1.0);
      break;
    }
    grid.push_back(a);
  }
  return grid;
}

std::string AlphaSweep::curve_csv() const {
  std::ostringstream os;
  os << "alpha,metric\n";
  os.precision(12);
  for (const auto& [a, m] : curve) os << a << ',' << m << "\n";
  return os.str();
}

}  // namespace emotag
