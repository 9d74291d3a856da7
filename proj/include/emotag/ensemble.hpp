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

#include <string>
#include <vector>

#include "emotag/types.hpp"

namespace emotag {

/// alpha * l_short + (1 - alpha) * l_long, elementwise.
MatrixXd ensemble_logits(const MatrixXd& l_short, const MatrixXd& l_long,
                         double alpha);

enum class SweepObjective { roc_auc, pr_auc, f_score };

SweepObjective parse_sweep_objective(const std::string& s);
const char* to_string(SweepObjective o);

struct AlphaSweep {
  double best_alpha = 0.0;
  double best_metric = 0.0;
  std::vector<std::pair<double, double>> curve;  // (alpha, metric)

  std::string curve_csv() const;
};

/// Evaluates the objective at every grid point; ties resolve to the smaller
/// alpha. Ranking objectives see sigmoid-free logits (invariant); f_score is
/// computed on sigmoid probabilities at threshold 0.5.
AlphaSweep sweep_alpha(const MatrixXd& l_short, const MatrixXd& l_long,
                       const MatrixXf& labels, const std::vector<double>& grid,
                       SweepObjective objective = SweepObjective::pr_auc);

std::vector<double> alpha_grid(double step);

}  // namespace emotag
