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

#include "emotag/config.hpp"

namespace emotag {

// Subcommand entry points; each is idempotent for a fixed config+seed and
// writes only under its declared output directory.
void cmd_extract(RunConfig& cfg);
void cmd_train(RunConfig& cfg);
void cmd_pseudolabel(RunConfig& cfg);
void cmd_train_student(RunConfig& cfg);
void cmd_predict(RunConfig& cfg);
void cmd_ensemble(RunConfig& cfg);
void cmd_evaluate(RunConfig& cfg);

/// Full argv-level entry point used by the `emotag` binary.
int cli_main(int argc, char** argv);

}  // namespace emotag
