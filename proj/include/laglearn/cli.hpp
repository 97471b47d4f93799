// Copyright 2026 The laglearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "laglearn/io.hpp"
#include "laglearn/simulator.hpp"

namespace laglearn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInvalid = 2;

/// Entry point behind the laglearn executable. Diagnostics go to `err`;
/// results go to `out` unless --out names a file.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-run CSV columns, in order.
const std::vector<std::string>& run_csv_columns();

/// One CSV row (no trailing newline) for a run.
std::string run_csv_row(const RunStats& s);

/// Ensemble summary as JSON, including the tau histograms.
Json ensemble_to_json(const EnsembleSummary& s);

}  // namespace laglearn
