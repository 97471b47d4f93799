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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "laglearn/agent.hpp"
#include "laglearn/core_model.hpp"
#include "laglearn/policy_game.hpp"

namespace laglearn {

using Json = nlohmann::json;

/// Thrown for malformed configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Json instance_to_json(const Instance& inst);
/// Parses and validates an explicit instance object.
Instance instance_from_json(const Json& j);

/// Builder object such as {"builder": "fig1", "eps": 0.05, "p_star": 0.01}.
bool is_builder_spec(const Json& j);
Instance instance_from_builder(const Json& j);
/// Parameter names a builder accepts.
std::vector<std::string> builder_parameters(std::string_view builder);
/// Either form.
Instance resolve_instance(const Json& j);

Json policy_to_json(const AgentPolicy& policy);
/// {"type": "myopic"}, {"type": "threshold", ...} or {"type": "grid", ...}.
AgentPolicy policy_from_json(const Json& j);

Json strategy_to_json(const PrincipalStrategy& s);
/// Accepts the primitive kinds plus {"name": "sigma_eps"} and
/// {"name": "learn_then_propose"}, which need the game instance.
PrincipalStrategy strategy_from_json(const Json& j, const Instance& game);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view data);
/// Hash of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const Json& config);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Reads a JSON file. Throws ConfigError with the file name and the
/// line/column of a syntax error.
Json read_json_file(const std::string& path);

}  // namespace laglearn
