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

#include <cstddef>
#include <variant>
#include <vector>

#include "laglearn/core_model.hpp"

namespace laglearn {

struct Myopic {};

/// Acts on the log ratio l = log pi(num)/pi(den) of two hypotheses:
/// l < l_star -> prefer_low, l > l_star -> the other action, and the lowest
/// action index at equality.
struct ThresholdLLR {
    double l_star = 0.0;
    Action prefer_low = 1;
    std::size_t num = 0;
    std::size_t den = 1;
};

/// Discounted two-hypothesis agent solved on an LLR grid.
struct GridValueIteration {
    std::size_t grid_size = 1001;
    double discount = 0.9;
    double convergence_tol = 1e-10;
};

using AgentPolicy = std::variant<Myopic, ThresholdLLR, GridValueIteration>;

void validate_policy(const AgentPolicy& policy);

/// Relative tolerance under which two expected payoffs count as a tie.
inline constexpr double kTieRelTol = 1e-12;

/// argmax_a sum_F pi(F) sum_y v(y) F(y|a); lowest index on ties.
Action myopic_best_response(const Belief& belief, const Instance& inst);

/// LLR log(pi(F_i)/pi(F_j)) at which the two-state agent is indifferent.
/// Throws std::invalid_argument if |A| != 2 or the states rank the actions
/// the same way.
double myopic_indifference_llr(const Instance& inst, std::size_t i, std::size_t j);

struct ThresholdResult {
    double threshold = 0.0;
    /// Action taken below the threshold.
    Action low_action = 0;
    double grid_bound = 0.0;
    double cell_width = 0.0;
    std::size_t sweeps = 0;
    /// sup-norm change of the value function after each sweep.
    std::vector<double> sup_changes;
};

/// Value iteration for a discounted agent whose support is {F_i, F_j}, planning
/// under his own zero-lag model. Throws std::invalid_argument on bad
/// preconditions and std::runtime_error when no switch exists on the grid.
ThresholdResult discounted_threshold(const Instance& inst, std::size_t i, std::size_t j,
                                     const GridValueIteration& policy);

/// Per-trajectory policy evaluator with precomputed payoff tables.
class PolicyRunner {
public:
    PolicyRunner(const AgentPolicy& policy, const Instance& inst);

    Action act(const Belief& belief) const;
    const ThresholdLLR& threshold() const noexcept { return threshold_; }
    bool is_myopic() const noexcept { return myopic_; }

private:
    bool myopic_ = true;
    ThresholdLLR threshold_{};
    std::size_t n_actions_ = 0;
    std::vector<std::size_t> hyp_state_;
    // expected payoff [state * |A| + a]
    std::vector<double> ev_;
};

}  // namespace laglearn
