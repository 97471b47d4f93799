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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "laglearn/rng.hpp"

namespace laglearn {

using Action = int;
using Outcome = int;

/// Conditional outcome distributions F(.|a), one row per action.
class OutcomeModel {
public:
    OutcomeModel() = default;
    /// `rows[a][y]` is F(y|a). Throws std::invalid_argument unless every row
    /// is a probability vector (entries in [0,1], sum 1 within 1e-12).
    explicit OutcomeModel(std::vector<std::vector<double>> rows);

    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_outcomes() const noexcept { return n_outcomes_; }

    double prob(Action a, Outcome y) const noexcept {
        return probs_[static_cast<std::size_t>(a) * n_outcomes_ + static_cast<std::size_t>(y)];
    }
    std::span<const double> row(Action a) const noexcept {
        return {probs_.data() + static_cast<std::size_t>(a) * n_outcomes_, n_outcomes_};
    }
    std::vector<std::vector<double>> rows() const;

    /// Expected stage payoff sum_y v(y) F(y|a).
    double expected_payoff(Action a, std::span<const double> payoff) const;

    bool operator==(const OutcomeModel&) const = default;

private:
    std::size_t n_actions_ = 0;
    std::size_t n_outcomes_ = 0;
    std::vector<double> probs_;
};

struct PointLag {
    int lag = 0;
    bool operator==(const PointLag&) const = default;
};

/// Outcome driven by sum_j weights[j] * 1{a_{t-j} = a}, j = 0..k.
struct MixtureLag {
    std::vector<double> weights;
    bool operator==(const MixtureLag&) const = default;
};

/// Agent is unsure which point lag in `support` is the true one.
struct UncertainLag {
    std::vector<int> support;
    std::vector<double> prior;
    bool operator==(const UncertainLag&) const = default;
};

using TrueLagSpec = std::variant<PointLag, MixtureLag>;
using AgentLagModel = std::variant<PointLag, UncertainLag, MixtureLag>;

/// Largest j such that a_{t-j} is referenced.
int max_lag(const TrueLagSpec& lag) noexcept;
int max_lag(const AgentLagModel& lag) noexcept;

/// Throws std::invalid_argument on malformed weights/supports.
void validate_lag(const TrueLagSpec& lag);
void validate_lag(const AgentLagModel& lag);

/// Implemented actions a_1..a_t plus the exogenous pre-history a_0, a_{-1}, ...
/// `pre_history[0]` is a_0, `pre_history[1]` is a_{-1}, and so on.
class ActionHistory {
public:
    ActionHistory() = default;
    explicit ActionHistory(std::vector<Action> pre_history, std::size_t reserve = 0);

    /// Action in period t (t <= 0 reads the pre-history). Throws
    /// std::out_of_range when t is not covered.
    Action at(long t) const;
    bool covers(long t) const noexcept {
        return t <= static_cast<long>(actions_.size()) && t > -static_cast<long>(pre_.size());
    }

    void push(Action a) { actions_.push_back(a); }
    /// Number of periods played (t of the last pushed action).
    long periods() const noexcept { return static_cast<long>(actions_.size()); }
    const std::vector<Action>& actions() const noexcept { return actions_; }
    const std::vector<Action>& pre_history() const noexcept { return pre_; }

private:
    std::vector<Action> pre_;
    std::vector<Action> actions_;
};

struct Instance {
    std::vector<OutcomeModel> states;
    std::vector<double> prior;
    std::size_t true_state_index = 0;
    std::vector<double> payoff;
    double discount = 0.0;
    TrueLagSpec true_lag = PointLag{0};
    AgentLagModel agent_lag = PointLag{0};
    /// Defaults to zeros covering the largest referenced lag (see `validate`).
    std::vector<Action> pre_history;
    /// Optional joint prior over states x lag support, state-major. Only used
    /// with UncertainLag; the product prior is used when empty.
    std::vector<double> joint_prior;

    std::size_t n_actions() const noexcept { return states.empty() ? 0 : states.front().n_actions(); }
    std::size_t n_outcomes() const noexcept { return states.empty() ? 0 : states.front().n_outcomes(); }
    const OutcomeModel& true_state() const { return states.at(true_state_index); }
    int required_pre_history() const noexcept;

    /// Structural validation: shapes, probability vectors, lag specs and
    /// pre-history coverage. Fills a missing pre-history with action 0.
    /// Throws std::invalid_argument.
    void validate();

    /// Unique maximiser of expected payoff under the true state (lowest index
    /// on exact ties).
    Action optimal_action() const;
};

/// Warnings about the conditions under which agent-optimality statements are
/// meaningful: delta > 0, or delta == 0 with a point lag of zero.
std::vector<std::string> agent_optimality_warnings(const Instance& inst);

/// `true` when the true lag is representable in the agent's lag model.
bool lag_correctly_specified(const Instance& inst);

enum class RegularityViolationKind {
    TrueStateAbsent,
    ZeroEntry,
    DuplicateRow,
};

struct RegularityViolation {
    RegularityViolationKind kind;
    std::size_t state = 0;
    std::size_t other_state = 0;
    Action action = 0;
    Outcome outcome = 0;
    std::string message;
};

inline constexpr double kRowEqualityTol = 1e-12;

std::vector<RegularityViolation> check_regular(const Instance& inst);

/// alpha_t: distribution over actions that drives (or is believed to drive)
/// the outcome in period t. Throws std::out_of_range when the history does not
/// reach back far enough.
std::vector<double> effective_mixture(const TrueLagSpec& lag, const ActionHistory& history, long t,
                                      std::size_t n_actions);
std::vector<double> effective_mixture(const AgentLagModel& lag, const ActionHistory& history, long t,
                                      std::size_t n_actions);

/// Draws y_t from sum_a alpha_t(a) F*(.|a) under the true lag.
Outcome sample_outcome(const Instance& inst, const ActionHistory& history, long t, Rng& rng);

/// One element of the agent's hypothesis set: a state, and under UncertainLag
/// also the lag the agent entertains.
struct Hypothesis {
    std::size_t state = 0;
    std::optional<int> lag;
};

std::vector<Hypothesis> hypotheses(const Instance& inst);

/// Log-space belief over the hypothesis set. -infinity marks a hypothesis
/// ruled out by a zero likelihood.
class Belief {
public:
    Belief() = default;
    explicit Belief(std::vector<double> log_weights);

    std::size_t size() const noexcept { return log_weights_.size(); }
    const std::vector<double>& log_weights() const noexcept { return log_weights_; }
    std::vector<double>& mutable_log_weights() noexcept { return log_weights_; }

    /// Max-shift normalisation so that sum exp(log_weights) == 1.
    void normalize();
    std::vector<double> weights() const;
    double log_ratio(std::size_t i, std::size_t j) const { return log_weights_.at(i) - log_weights_.at(j); }

private:
    std::vector<double> log_weights_;
};

Belief initial_belief(const Instance& inst);

/// Marginal posterior of each state (sums hypotheses sharing a state).
std::vector<double> state_marginals(const Belief& belief, const Instance& inst);

/// Precomputed likelihood tables for repeated updates of one instance.
class BeliefUpdater {
public:
    explicit BeliefUpdater(const Instance& inst);

    /// Adds log P_h(observed | history) to each hypothesis under the agent's
    /// lag model and renormalises. Throws std::invalid_argument for an
    /// out-of-range outcome and std::domain_error if every hypothesis
    /// assigns probability zero.
    void update(Belief& belief, const ActionHistory& history, long t, Outcome observed) const;

    /// P_h(y | history) for every hypothesis h; row-major |H| x |Y|.
    std::vector<double> predictive(const ActionHistory& history, long t) const;

    std::size_t n_hypotheses() const noexcept { return hyps_.size(); }
    const std::vector<Hypothesis>& hyps() const noexcept { return hyps_; }

private:
    double log_likelihood(std::size_t h, const ActionHistory& history, long t, Outcome y) const;

    std::vector<OutcomeModel> states_;
    AgentLagModel agent_lag_;
    std::size_t n_actions_ = 0;
    std::size_t n_outcomes_ = 0;
    std::vector<Hypothesis> hyps_;
    // log F_state(y|a), indexed [state][a * |Y| + y]
    std::vector<std::vector<double>> log_probs_;
};

Belief bayes_update(Belief belief, const Instance& inst, const ActionHistory& history, long t, Outcome observed);

}  // namespace laglearn
