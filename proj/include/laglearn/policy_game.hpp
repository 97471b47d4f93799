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
#include <optional>
#include <string>
#include <vector>

#include "laglearn/agent.hpp"
#include "laglearn/bounds.hpp"
#include "laglearn/core_model.hpp"

namespace laglearn {

/// Tagged description of a principal strategy. Composite kinds keep their
/// components in `children`: {pre, post} for ThresholdComposite and
/// {strat0, strat1} for LearningWrapper.
struct PrincipalStrategy {
    enum class Kind { AlwaysPropose, StatusQuo, Mirror, Block, ThresholdComposite, LearningWrapper };

    Kind kind = Kind::AlwaysPropose;
    int k_star = 1;
    int t1 = 2;
    int t2 = 1;
    /// ThresholdComposite: agent-LLR level (log pi(F1)/pi(F0)) and the trigger
    /// above which the post strategy takes over for good.
    double l_eps_star = -1.0;
    double trigger = 1.0;
    /// LearningWrapper: decision period and posterior margin.
    std::size_t tau = 500;
    double eps = 0.01;
    std::vector<PrincipalStrategy> children;

    static PrincipalStrategy always_propose();
    static PrincipalStrategy status_quo();
    static PrincipalStrategy mirror(int k_star);
    static PrincipalStrategy block(int t1, int t2);
    /// Trigger defaults to |l_eps_star|.
    static PrincipalStrategy threshold_composite(double l_eps_star, PrincipalStrategy pre, PrincipalStrategy post,
                                                 std::optional<double> trigger = std::nullopt);
    static PrincipalStrategy learning_wrapper(std::size_t tau, double eps, PrincipalStrategy strat0,
                                              PrincipalStrategy strat1);
    /// Keeps the status quo until the agent's LLR exceeds `level`, then always
    /// proposes.
    static PrincipalStrategy learn_then_propose(double level);

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
    std::string describe() const;
};

/// (T1/2 + T2)/(T1 + T2).
double block_frequency(int t1, int t2);

/// Proposal of Block(T1, T2) in period t >= 1.
Action block_proposal(int t1, int t2, long t);

/// Smallest (T1, T2), ordered by T1 + T2 and then T1, with T1 even and block
/// frequency in (target - width, target). Throws std::runtime_error when
/// nothing qualifies with T1, T2 <= cap.
std::pair<int, int> smallest_block(double target, double width = 0.01, int cap = 10'000);

struct LambdaResult {
    double lambda = 0.0;
    double lambda_hat = 0.0;
    bool lambda_hat_unbounded = false;
    /// m11 >= 0 with msw > 0: lambda reported as 1 and flagged.
    bool degenerate = false;
    double m11 = 0.0;
    double msw = 0.0;
};

/// Increment X_{a->a'} = log F1(y|a')/F0(y|a') with y ~ F0(.|a).
FiniteRV game_increment(const OutcomeModel& f0, const OutcomeModel& f1, Action a, Action a_prime);

/// Closed-form sup over lambda_hat of the drift constraint. Throws
/// std::invalid_argument on zero entries or non-binary actions.
LambdaResult lambda_opt(const OutcomeModel& f0, const OutcomeModel& f1);

/// Same quantity by bisection on the constraint, with expectations summed
/// directly from the tables.
LambdaResult lambda_opt_numeric(const OutcomeModel& f0, const OutcomeModel& f1);

/// pi0(F1) + pi0(F0) q lambda.
double theorem2_payoff(std::span<const double> pi0, double q_hat, double lambda);

enum class GameMode { Auxiliary, Symmetric };

struct GameOptions {
    std::size_t horizon = 100'000;
    std::size_t n_runs = 200;
    std::uint64_t base_seed = 0;
    double tail_fraction = 0.5;
    double absorb_margin = 1e-3;
    std::size_t threads = 0;
};

struct GameRun {
    std::uint64_t seed = 0;
    std::size_t state = 0;
    double payoff_freq = 0.0;
    double proposal_freq_tail = 0.0;
    /// Agent strictly prefers action 1 throughout the tail window.
    bool estar_hit = false;
    /// estar_hit and the escape bound from the terminal LLR is below the margin.
    bool certified = false;
    double escape_bound = 1.0;
    double terminal_llr = 0.0;
    std::size_t n_crossings = 0;
    std::size_t n_switch_01 = 0;
    std::size_t n_switch_10 = 0;
};

struct StatePayoff {
    std::size_t state = 0;
    double weight = 1.0;
    std::size_t n_runs = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct GameResult {
    double payoff_freq = 0.0;
    double payoff_stderr = 0.0;
    double frac_estar_hit = 0.0;
    double frac_certified = 0.0;
    double mean_crossings = 0.0;
    double mean_proposal_freq_tail = 0.0;
    /// Exact proposal frequency of the steady Block, when there is one.
    std::optional<double> lambda_achieved;
    std::vector<StatePayoff> per_state;
    std::vector<GameRun> runs;
};

/// Plays the proposal game in the instance's two-state world with the
/// outcome drawn from `state`. Throws std::invalid_argument on a malformed
/// game (not two states and two actions, horizon 0).
GameResult simulate_game(const Instance& game, const PrincipalStrategy& strategy, const AgentPolicy& agent_policy,
                         GameMode mode, std::size_t state, const GameOptions& options);

/// Runs both states with common seeds and weights them by the prior.
GameResult simulate_game_prior_weighted(const Instance& game, const PrincipalStrategy& strategy,
                                        const AgentPolicy& agent_policy, GameMode mode, const GameOptions& options);

/// Steady-cycle LLR increment (log pi(F1)/pi(F0)) of the strategy assuming
/// every proposal is accepted, with y drawn from `measure_state`.
struct CycleIncrement {
    FiniteRV rv;
    std::size_t period = 1;
    /// Largest possible drop inside one cycle.
    double max_drop = 0.0;
    /// Fraction of the cycle's periods with a proposal.
    double proposal_frequency = 0.0;
};

CycleIncrement cycle_increment(const Instance& game, const PrincipalStrategy& strategy, std::size_t measure_state);

/// Wald bound on ever falling from `llr` to `boundary` under repeated cycles.
double escape_bound(const CycleIncrement& cycle, double llr, double boundary);

struct CandidateEstimate {
    PrincipalStrategy strategy;
    double q = 0.0;
    double std_error = 0.0;
    std::size_t n_estar = 0;
    std::size_t n_certified = 0;
};

struct QStarEstimate {
    double q_hat = 0.0;
    std::size_t best = 0;
    bool reliable = true;
    std::vector<CandidateEstimate> candidates;
};

/// Lower estimate of q* in state F0 over a finite candidate family.
QStarEstimate estimate_qstar(const Instance& game, const std::vector<PrincipalStrategy>& candidates,
                             const AgentPolicy& agent_policy, const GameOptions& options);

/// Mirror, AlwaysPropose, a small Block grid and sigma_eps variants.
std::vector<PrincipalStrategy> default_candidates(const Instance& game, const LambdaResult& lambda);

/// Mirror until the agent's LLR exceeds |l_eps_star| + eta + H, then the
/// smallest Block with frequency just below `lambda_target`. eta solves
/// exp(-r* eta) = eps for the Block cycle. Throws std::invalid_argument
/// unless 1/2 < lambda_target < lambda and l_eps_star < 0.
PrincipalStrategy build_sigma_eps(const Instance& game, double l_eps_star, double lambda_target,
                                  const LambdaResult& lambda, double eps = 0.01);

/// LLR at the boundary of the agent's acceptance region.
double acceptance_boundary(const Instance& game, const AgentPolicy& agent_policy);

}  // namespace laglearn
