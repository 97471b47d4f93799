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
#include <map>
#include <span>
#include <vector>

#include "laglearn/agent.hpp"
#include "laglearn/core_model.hpp"

namespace laglearn {

struct TrajectoryOptions {
    /// Record the LLR vector every `llr_stride` periods; 0 disables the track.
    std::size_t llr_stride = 1;
};

struct Trajectory {
    std::size_t periods = 0;
    std::vector<Action> actions;
    std::vector<Outcome> outcomes;
    /// log w[h] - log w[reference] for every hypothesis h, sampled every
    /// `llr_stride` periods (after the period's update).
    std::vector<std::vector<double>> llr_track;
    std::size_t llr_stride = 0;
    std::size_t reference_hypothesis = 0;
    /// Posterior of the true state after observing y_t.
    std::vector<double> posterior_true;
    std::uint64_t seed = 0;
};

/// action from policy -> outcome under the true lag -> update under the
/// agent's lag. Throws std::invalid_argument for horizon 0.
Trajectory run_trajectory(const Instance& inst, const AgentPolicy& policy, std::size_t horizon, std::uint64_t seed,
                          TrajectoryOptions options = {});

struct RunStats {
    std::uint64_t seed = 0;
    double freq_optimal = 0.0;
    /// Same frequency restricted to the tail window.
    double freq_optimal_tail = 0.0;
    std::size_t n_switch_01 = 0;
    std::size_t n_switch_10 = 0;
    /// Lengths of complete runs of action 0 / 1 (bounded by switches on both
    /// sides). The leading and trailing runs are censored.
    std::vector<std::size_t> tau0_samples;
    std::vector<std::size_t> tau1_samples;
    std::size_t censored_runs = 0;
    /// Number of t with a_{t-1} = a_t = 0 (resp. 1).
    std::size_t S0 = 0;
    std::size_t S1 = 0;
    bool event_eps_hit = false;
    double min_posterior_true = 0.0;
    double max_posterior_true = 0.0;
    double final_posterior_true = 0.0;
};

/// collect_stats on raw sequences. `posterior_true` may be empty.
RunStats collect_action_stats(std::span<const Action> actions, std::span<const double> posterior_true, Action a_star,
                              double eps, double tail_fraction);

/// Throws std::invalid_argument unless 0 < tail_fraction <= 1.
RunStats collect_stats(const Trajectory& traj, const Instance& inst, double eps, double tail_fraction);

/// First index of the tail window of a horizon-T run.
std::size_t tail_start(std::size_t horizon, double tail_fraction);

struct SampleSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    std::map<std::size_t, std::size_t> histogram;
};

SampleSummary summarize_samples(const std::vector<const std::vector<std::size_t>*>& groups);

struct MonteCarloOptions {
    std::size_t horizon = 100'000;
    std::size_t n_runs = 200;
    std::uint64_t base_seed = 0;
    double eps = 0.01;
    double tail_fraction = 0.5;
    std::size_t threads = 0;
};

struct EnsembleSummary {
    std::size_t n_runs = 0;
    std::size_t horizon = 0;
    std::uint64_t base_seed = 0;
    double mean_freq_optimal = 0.0;
    double stderr_freq_optimal = 0.0;
    double mean_freq_optimal_tail = 0.0;
    double stderr_freq_optimal_tail = 0.0;
    double mean_switches = 0.0;
    double mean_S0 = 0.0;
    double mean_S1 = 0.0;
    SampleSummary tau0;
    SampleSummary tau1;
    double frac_event_eps_hit = 0.0;
    double mean_min_posterior_true = 0.0;
    double mean_max_posterior_true = 0.0;
    double mean_final_posterior_true = 0.0;
    /// Per-run statistics in seed order.
    std::vector<RunStats> runs;
};

/// Runs seeds base_seed .. base_seed + n_runs - 1 and reduces in seed order.
EnsembleSummary monte_carlo(const Instance& inst, const AgentPolicy& policy, const MonteCarloOptions& options);

/// Mean and standard error of a sample.
std::pair<double, double> mean_stderr(std::span<const double> xs);

}  // namespace laglearn
