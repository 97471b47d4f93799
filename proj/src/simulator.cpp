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

#include "laglearn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "laglearn/parallel.hpp"

namespace laglearn {

namespace {

double true_marginal(const Belief& belief, const std::vector<std::size_t>& true_hyps) {
    double p = 0.0;
    for (std::size_t h : true_hyps) p += std::exp(belief.log_weights()[h]);
    return std::min(1.0, p);
}

}  // namespace

Trajectory run_trajectory(const Instance& inst, const AgentPolicy& policy, std::size_t horizon, std::uint64_t seed,
                          TrajectoryOptions options) {
    if (horizon == 0) throw std::invalid_argument("run_trajectory: horizon must be at least 1");
    const PolicyRunner runner(policy, inst);
    const BeliefUpdater updater(inst);
    Rng rng(seed);

    std::vector<std::size_t> true_hyps;
    const auto hyps = updater.hyps();
    for (std::size_t h = 0; h < hyps.size(); ++h) {
        if (hyps[h].state == inst.true_state_index) true_hyps.push_back(h);
    }

    Trajectory traj;
    traj.periods = horizon;
    traj.seed = seed;
    traj.llr_stride = options.llr_stride;
    traj.reference_hypothesis = true_hyps.front();
    traj.actions.reserve(horizon);
    traj.outcomes.reserve(horizon);
    traj.posterior_true.reserve(horizon);
    if (options.llr_stride > 0) traj.llr_track.reserve(horizon / options.llr_stride + 1);

    ActionHistory history(inst.pre_history, horizon);
    Belief belief = initial_belief(inst);
    for (std::size_t step = 1; step <= horizon; ++step) {
        const auto t = static_cast<long>(step);
        const Action a = runner.act(belief);
        history.push(a);
        const Outcome y = sample_outcome(inst, history, t, rng);
        updater.update(belief, history, t, y);
        traj.actions.push_back(a);
        traj.outcomes.push_back(y);
        traj.posterior_true.push_back(true_marginal(belief, true_hyps));
        if (options.llr_stride > 0 && step % options.llr_stride == 0) {
            const auto& lw = belief.log_weights();
            std::vector<double> row(lw.size());
            for (std::size_t h = 0; h < lw.size(); ++h) row[h] = lw[h] - lw[traj.reference_hypothesis];
            traj.llr_track.push_back(std::move(row));
        }
    }
    return traj;
}

std::size_t tail_start(std::size_t horizon, double tail_fraction) {
    const auto len = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(horizon)));
    return horizon - std::min(horizon, len);
}

RunStats collect_action_stats(std::span<const Action> actions, std::span<const double> posterior_true, Action a_star,
                              double eps, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw std::invalid_argument("collect_stats: tail_fraction must lie in (0,1]");
    }
    RunStats s;
    const std::size_t n = actions.size();
    if (n == 0) return s;
    const std::size_t tail0 = tail_start(n, tail_fraction);

    std::size_t hits = 0;
    std::size_t tail_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (actions[i] == a_star) {
            ++hits;
            if (i >= tail0) ++tail_hits;
        }
    }
    s.freq_optimal = static_cast<double>(hits) / static_cast<double>(n);
    s.freq_optimal_tail = static_cast<double>(tail_hits) / static_cast<double>(n - tail0);

    // Runs: a run is complete when both its start and its end are switches.
    std::size_t run_start = 0;
    bool run_left_bounded = false;
    for (std::size_t i = 1; i <= n; ++i) {
        const bool boundary = i == n || actions[i] != actions[i - 1];
        if (i < n) {
            if (actions[i - 1] == 0 && actions[i] == 0) ++s.S0;
            if (actions[i - 1] == 1 && actions[i] == 1) ++s.S1;
            if (actions[i - 1] == 0 && actions[i] == 1) ++s.n_switch_01;
            if (actions[i - 1] == 1 && actions[i] == 0) ++s.n_switch_10;
        }
        if (!boundary) continue;
        const std::size_t len = i - run_start;
        const Action a = actions[run_start];
        if (run_left_bounded && i < n && (a == 0 || a == 1)) {
            (a == 0 ? s.tau0_samples : s.tau1_samples).push_back(len);
        } else {
            ++s.censored_runs;
        }
        run_start = i;
        run_left_bounded = true;
    }

    if (!posterior_true.empty()) {
        const auto [mn, mx] = std::minmax_element(posterior_true.begin(), posterior_true.end());
        s.min_posterior_true = *mn;
        s.max_posterior_true = *mx;
        s.final_posterior_true = posterior_true.back();
        const std::size_t p0 = tail_start(posterior_true.size(), tail_fraction);
        s.event_eps_hit = std::all_of(posterior_true.begin() + static_cast<long>(p0), posterior_true.end(),
                                      [eps](double p) { return p > 1.0 - eps; });
    }
    return s;
}

RunStats collect_stats(const Trajectory& traj, const Instance& inst, double eps, double tail_fraction) {
    RunStats s = collect_action_stats(traj.actions, traj.posterior_true, inst.optimal_action(), eps, tail_fraction);
    s.seed = traj.seed;
    return s;
}

SampleSummary summarize_samples(const std::vector<const std::vector<std::size_t>*>& groups) {
    SampleSummary out;
    double sum = 0.0;
    for (const auto* g : groups) {
        for (std::size_t x : *g) {
            ++out.count;
            sum += static_cast<double>(x);
            ++out.histogram[x];
        }
    }
    if (out.count == 0) {
        out.mean = std::nan("");
        out.variance = std::nan("");
        return out;
    }
    out.mean = sum / static_cast<double>(out.count);
    double ss = 0.0;
    for (const auto& [value, cnt] : out.histogram) {
        const double d = static_cast<double>(value) - out.mean;
        ss += static_cast<double>(cnt) * d * d;
    }
    out.variance = out.count > 1 ? ss / static_cast<double>(out.count - 1) : 0.0;
    return out;
}

std::pair<double, double> mean_stderr(std::span<const double> xs) {
    if (xs.empty()) return {std::nan(""), std::nan("")};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double m = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(xs.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(xs.size()))};
}

EnsembleSummary monte_carlo(const Instance& inst, const AgentPolicy& policy, const MonteCarloOptions& options) {
    if (options.n_runs == 0) throw std::invalid_argument("monte_carlo: n_runs must be at least 1");
    EnsembleSummary out;
    out.n_runs = options.n_runs;
    out.horizon = options.horizon;
    out.base_seed = options.base_seed;
    out.runs.resize(options.n_runs);

    parallel_for_index(options.n_runs, resolve_threads(options.threads), [&](std::size_t i) {
        const auto traj = run_trajectory(inst, policy, options.horizon, options.base_seed + i, {.llr_stride = 0});
        out.runs[i] = collect_stats(traj, inst, options.eps, options.tail_fraction);
    });

    std::vector<double> freq;
    std::vector<double> freq_tail;
    std::vector<const std::vector<std::size_t>*> t0;
    std::vector<const std::vector<std::size_t>*> t1;
    double switches = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;
    double hit = 0.0;
    double mn = 0.0;
    double mx = 0.0;
    double fin = 0.0;
    for (const auto& r : out.runs) {
        freq.push_back(r.freq_optimal);
        freq_tail.push_back(r.freq_optimal_tail);
        t0.push_back(&r.tau0_samples);
        t1.push_back(&r.tau1_samples);
        switches += static_cast<double>(r.n_switch_01 + r.n_switch_10);
        s0 += static_cast<double>(r.S0);
        s1 += static_cast<double>(r.S1);
        hit += r.event_eps_hit ? 1.0 : 0.0;
        mn += r.min_posterior_true;
        mx += r.max_posterior_true;
        fin += r.final_posterior_true;
    }
    const auto n = static_cast<double>(options.n_runs);
    std::tie(out.mean_freq_optimal, out.stderr_freq_optimal) = mean_stderr(freq);
    std::tie(out.mean_freq_optimal_tail, out.stderr_freq_optimal_tail) = mean_stderr(freq_tail);
    out.mean_switches = switches / n;
    out.mean_S0 = s0 / n;
    out.mean_S1 = s1 / n;
    out.tau0 = summarize_samples(t0);
    out.tau1 = summarize_samples(t1);
    out.frac_event_eps_hit = hit / n;
    out.mean_min_posterior_true = mn / n;
    out.mean_max_posterior_true = mx / n;
    out.mean_final_posterior_true = fin / n;
    return out;
}

}  // namespace laglearn
