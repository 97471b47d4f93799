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

#include "laglearn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laglearn/bounds.hpp"

namespace laglearn {

namespace {

// Wald escape probability used to pick the grid half-width.
constexpr double kGridEscapeProb = 1e-6;
constexpr std::size_t kMaxSweeps = 1'000'000;

Action choose_with_ties(std::span<const double> u) {
    double best = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (double x : u) {
        best = std::max(best, x);
        scale = std::max(scale, std::abs(x));
    }
    const double tol = kTieRelTol * scale;
    for (std::size_t a = 0; a < u.size(); ++a) {
        if (u[a] >= best - tol) return static_cast<Action>(a);
    }
    return 0;
}

Action threshold_action(const ThresholdLLR& th, double l) {
    const Action other = 1 - th.prefer_low;
    if (std::abs(l - th.l_star) <= kTieRelTol * std::max(1.0, std::abs(l))) return std::min(th.prefer_low, other);
    return l < th.l_star ? th.prefer_low : other;
}

}  // namespace

void validate_policy(const AgentPolicy& policy) {
    if (const auto* t = std::get_if<ThresholdLLR>(&policy)) {
        if (!std::isfinite(t->l_star)) throw std::invalid_argument("ThresholdLLR: l_star must be finite");
        if (t->prefer_low != 0 && t->prefer_low != 1) throw std::invalid_argument("ThresholdLLR: prefer_low must be 0 or 1");
        if (t->num == t->den) throw std::invalid_argument("ThresholdLLR: num and den must differ");
    }
    if (const auto* g = std::get_if<GridValueIteration>(&policy)) {
        if (g->grid_size < 100) throw std::invalid_argument("GridValueIteration: grid_size must be at least 100");
        if (!(g->convergence_tol > 0.0)) throw std::invalid_argument("GridValueIteration: convergence_tol must be positive");
        if (!(g->discount > 0.0 && g->discount < 1.0)) {
            throw std::invalid_argument("GridValueIteration: discount must lie in (0,1)");
        }
    }
}

Action myopic_best_response(const Belief& belief, const Instance& inst) {
    const auto marg = state_marginals(belief, inst);
    std::vector<double> u(inst.n_actions(), 0.0);
    for (std::size_t a = 0; a < u.size(); ++a) {
        for (std::size_t s = 0; s < marg.size(); ++s) {
            u[a] += marg[s] * inst.states[s].expected_payoff(static_cast<Action>(a), inst.payoff);
        }
    }
    return choose_with_ties(u);
}

double myopic_indifference_llr(const Instance& inst, std::size_t i, std::size_t j) {
    if (inst.n_actions() != 2) throw std::invalid_argument("myopic_indifference_llr: needs exactly two actions");
    if (i >= inst.states.size() || j >= inst.states.size() || i == j) {
        throw std::invalid_argument("myopic_indifference_llr: bad state indices");
    }
    const auto gap = [&](std::size_t s) {
        return inst.states[s].expected_payoff(0, inst.payoff) - inst.states[s].expected_payoff(1, inst.payoff);
    };
    const double di = gap(i);
    const double dj = gap(j);
    // p di + (1-p) dj = 0  =>  p/(1-p) = -dj/di
    if (!(di * dj < 0.0)) {
        throw std::invalid_argument("myopic_indifference_llr: the two states rank the actions identically");
    }
    return std::log(-dj / di);
}

ThresholdResult discounted_threshold(const Instance& inst, std::size_t i, std::size_t j,
                                     const GridValueIteration& policy) {
    validate_policy(policy);
    const double l_myopic = myopic_indifference_llr(inst, i, j);
    const auto& fi = inst.states[i];
    const auto& fj = inst.states[j];
    const std::size_t ny = inst.n_outcomes();
    const double delta = policy.discount;

    // Half-width: far enough that the Wald bound on drifting back to the
    // myopic cutoff is below kGridEscapeProb under either hypothesis.
    double r_min = std::numeric_limits<double>::infinity();
    double max_jump = 0.0;
    for (Action a = 0; a < 2; ++a) {
        const auto under_i = llr_increment_rv(fi, fi, fj, a, a);
        const auto under_j = llr_increment_rv(fj, fi, fj, a, a);
        max_jump = std::max({max_jump, std::abs(under_i.min()), std::abs(under_i.max())});
        if (under_i.mean() > 0.0 && under_i.min() < 0.0) r_min = std::min(r_min, wald_exponent(under_i.negated()));
        if (under_j.mean() < 0.0 && under_j.max() > 0.0) r_min = std::min(r_min, wald_exponent(under_j));
    }
    if (!std::isfinite(r_min)) throw std::invalid_argument("discounted_threshold: hypotheses are not distinguishable");
    const double bound = std::abs(l_myopic) + std::log(1.0 / kGridEscapeProb) / r_min + max_jump;

    const std::size_t n = policy.grid_size;
    const double h = 2.0 * bound / static_cast<double>(n - 1);
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = -bound + h * static_cast<double>(k);

    // jumps[a][y] and per-node predictive probabilities
    std::vector<double> jump(2 * ny);
    for (Action a = 0; a < 2; ++a) {
        for (std::size_t y = 0; y < ny; ++y) {
            const auto yo = static_cast<Outcome>(y);
            jump[static_cast<std::size_t>(a) * ny + y] = std::log(fi.prob(a, yo)) - std::log(fj.prob(a, yo));
        }
    }
    auto interp = [&](const std::vector<double>& v, double l) {
        if (l <= grid.front()) return v.front();
        if (l >= grid.back()) return v.back();
        const double pos = (l - grid.front()) / h;
        auto k = static_cast<std::size_t>(pos);
        if (k >= n - 1) k = n - 2;
        const double w = pos - static_cast<double>(k);
        return (1.0 - w) * v[k] + w * v[k + 1];
    };
    auto q_value = [&](const std::vector<double>& v, std::size_t k, Action a) {
        const double p = 1.0 / (1.0 + std::exp(-grid[k]));
        double q = 0.0;
        for (std::size_t y = 0; y < ny; ++y) {
            const auto yo = static_cast<Outcome>(y);
            const double py = p * fi.prob(a, yo) + (1.0 - p) * fj.prob(a, yo);
            q += py * (inst.payoff[y] + delta * interp(v, grid[k] + jump[static_cast<std::size_t>(a) * ny + y]));
        }
        return q;
    };

    ThresholdResult out;
    out.grid_bound = bound;
    out.cell_width = h;
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n);
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            next[k] = std::max(q_value(v, k, 0), q_value(v, k, 1));
            change = std::max(change, std::abs(next[k] - v[k]));
        }
        v.swap(next);
        out.sup_changes.push_back(change);
        out.sweeps = sweep + 1;
        if (change < policy.convergence_tol) break;
    }

    std::vector<double> diff(n);
    for (std::size_t k = 0; k < n; ++k) diff[k] = q_value(v, k, 0) - q_value(v, k, 1);
    out.low_action = diff.front() >= 0.0 ? 0 : 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (diff[k] == 0.0) {
            out.threshold = grid[k];
            return out;
        }
        if ((diff[k] > 0.0) != (diff[k + 1] > 0.0)) {
            out.threshold = grid[k] + h * diff[k] / (diff[k] - diff[k + 1]);
            return out;
        }
    }
    throw std::runtime_error("discounted_threshold: optimal action never switches on the grid");
}

PolicyRunner::PolicyRunner(const AgentPolicy& policy, const Instance& inst) : n_actions_(inst.n_actions()) {
    validate_policy(policy);
    const auto hyps = hypotheses(inst);
    hyp_state_.resize(hyps.size());
    for (std::size_t h = 0; h < hyps.size(); ++h) hyp_state_[h] = hyps[h].state;
    ev_.resize(inst.states.size() * n_actions_);
    for (std::size_t s = 0; s < inst.states.size(); ++s) {
        for (std::size_t a = 0; a < n_actions_; ++a) {
            ev_[s * n_actions_ + a] = inst.states[s].expected_payoff(static_cast<Action>(a), inst.payoff);
        }
    }
    if (const auto* t = std::get_if<ThresholdLLR>(&policy)) {
        if (t->num >= hyps.size() || t->den >= hyps.size()) throw std::invalid_argument("ThresholdLLR: hypothesis index out of range");
        myopic_ = false;
        threshold_ = *t;
    } else if (const auto* g = std::get_if<GridValueIteration>(&policy)) {
        if (hyps.size() != 2) throw std::invalid_argument("GridValueIteration: needs a two-hypothesis support");
        const auto res = discounted_threshold(inst, 0, 1, *g);
        myopic_ = false;
        threshold_ = ThresholdLLR{res.threshold, res.low_action, 0, 1};
    }
}

Action PolicyRunner::act(const Belief& belief) const {
    const auto& lw = belief.log_weights();
    if (!myopic_) return threshold_action(threshold_, lw[threshold_.num] - lw[threshold_.den]);
    double u[8] = {};
    std::vector<double> big;
    double* acc = u;
    if (n_actions_ > 8) {
        big.assign(n_actions_, 0.0);
        acc = big.data();
    }
    for (std::size_t h = 0; h < lw.size(); ++h) {
        const double w = std::exp(lw[h]);
        if (w == 0.0) continue;
        const double* row = ev_.data() + hyp_state_[h] * n_actions_;
        for (std::size_t a = 0; a < n_actions_; ++a) acc[a] += w * row[a];
    }
    return choose_with_ties({acc, n_actions_});
}

}  // namespace laglearn
