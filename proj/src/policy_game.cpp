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

#include "laglearn/policy_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "laglearn/parallel.hpp"
#include "laglearn/simulator.hpp"

namespace laglearn {

using Kind = PrincipalStrategy::Kind;

PrincipalStrategy PrincipalStrategy::always_propose() { return PrincipalStrategy{}; }

PrincipalStrategy PrincipalStrategy::status_quo() {
    PrincipalStrategy s;
    s.kind = Kind::StatusQuo;
    return s;
}

PrincipalStrategy PrincipalStrategy::mirror(int k_star) {
    PrincipalStrategy s;
    s.kind = Kind::Mirror;
    s.k_star = k_star;
    s.validate();
    return s;
}

PrincipalStrategy PrincipalStrategy::block(int t1, int t2) {
    PrincipalStrategy s;
    s.kind = Kind::Block;
    s.t1 = t1;
    s.t2 = t2;
    s.validate();
    return s;
}

PrincipalStrategy PrincipalStrategy::threshold_composite(double l_eps_star, PrincipalStrategy pre,
                                                         PrincipalStrategy post, std::optional<double> trigger) {
    PrincipalStrategy s;
    s.kind = Kind::ThresholdComposite;
    s.l_eps_star = l_eps_star;
    s.trigger = trigger.value_or(std::abs(l_eps_star));
    s.children = {std::move(pre), std::move(post)};
    s.validate();
    return s;
}

PrincipalStrategy PrincipalStrategy::learning_wrapper(std::size_t tau, double eps, PrincipalStrategy strat0,
                                                      PrincipalStrategy strat1) {
    PrincipalStrategy s;
    s.kind = Kind::LearningWrapper;
    s.tau = tau;
    s.eps = eps;
    s.children = {std::move(strat0), std::move(strat1)};
    s.validate();
    return s;
}

PrincipalStrategy PrincipalStrategy::learn_then_propose(double level) {
    if (!(level > 0.0)) throw std::invalid_argument("learn_then_propose: level must be positive");
    return threshold_composite(-level, status_quo(), always_propose(), level);
}

void PrincipalStrategy::validate() const {
    switch (kind) {
        case Kind::AlwaysPropose:
        case Kind::StatusQuo:
            return;
        case Kind::Mirror:
            if (k_star < 1) throw std::invalid_argument("Mirror: k_star must be at least 1");
            return;
        case Kind::Block:
            if (t1 < 2 || t1 % 2 != 0) throw std::invalid_argument("Block: T1 must be a positive even integer");
            if (t2 < 1) throw std::invalid_argument("Block: T2 must be at least 1");
            return;
        case Kind::ThresholdComposite:
            if (!(l_eps_star < 0.0)) throw std::invalid_argument("ThresholdComposite: l_eps_star must be negative");
            if (!std::isfinite(trigger)) throw std::invalid_argument("ThresholdComposite: trigger must be finite");
            break;
        case Kind::LearningWrapper:
            if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("LearningWrapper: eps must lie in (0,1)");
            break;
    }
    if (children.size() != 2) throw std::invalid_argument("composite strategy needs exactly two components");
    for (const auto& c : children) c.validate();
}

std::string PrincipalStrategy::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::AlwaysPropose: os << "AlwaysPropose"; break;
        case Kind::StatusQuo: os << "StatusQuo"; break;
        case Kind::Mirror: os << "Mirror(" << k_star << ")"; break;
        case Kind::Block: os << "Block(" << t1 << "," << t2 << ")"; break;
        case Kind::ThresholdComposite:
            os << "ThresholdComposite(l_eps_star=" << l_eps_star << ",trigger=" << trigger << ","
               << children[0].describe() << "," << children[1].describe() << ")";
            break;
        case Kind::LearningWrapper:
            os << "LearningWrapper(tau=" << tau << ",eps=" << eps << "," << children[0].describe() << ","
               << children[1].describe() << ")";
            break;
    }
    return os.str();
}

double block_frequency(int t1, int t2) {
    PrincipalStrategy::block(t1, t2);
    return (t1 / 2.0 + t2) / static_cast<double>(t1 + t2);
}

Action block_proposal(int t1, int t2, long t) {
    const long period = t1 + t2;
    const long p = (t - 1) % period + 1;
    return (p % 2 == 0 && p <= t1) ? 0 : 1;
}

std::pair<int, int> smallest_block(double target, double width, int cap) {
    // Every block frequency exceeds 1/2 and is below 1.
    if (!(target > 0.5) || target - width >= 1.0) {
        throw std::runtime_error("smallest_block: no block frequency can fall in the requested interval");
    }
    for (int total = 3; total <= 2 * cap; ++total) {
        for (int t1 = 2; t1 < total && t1 <= cap; t1 += 2) {
            const int t2 = total - t1;
            if (t2 > cap) continue;
            const double f = (t1 / 2.0 + t2) / static_cast<double>(total);
            if (f > target - width && f < target) return {t1, t2};
        }
    }
    throw std::runtime_error("smallest_block: no (T1, T2) within the search cap");
}

namespace {

void check_binary_full_support(const OutcomeModel& f0, const OutcomeModel& f1) {
    if (f0.n_actions() != 2 || f1.n_actions() != 2) throw std::invalid_argument("lambda_opt: needs two actions");
    if (f0.n_outcomes() != f1.n_outcomes()) throw std::invalid_argument("lambda_opt: outcome spaces differ");
    for (const auto* f : {&f0, &f1}) {
        for (Action a = 0; a < 2; ++a) {
            for (double p : f->row(a)) {
                if (!(p > 0.0)) throw std::invalid_argument("lambda_opt: conditionals must have full support");
            }
        }
    }
}

LambdaResult finish_lambda(double m11, double msw) {
    LambdaResult r;
    r.m11 = m11;
    r.msw = msw;
    if (msw > 0.0 && m11 < 0.0) {
        r.lambda_hat = -msw / m11;
        r.lambda = (r.lambda_hat + 1.0) / (r.lambda_hat + 2.0);
    } else if ((msw > 0.0 && m11 >= 0.0) || (msw <= 0.0 && m11 > 0.0)) {
        r.lambda_hat_unbounded = true;
        r.lambda_hat = std::numeric_limits<double>::infinity();
        r.lambda = 1.0;
        r.degenerate = true;
    }
    return r;
}

}  // namespace

FiniteRV game_increment(const OutcomeModel& f0, const OutcomeModel& f1, Action a, Action a_prime) {
    return llr_increment_rv(f0, f1, f0, a, a_prime);
}

LambdaResult lambda_opt(const OutcomeModel& f0, const OutcomeModel& f1) {
    check_binary_full_support(f0, f1);
    const double m11 = game_increment(f0, f1, 1, 1).mean();
    const double msw = game_increment(f0, f1, 1, 0).mean() + game_increment(f0, f1, 0, 1).mean();
    return finish_lambda(m11, msw);
}

LambdaResult lambda_opt_numeric(const OutcomeModel& f0, const OutcomeModel& f1) {
    check_binary_full_support(f0, f1);
    auto expect = [&](Action a, Action ap) {
        double s = 0.0;
        for (std::size_t y = 0; y < f0.n_outcomes(); ++y) {
            const auto yy = static_cast<Outcome>(y);
            s += f0.prob(a, yy) * (std::log(f1.prob(ap, yy)) - std::log(f0.prob(ap, yy)));
        }
        return s;
    };
    const double m11 = expect(1, 1);
    const double msw = expect(1, 0) + expect(0, 1);
    auto feasible = [&](double x) { return x * m11 + msw > 0.0; };

    LambdaResult r;
    r.m11 = m11;
    r.msw = msw;
    constexpr double kHuge = 1e12;
    if (!feasible(0.0)) {
        if (feasible(kHuge)) {
            r.lambda_hat_unbounded = true;
            r.degenerate = true;
            r.lambda_hat = std::numeric_limits<double>::infinity();
            r.lambda = 1.0;
        }
        return r;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (feasible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > kHuge) {
            r.lambda_hat_unbounded = true;
            r.degenerate = true;
            r.lambda_hat = std::numeric_limits<double>::infinity();
            r.lambda = 1.0;
            return r;
        }
    }
    for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    r.lambda_hat = lo;
    r.lambda = (lo + 1.0) / (lo + 2.0);
    return r;
}

double theorem2_payoff(std::span<const double> pi0, double q_hat, double lambda) {
    if (pi0.size() != 2) throw std::invalid_argument("theorem2_payoff: prior must have two entries");
    if (pi0[0] < 0.0 || pi0[1] < 0.0 || std::abs(pi0[0] + pi0[1] - 1.0) > 1e-12) {
        throw std::invalid_argument("theorem2_payoff: prior must be a probability vector");
    }
    if (!(q_hat >= 0.0 && q_hat <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("theorem2_payoff: q and lambda must lie in [0,1]");
    }
    return pi0[1] + pi0[0] * q_hat * lambda;
}

namespace {

struct StrategyContext {
    long t = 0;
    const ActionHistory* history = nullptr;
    double agent_llr = 0.0;
    double principal_post_f1 = 0.5;
};

/// Mutable per-trajectory state of a strategy tree.
class StrategyRunner {
public:
    explicit StrategyRunner(const PrincipalStrategy& s) : s_(&s) {
        for (const auto& c : s.children) kids_.emplace_back(c);
    }

    Action propose(const StrategyContext& c) {
        switch (s_->kind) {
            case Kind::AlwaysPropose: return 1;
            case Kind::StatusQuo: return 0;
            case Kind::Mirror: return 1 - c.history->at(c.t - s_->k_star);
            case Kind::Block: return block_proposal(s_->t1, s_->t2, c.t);
            case Kind::ThresholdComposite:
                if (!switched_ && c.agent_llr > s_->trigger) switched_ = true;
                return kids_[switched_ ? 1 : 0].propose(c);
            case Kind::LearningWrapper:
                if (c.t <= static_cast<long>(s_->tau)) return kids_[0].propose(c);
                if (branch_ < 0) branch_ = c.principal_post_f1 > 1.0 - s_->eps ? 1 : 0;
                return kids_[static_cast<std::size_t>(branch_)].propose(c);
        }
        return 0;
    }

private:
    const PrincipalStrategy* s_;
    std::vector<StrategyRunner> kids_;
    bool switched_ = false;
    int branch_ = -1;
};

int max_mirror_lag(const PrincipalStrategy& s) {
    int m = s.kind == Kind::Mirror ? s.k_star : 0;
    for (const auto& c : s.children) m = std::max(m, max_mirror_lag(c));
    return m;
}

/// The strategy that runs forever once the composite layers settle.
const PrincipalStrategy& steady_strategy(const PrincipalStrategy& s, std::size_t measure_state) {
    switch (s.kind) {
        case Kind::ThresholdComposite: return steady_strategy(s.children[1], measure_state);
        case Kind::LearningWrapper: return steady_strategy(s.children[measure_state == 1 ? 1 : 0], measure_state);
        default: return s;
    }
}

std::size_t cycle_period(const PrincipalStrategy& s) {
    switch (s.kind) {
        case Kind::Mirror: return 2 * static_cast<std::size_t>(s.k_star);
        case Kind::Block: return static_cast<std::size_t>(s.t1 + s.t2);
        default: return 1;
    }
}

void check_game(const Instance& game) {
    if (game.states.size() != 2 || game.n_actions() != 2) {
        throw std::invalid_argument("game: needs two states {F0, F1} and two actions");
    }
    if (std::holds_alternative<UncertainLag>(game.agent_lag)) {
        throw std::invalid_argument("game: agent lag must be a point or mixture lag");
    }
}

AgentLagModel as_agent_lag(const TrueLagSpec& lag) {
    if (const auto* p = std::get_if<PointLag>(&lag)) return *p;
    return std::get<MixtureLag>(lag);
}

}  // namespace

CycleIncrement cycle_increment(const Instance& game, const PrincipalStrategy& strategy, std::size_t measure_state) {
    check_game(game);
    const auto* point = std::get_if<PointLag>(&game.true_lag);
    if (point == nullptr) throw std::invalid_argument("cycle_increment: needs a point true lag");
    if (measure_state > 1) throw std::invalid_argument("cycle_increment: state must be 0 or 1");
    const PrincipalStrategy& steady = steady_strategy(strategy, measure_state);
    const std::size_t period = cycle_period(steady);
    const int k = point->lag;
    const long warmup = static_cast<long>(period) * (k / static_cast<long>(period) + 3);

    ActionHistory h(game.pre_history);
    StrategyRunner runner(steady);
    CycleIncrement out;
    out.period = period;
    out.rv = FiniteRV::point(0.0);
    std::size_t proposals = 0;
    const auto& meas = game.states[measure_state];
    const auto& f0 = game.states[0];
    const auto& f1 = game.states[1];
    for (long t = 1; t <= warmup + static_cast<long>(period); ++t) {
        StrategyContext c{t, &h, 0.0, 0.5};
        const Action a = runner.propose(c);
        h.push(a);
        if (t <= warmup) continue;
        proposals += static_cast<std::size_t>(a);
        const Action cause = h.at(t - k);
        // log F1(y|a)/F0(y|a) with y ~ meas(.|cause)
        const FiniteRV x = llr_increment_rv(meas, f1, f0, cause, a);
        out.max_drop += std::max(0.0, -x.min());
        out.rv = convolve(out.rv, x);
    }
    out.proposal_frequency = static_cast<double>(proposals) / static_cast<double>(period);
    return out;
}

double escape_bound(const CycleIncrement& cycle, double llr, double boundary) {
    const double c = llr - boundary - cycle.max_drop;
    if (!(c > 0.0)) return 1.0;
    if (cycle.rv.min() >= 0.0) return 0.0;
    if (!(cycle.rv.mean() > 0.0)) return 1.0;
    const double r = wald_exponent(cycle.rv.negated());
    return std::exp(-r * c);
}

double acceptance_boundary(const Instance& game, const AgentPolicy& agent_policy) {
    check_game(game);
    const PolicyRunner runner(agent_policy, game);
    if (runner.is_myopic()) return myopic_indifference_llr(game, 1, 0);
    const auto& th = runner.threshold();
    return th.num == 1 ? th.l_star : -th.l_star;
}

GameResult simulate_game(const Instance& game, const PrincipalStrategy& strategy, const AgentPolicy& agent_policy,
                         GameMode mode, std::size_t state, const GameOptions& options) {
    check_game(game);
    strategy.validate();
    if (state > 1) throw std::invalid_argument("simulate_game: state must be 0 (F0) or 1 (F1)");
    if (options.horizon == 0) throw std::invalid_argument("simulate_game: horizon must be at least 1");
    if (options.n_runs == 0) throw std::invalid_argument("simulate_game: n_runs must be at least 1");
    if (!(options.tail_fraction > 0.0 && options.tail_fraction <= 1.0)) {
        throw std::invalid_argument("simulate_game: tail_fraction must lie in (0,1]");
    }
    if (max_mirror_lag(strategy) > static_cast<int>(game.pre_history.size())) {
        throw std::invalid_argument("simulate_game: pre-history too short for the Mirror lag");
    }

    Instance world = game;
    world.true_state_index = state;
    Instance principal_model = world;
    principal_model.agent_lag = as_agent_lag(world.true_lag);

    const PolicyRunner agent(agent_policy, world);
    const BeliefUpdater agent_updater(world);
    const BeliefUpdater principal_updater(principal_model);
    const bool track_principal = mode == GameMode::Symmetric;

    std::optional<CycleIncrement> cycle;
    double boundary = 0.0;
    try {
        cycle = cycle_increment(world, strategy, state);
        boundary = acceptance_boundary(world, agent_policy);
    } catch (const std::invalid_argument&) {
        cycle.reset();
    }

    const std::size_t horizon = options.horizon;
    const std::size_t tail0 = tail_start(horizon, options.tail_fraction);
    const double tail_len = static_cast<double>(horizon - tail0);

    GameResult out;
    out.runs.resize(options.n_runs);
    parallel_for_index(options.n_runs, resolve_threads(options.threads), [&](std::size_t i) {
        GameRun run;
        run.seed = options.base_seed + i;
        run.state = state;
        Rng rng(run.seed);
        ActionHistory h(world.pre_history, horizon);
        Belief belief = initial_belief(world);
        Belief pbelief = initial_belief(principal_model);
        StrategyRunner runner(strategy);

        std::size_t accepted = 0;
        std::size_t proposed = 0;
        bool all_pi1 = true;
        bool prev_pi1 = false;
        Action prev_a = world.pre_history.empty() ? 0 : world.pre_history.front();
        for (std::size_t step = 1; step <= horizon; ++step) {
            const auto t = static_cast<long>(step);
            const auto& lw = belief.log_weights();
            StrategyContext c;
            c.t = t;
            c.history = &h;
            c.agent_llr = lw[1] - lw[0];
            c.principal_post_f1 =
                track_principal ? std::exp(pbelief.log_weights()[1]) : (state == 1 ? 1.0 : 0.0);

            const Action choice = agent.act(belief);
            const bool pi1 = choice == 1;
            if (step > 1 && pi1 != prev_pi1) ++run.n_crossings;
            prev_pi1 = pi1;

            const Action proposal = runner.propose(c);
            const Action a = proposal == 1 ? choice : 0;
            h.push(a);
            if (step > 1 || !world.pre_history.empty()) {
                if (prev_a == 0 && a == 1) ++run.n_switch_01;
                if (prev_a == 1 && a == 0) ++run.n_switch_10;
            }
            prev_a = a;
            if (step - 1 >= tail0) {
                accepted += static_cast<std::size_t>(a);
                proposed += static_cast<std::size_t>(proposal);
                all_pi1 = all_pi1 && pi1;
            }
            const Outcome y = sample_outcome(world, h, t, rng);
            agent_updater.update(belief, h, t, y);
            if (track_principal) principal_updater.update(pbelief, h, t, y);
        }
        run.payoff_freq = static_cast<double>(accepted) / tail_len;
        run.proposal_freq_tail = static_cast<double>(proposed) / tail_len;
        run.estar_hit = all_pi1;
        run.terminal_llr = belief.log_weights()[1] - belief.log_weights()[0];
        if (cycle) run.escape_bound = escape_bound(*cycle, run.terminal_llr, boundary);
        run.certified = run.estar_hit && run.escape_bound < options.absorb_margin;
        out.runs[i] = run;
    });

    std::vector<double> pay;
    pay.reserve(out.runs.size());
    double estar = 0.0;
    double cert = 0.0;
    double cross = 0.0;
    double prop = 0.0;
    for (const auto& r : out.runs) {
        pay.push_back(r.payoff_freq);
        estar += r.estar_hit ? 1.0 : 0.0;
        cert += r.certified ? 1.0 : 0.0;
        cross += static_cast<double>(r.n_crossings);
        prop += r.proposal_freq_tail;
    }
    const auto n = static_cast<double>(out.runs.size());
    std::tie(out.payoff_freq, out.payoff_stderr) = mean_stderr(pay);
    out.frac_estar_hit = estar / n;
    out.frac_certified = cert / n;
    out.mean_crossings = cross / n;
    out.mean_proposal_freq_tail = prop / n;
    if (cycle) out.lambda_achieved = cycle->proposal_frequency;
    out.per_state.push_back({state, 1.0, out.runs.size(), out.payoff_freq, out.payoff_stderr});
    return out;
}

GameResult simulate_game_prior_weighted(const Instance& game, const PrincipalStrategy& strategy,
                                        const AgentPolicy& agent_policy, GameMode mode, const GameOptions& options) {
    check_game(game);
    GameResult out;
    double var = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
        GameResult part = simulate_game(game, strategy, agent_policy, mode, s, options);
        const double w = game.prior[s];
        out.payoff_freq += w * part.payoff_freq;
        var += w * w * part.payoff_stderr * part.payoff_stderr;
        out.frac_estar_hit += w * part.frac_estar_hit;
        out.frac_certified += w * part.frac_certified;
        out.mean_crossings += w * part.mean_crossings;
        out.mean_proposal_freq_tail += w * part.mean_proposal_freq_tail;
        // The F0 branch carries the non-trivial steady frequency.
        if (s == 0) out.lambda_achieved = part.lambda_achieved;
        StatePayoff sp = part.per_state.front();
        sp.weight = w;
        out.per_state.push_back(sp);
        for (auto& r : part.runs) out.runs.push_back(r);
    }
    out.payoff_stderr = std::sqrt(var);
    return out;
}

QStarEstimate estimate_qstar(const Instance& game, const std::vector<PrincipalStrategy>& candidates,
                             const AgentPolicy& agent_policy, const GameOptions& options) {
    if (candidates.empty()) throw std::invalid_argument("estimate_qstar: candidate list is empty");
    QStarEstimate out;
    out.reliable = options.horizon >= 10;
    for (const auto& cand : candidates) {
        const GameResult res = simulate_game(game, cand, agent_policy, GameMode::Auxiliary, 0, options);
        CandidateEstimate ce;
        ce.strategy = cand;
        for (const auto& r : res.runs) {
            ce.n_estar += r.estar_hit ? 1 : 0;
            ce.n_certified += r.certified ? 1 : 0;
        }
        const auto n = static_cast<double>(res.runs.size());
        ce.q = static_cast<double>(ce.n_certified) / n;
        ce.std_error = std::sqrt(ce.q * (1.0 - ce.q) / n);
        out.candidates.push_back(ce);
    }
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        if (out.candidates[i].q > out.candidates[out.best].q) out.best = i;
    }
    out.q_hat = out.candidates[out.best].q;
    return out;
}

std::vector<PrincipalStrategy> default_candidates(const Instance& game, const LambdaResult& lambda) {
    check_game(game);
    const int k = std::max(1, max_lag(game.true_lag));
    std::vector<PrincipalStrategy> out = {
        PrincipalStrategy::mirror(k),
        PrincipalStrategy::always_propose(),
        PrincipalStrategy::block(2, 1),
        PrincipalStrategy::block(4, 1),
        PrincipalStrategy::block(2, 3),
    };
    for (double target : {0.6, 0.7}) {
        if (target < lambda.lambda) out.push_back(build_sigma_eps(game, -1.0, target, lambda));
    }
    return out;
}

PrincipalStrategy build_sigma_eps(const Instance& game, double l_eps_star, double lambda_target,
                                  const LambdaResult& lambda, double eps) {
    check_game(game);
    if (!(l_eps_star < 0.0)) throw std::invalid_argument("build_sigma_eps: l_eps_star must be negative");
    if (!(lambda_target > 0.5 && lambda_target < lambda.lambda)) {
        throw std::invalid_argument("build_sigma_eps: lambda_target must lie in (1/2, lambda)");
    }
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("build_sigma_eps: eps must lie in (0,1)");
    const auto [t1, t2] = smallest_block(lambda_target);
    const PrincipalStrategy post = PrincipalStrategy::block(t1, t2);
    const CycleIncrement cyc = cycle_increment(game, post, 0);
    if (!(cyc.rv.mean() > 0.0)) throw std::runtime_error("build_sigma_eps: block cycle has no upward drift");
    const double eta = cyc.rv.min() < 0.0 ? std::log(1.0 / eps) / wald_exponent(cyc.rv.negated()) : 0.0;
    const double h_bar = cyc.max_drop;
    const int k = std::max(1, max_lag(game.true_lag));
    return PrincipalStrategy::threshold_composite(l_eps_star, PrincipalStrategy::mirror(k), post,
                                                  std::abs(l_eps_star) + eta + h_bar);
}

}  // namespace laglearn
