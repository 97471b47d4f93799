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

#include "laglearn/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace laglearn {

namespace {

constexpr double kProbSumTol = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_probability_vector(std::span<const double> p, const char* what) {
    if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty probability vector");
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw std::invalid_argument(std::string(what) + ": entry outside [0,1]");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kProbSumTol) {
        std::ostringstream os;
        os << what << ": entries sum to " << sum << ", expected 1";
        throw std::invalid_argument(os.str());
    }
}

void add_point_mass(std::vector<double>& alpha, const ActionHistory& history, long t, int lag, double weight) {
    const Action a = history.at(t - lag);
    if (a < 0 || static_cast<std::size_t>(a) >= alpha.size()) {
        throw std::invalid_argument("effective_mixture: action index out of range in history");
    }
    alpha[static_cast<std::size_t>(a)] += weight;
}

std::vector<double> mixture_from_weights(std::span<const double> weights, const ActionHistory& history, long t,
                                         std::size_t n_actions) {
    std::vector<double> alpha(n_actions, 0.0);
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] == 0.0) continue;
        add_point_mass(alpha, history, t, static_cast<int>(j), weights[j]);
    }
    return alpha;
}

std::vector<double> point_mixture(int lag, const ActionHistory& history, long t, std::size_t n_actions) {
    std::vector<double> alpha(n_actions, 0.0);
    add_point_mass(alpha, history, t, lag, 1.0);
    return alpha;
}

}  // namespace

OutcomeModel::OutcomeModel(std::vector<std::vector<double>> rows) {
    if (rows.empty()) throw std::invalid_argument("OutcomeModel: no actions");
    n_actions_ = rows.size();
    n_outcomes_ = rows.front().size();
    if (n_outcomes_ == 0) throw std::invalid_argument("OutcomeModel: no outcomes");
    probs_.reserve(n_actions_ * n_outcomes_);
    for (const auto& r : rows) {
        if (r.size() != n_outcomes_) throw std::invalid_argument("OutcomeModel: ragged rows");
        check_probability_vector(r, "OutcomeModel row");
        probs_.insert(probs_.end(), r.begin(), r.end());
    }
}

std::vector<std::vector<double>> OutcomeModel::rows() const {
    std::vector<std::vector<double>> out(n_actions_);
    for (std::size_t a = 0; a < n_actions_; ++a) {
        auto r = row(static_cast<Action>(a));
        out[a].assign(r.begin(), r.end());
    }
    return out;
}

double OutcomeModel::expected_payoff(Action a, std::span<const double> payoff) const {
    const auto r = row(a);
    double ev = 0.0;
    for (std::size_t y = 0; y < n_outcomes_; ++y) ev += payoff[y] * r[y];
    return ev;
}

int max_lag(const TrueLagSpec& lag) noexcept {
    if (const auto* p = std::get_if<PointLag>(&lag)) return p->lag;
    const auto& m = std::get<MixtureLag>(lag);
    return m.weights.empty() ? 0 : static_cast<int>(m.weights.size()) - 1;
}

int max_lag(const AgentLagModel& lag) noexcept {
    if (const auto* p = std::get_if<PointLag>(&lag)) return p->lag;
    if (const auto* u = std::get_if<UncertainLag>(&lag)) {
        return u->support.empty() ? 0 : *std::max_element(u->support.begin(), u->support.end());
    }
    const auto& m = std::get<MixtureLag>(lag);
    return m.weights.empty() ? 0 : static_cast<int>(m.weights.size()) - 1;
}

void validate_lag(const TrueLagSpec& lag) {
    if (const auto* p = std::get_if<PointLag>(&lag)) {
        if (p->lag < 0) throw std::invalid_argument("true_lag: point lag must be non-negative");
        return;
    }
    check_probability_vector(std::get<MixtureLag>(lag).weights, "true_lag mixture weights");
}

void validate_lag(const AgentLagModel& lag) {
    if (const auto* p = std::get_if<PointLag>(&lag)) {
        if (p->lag < 0) throw std::invalid_argument("agent_lag: point lag must be non-negative");
        return;
    }
    if (const auto* u = std::get_if<UncertainLag>(&lag)) {
        if (u->support.empty()) throw std::invalid_argument("agent_lag: uncertain lag support is empty");
        if (u->support.size() != u->prior.size()) {
            throw std::invalid_argument("agent_lag: uncertain lag support and prior differ in length");
        }
        for (int k : u->support) {
            if (k < 0) throw std::invalid_argument("agent_lag: negative lag in support");
        }
        check_probability_vector(u->prior, "agent_lag uncertain prior");
        return;
    }
    check_probability_vector(std::get<MixtureLag>(lag).weights, "agent_lag mixture weights");
}

ActionHistory::ActionHistory(std::vector<Action> pre_history, std::size_t reserve)
    : pre_(std::move(pre_history)) {
    actions_.reserve(reserve);
}

Action ActionHistory::at(long t) const {
    if (t >= 1) {
        if (t > static_cast<long>(actions_.size())) throw std::out_of_range("ActionHistory: period not yet played");
        return actions_[static_cast<std::size_t>(t - 1)];
    }
    const auto idx = static_cast<std::size_t>(-t);
    if (idx >= pre_.size()) throw std::out_of_range("ActionHistory: missing pre-history for period " + std::to_string(t));
    return pre_[idx];
}

int Instance::required_pre_history() const noexcept { return std::max(max_lag(true_lag), max_lag(agent_lag)); }

void Instance::validate() {
    if (states.empty()) throw std::invalid_argument("instance: no states");
    const std::size_t na = states.front().n_actions();
    const std::size_t ny = states.front().n_outcomes();
    if (na == 0 || ny == 0) throw std::invalid_argument("instance: empty outcome model");
    for (const auto& s : states) {
        if (s.n_actions() != na || s.n_outcomes() != ny) {
            throw std::invalid_argument("instance: states disagree on |A| or |Y|");
        }
    }
    if (prior.size() != states.size()) throw std::invalid_argument("instance: prior length differs from state count");
    check_probability_vector(prior, "instance prior");
    if (true_state_index >= states.size()) throw std::invalid_argument("instance: true_state_index out of range");
    if (payoff.size() != ny) throw std::invalid_argument("instance: payoff length differs from |Y|");
    for (double v : payoff) {
        if (!std::isfinite(v)) throw std::invalid_argument("instance: non-finite payoff");
    }
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("instance: discount must lie in [0,1)");
    validate_lag(true_lag);
    validate_lag(agent_lag);
    const int need = required_pre_history();
    if (pre_history.empty()) pre_history.assign(static_cast<std::size_t>(need), 0);
    if (static_cast<int>(pre_history.size()) < need) {
        throw std::invalid_argument("instance: pre_history shorter than the largest referenced lag (" +
                                    std::to_string(need) + ")");
    }
    for (Action a : pre_history) {
        if (a < 0 || static_cast<std::size_t>(a) >= na) throw std::invalid_argument("instance: pre_history action out of range");
    }
    if (!joint_prior.empty()) {
        const auto* u = std::get_if<UncertainLag>(&agent_lag);
        if (u == nullptr) throw std::invalid_argument("instance: joint_prior given without an uncertain agent lag");
        if (joint_prior.size() != states.size() * u->support.size()) {
            throw std::invalid_argument("instance: joint_prior must have |states| x |support| entries");
        }
        check_probability_vector(joint_prior, "instance joint_prior");
    }
}

Action Instance::optimal_action() const {
    const auto& f = true_state();
    Action best = 0;
    double best_v = f.expected_payoff(0, payoff);
    for (std::size_t a = 1; a < f.n_actions(); ++a) {
        const double v = f.expected_payoff(static_cast<Action>(a), payoff);
        if (v > best_v) {
            best_v = v;
            best = static_cast<Action>(a);
        }
    }
    return best;
}

std::vector<std::string> agent_optimality_warnings(const Instance& inst) {
    std::vector<std::string> out;
    if (inst.discount == 0.0) {
        const auto* p = std::get_if<PointLag>(&inst.agent_lag);
        if (p == nullptr || p->lag != 0) {
            out.emplace_back(
                "discount is 0 but the agent's lag model is not a zero point lag: a myopic agent is indifferent "
                "between all actions, so the myopic rule is only a behavioural convention here");
        }
    }
    const auto& f = inst.true_state();
    const double v0 = f.expected_payoff(inst.optimal_action(), inst.payoff);
    for (std::size_t a = 0; a < f.n_actions(); ++a) {
        if (static_cast<Action>(a) != inst.optimal_action() && f.expected_payoff(static_cast<Action>(a), inst.payoff) == v0) {
            out.emplace_back("optimal action under the true state is not unique");
            break;
        }
    }
    return out;
}

bool lag_correctly_specified(const Instance& inst) {
    // Normalise both sides to a weight vector over j = 0..k and compare.
    auto to_weights = [](auto const& lag) -> std::vector<std::vector<double>> {
        using T = std::decay_t<decltype(lag)>;
        std::vector<std::vector<double>> out;
        auto point = [](int k) {
            std::vector<double> w(static_cast<std::size_t>(k) + 1, 0.0);
            w.back() = 1.0;
            return w;
        };
        if constexpr (std::is_same_v<T, TrueLagSpec>) {
            if (const auto* p = std::get_if<PointLag>(&lag)) {
                out.push_back(point(p->lag));
            } else {
                out.push_back(std::get<MixtureLag>(lag).weights);
            }
        } else {
            if (const auto* p = std::get_if<PointLag>(&lag)) {
                out.push_back(point(p->lag));
            } else if (const auto* u = std::get_if<UncertainLag>(&lag)) {
                for (int k : u->support) out.push_back(point(k));
            } else {
                out.push_back(std::get<MixtureLag>(lag).weights);
            }
        }
        return out;
    };
    const auto truth = to_weights(inst.true_lag).front();
    for (auto w : to_weights(inst.agent_lag)) {
        auto t = truth;
        const std::size_t n = std::max(t.size(), w.size());
        t.resize(n, 0.0);
        w.resize(n, 0.0);
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) same = same && std::abs(t[i] - w[i]) <= kProbSumTol;
        if (same) return true;
    }
    return false;
}

std::vector<RegularityViolation> check_regular(const Instance& inst) {
    std::vector<RegularityViolation> out;
    const std::size_t ns = inst.states.size();
    const std::size_t na = inst.n_actions();
    const std::size_t ny = inst.n_outcomes();

    if (inst.true_state_index >= ns || inst.prior.size() != ns || !(inst.prior[inst.true_state_index] > 0.0)) {
        out.push_back({RegularityViolationKind::TrueStateAbsent, inst.true_state_index, 0, 0, 0,
                       "true state is not in the support of the prior"});
    }
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            for (std::size_t y = 0; y < ny; ++y) {
                if (inst.states[s].prob(static_cast<Action>(a), static_cast<Outcome>(y)) <= 0.0) {
                    std::ostringstream os;
                    os << "state " << s << " assigns zero probability to outcome " << y << " under action " << a;
                    out.push_back({RegularityViolationKind::ZeroEntry, s, s, static_cast<Action>(a),
                                   static_cast<Outcome>(y), os.str()});
                }
            }
        }
    }
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t o = s + 1; o < ns; ++o) {
            for (std::size_t a = 0; a < na; ++a) {
                const auto r1 = inst.states[s].row(static_cast<Action>(a));
                const auto r2 = inst.states[o].row(static_cast<Action>(a));
                bool same = true;
                for (std::size_t y = 0; y < ny && same; ++y) same = std::abs(r1[y] - r2[y]) <= kRowEqualityTol;
                if (same) {
                    std::ostringstream os;
                    os << "states " << s << " and " << o << " coincide under action " << a;
                    out.push_back({RegularityViolationKind::DuplicateRow, s, o, static_cast<Action>(a), 0, os.str()});
                }
            }
        }
    }
    return out;
}

std::vector<double> effective_mixture(const TrueLagSpec& lag, const ActionHistory& history, long t,
                                      std::size_t n_actions) {
    if (const auto* p = std::get_if<PointLag>(&lag)) return point_mixture(p->lag, history, t, n_actions);
    return mixture_from_weights(std::get<MixtureLag>(lag).weights, history, t, n_actions);
}

std::vector<double> effective_mixture(const AgentLagModel& lag, const ActionHistory& history, long t,
                                      std::size_t n_actions) {
    if (const auto* p = std::get_if<PointLag>(&lag)) return point_mixture(p->lag, history, t, n_actions);
    if (const auto* m = std::get_if<MixtureLag>(&lag)) return mixture_from_weights(m->weights, history, t, n_actions);
    throw std::invalid_argument("effective_mixture: an uncertain lag has no single mixture; use a hypothesis lag");
}

Outcome sample_outcome(const Instance& inst, const ActionHistory& history, long t, Rng& rng) {
    const auto& f = inst.true_state();
    if (const auto* p = std::get_if<PointLag>(&inst.true_lag)) {
        return static_cast<Outcome>(rng.categorical(f.row(history.at(t - p->lag))));
    }
    const auto alpha = effective_mixture(inst.true_lag, history, t, f.n_actions());
    std::vector<double> dist(f.n_outcomes(), 0.0);
    for (std::size_t a = 0; a < alpha.size(); ++a) {
        if (alpha[a] == 0.0) continue;
        const auto r = f.row(static_cast<Action>(a));
        for (std::size_t y = 0; y < dist.size(); ++y) dist[y] += alpha[a] * r[y];
    }
    return static_cast<Outcome>(rng.categorical(dist));
}

std::vector<Hypothesis> hypotheses(const Instance& inst) {
    std::vector<Hypothesis> out;
    if (const auto* u = std::get_if<UncertainLag>(&inst.agent_lag)) {
        for (std::size_t s = 0; s < inst.states.size(); ++s) {
            for (int k : u->support) out.push_back({s, k});
        }
    } else {
        for (std::size_t s = 0; s < inst.states.size(); ++s) out.push_back({s, std::nullopt});
    }
    return out;
}

Belief::Belief(std::vector<double> log_weights) : log_weights_(std::move(log_weights)) {}

void Belief::normalize() {
    double m = kNegInf;
    for (double x : log_weights_) m = std::max(m, x);
    if (m == kNegInf) throw std::domain_error("Belief: every hypothesis has zero weight");
    double s = 0.0;
    for (double& x : log_weights_) {
        if (x == kNegInf) continue;
        x -= m;
        s += std::exp(x);
    }
    const double ls = std::log(s);
    for (double& x : log_weights_) {
        if (x != kNegInf) x -= ls;
    }
}

std::vector<double> Belief::weights() const {
    std::vector<double> w(log_weights_.size());
    std::transform(log_weights_.begin(), log_weights_.end(), w.begin(), [](double x) { return std::exp(x); });
    return w;
}

Belief initial_belief(const Instance& inst) {
    const auto hyps = hypotheses(inst);
    std::vector<double> lw(hyps.size());
    const auto* u = std::get_if<UncertainLag>(&inst.agent_lag);
    for (std::size_t h = 0; h < hyps.size(); ++h) {
        double p = inst.prior[hyps[h].state];
        if (u != nullptr) {
            const std::size_t k_idx = h % u->support.size();
            p = inst.joint_prior.empty() ? p * u->prior[k_idx] : inst.joint_prior[h];
        }
        lw[h] = p > 0.0 ? std::log(p) : kNegInf;
    }
    Belief b(std::move(lw));
    b.normalize();
    return b;
}

std::vector<double> state_marginals(const Belief& belief, const Instance& inst) {
    const auto hyps = hypotheses(inst);
    std::vector<double> out(inst.states.size(), 0.0);
    for (std::size_t h = 0; h < hyps.size(); ++h) out[hyps[h].state] += std::exp(belief.log_weights()[h]);
    return out;
}

BeliefUpdater::BeliefUpdater(const Instance& inst)
    : states_(inst.states),
      agent_lag_(inst.agent_lag),
      n_actions_(inst.n_actions()),
      n_outcomes_(inst.n_outcomes()),
      hyps_(hypotheses(inst)) {
    log_probs_.resize(states_.size());
    for (std::size_t s = 0; s < states_.size(); ++s) {
        auto& table = log_probs_[s];
        table.resize(n_actions_ * n_outcomes_);
        for (std::size_t a = 0; a < n_actions_; ++a) {
            for (std::size_t y = 0; y < n_outcomes_; ++y) {
                const double p = states_[s].prob(static_cast<Action>(a), static_cast<Outcome>(y));
                table[a * n_outcomes_ + y] = p > 0.0 ? std::log(p) : kNegInf;
            }
        }
    }
}

double BeliefUpdater::log_likelihood(std::size_t h, const ActionHistory& history, long t, Outcome y) const {
    const auto& hyp = hyps_[h];
    const auto yi = static_cast<std::size_t>(y);
    if (hyp.lag) {
        const auto a = static_cast<std::size_t>(history.at(t - *hyp.lag));
        return log_probs_[hyp.state][a * n_outcomes_ + yi];
    }
    if (const auto* p = std::get_if<PointLag>(&agent_lag_)) {
        const auto a = static_cast<std::size_t>(history.at(t - p->lag));
        return log_probs_[hyp.state][a * n_outcomes_ + yi];
    }
    const auto alpha = effective_mixture(agent_lag_, history, t, n_actions_);
    double lik = 0.0;
    for (std::size_t a = 0; a < n_actions_; ++a) {
        lik += alpha[a] * states_[hyp.state].prob(static_cast<Action>(a), y);
    }
    return lik > 0.0 ? std::log(lik) : kNegInf;
}

void BeliefUpdater::update(Belief& belief, const ActionHistory& history, long t, Outcome observed) const {
    if (observed < 0 || static_cast<std::size_t>(observed) >= n_outcomes_) {
        throw std::invalid_argument("bayes_update: observed outcome out of range");
    }
    if (belief.size() != hyps_.size()) throw std::invalid_argument("bayes_update: belief size mismatch");
    auto& lw = belief.mutable_log_weights();
    for (std::size_t h = 0; h < hyps_.size(); ++h) {
        if (lw[h] == kNegInf) continue;
        lw[h] += log_likelihood(h, history, t, observed);
    }
    belief.normalize();
}

std::vector<double> BeliefUpdater::predictive(const ActionHistory& history, long t) const {
    std::vector<double> out(hyps_.size() * n_outcomes_);
    for (std::size_t h = 0; h < hyps_.size(); ++h) {
        for (std::size_t y = 0; y < n_outcomes_; ++y) {
            out[h * n_outcomes_ + y] = std::exp(log_likelihood(h, history, t, static_cast<Outcome>(y)));
        }
    }
    return out;
}

Belief bayes_update(Belief belief, const Instance& inst, const ActionHistory& history, long t, Outcome observed) {
    BeliefUpdater(inst).update(belief, history, t, observed);
    return belief;
}

}  // namespace laglearn
