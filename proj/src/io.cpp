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

#include "laglearn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "laglearn/instances.hpp"

namespace laglearn {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("field '" + field + "': " + what);
}

const Json& require(const Json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(where + "." + key, "missing");
    return *it;
}

double as_double(const Json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

long as_int(const Json& j, const std::string& field) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(field, "expected an integer");
    return j.get<long>();
}

std::vector<double> as_doubles(const Json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

double opt_double(const Json& j, const std::string& key, double fallback, const std::string& where) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : as_double(*it, where + "." + key);
}

long opt_int(const Json& j, const std::string& key, long fallback, const std::string& where) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : as_int(*it, where + "." + key);
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) fail(where + "." + key, "unknown field");
    }
}

Json lag_to_json(const TrueLagSpec& lag) {
    if (const auto* p = std::get_if<PointLag>(&lag)) return Json{{"point", p->lag}};
    return Json{{"mixture", std::get<MixtureLag>(lag).weights}};
}

Json lag_to_json(const AgentLagModel& lag) {
    if (const auto* p = std::get_if<PointLag>(&lag)) return Json{{"point", p->lag}};
    if (const auto* m = std::get_if<MixtureLag>(&lag)) return Json{{"mixture", m->weights}};
    const auto& u = std::get<UncertainLag>(lag);
    return Json{{"uncertain", {{"support", u.support}, {"prior", u.prior}}}};
}

AgentLagModel agent_lag_from_json(const Json& j, const std::string& where) {
    if (!j.is_object() || j.size() != 1) fail(where, "expected {\"point\": k}, {\"mixture\": [...]} or {\"uncertain\": {...}}");
    if (j.contains("point")) return PointLag{static_cast<int>(as_int(j["point"], where + ".point"))};
    if (j.contains("mixture")) return MixtureLag{as_doubles(j["mixture"], where + ".mixture")};
    if (j.contains("uncertain")) {
        const auto& u = j["uncertain"];
        const auto& sup = require(u, "support", where + ".uncertain");
        if (!sup.is_array()) fail(where + ".uncertain.support", "expected an array of integers");
        UncertainLag out;
        for (std::size_t i = 0; i < sup.size(); ++i) {
            out.support.push_back(static_cast<int>(as_int(sup[i], where + ".uncertain.support[" + std::to_string(i) + "]")));
        }
        out.prior = as_doubles(require(u, "prior", where + ".uncertain"), where + ".uncertain.prior");
        return out;
    }
    fail(where, "unknown lag kind");
}

TrueLagSpec true_lag_from_json(const Json& j, const std::string& where) {
    const AgentLagModel lag = agent_lag_from_json(j, where);
    if (const auto* p = std::get_if<PointLag>(&lag)) return *p;
    if (const auto* m = std::get_if<MixtureLag>(&lag)) return *m;
    fail(where, "the true lag cannot be uncertain");
}

}  // namespace

Json instance_to_json(const Instance& inst) {
    Json j;
    Json states = Json::array();
    for (const auto& s : inst.states) states.push_back(s.rows());
    j["states"] = states;
    j["prior"] = inst.prior;
    j["true_state_index"] = inst.true_state_index;
    j["payoff"] = inst.payoff;
    j["discount"] = inst.discount;
    j["true_lag"] = lag_to_json(inst.true_lag);
    j["agent_lag"] = lag_to_json(inst.agent_lag);
    j["pre_history"] = inst.pre_history;
    if (!inst.joint_prior.empty()) j["joint_prior"] = inst.joint_prior;
    return j;
}

Instance instance_from_json(const Json& j) {
    const std::string w = "instance";
    if (!j.is_object()) fail(w, "expected an object");
    reject_unknown(j, {"states", "prior", "true_state_index", "payoff", "discount", "true_lag", "agent_lag",
                       "pre_history", "joint_prior"},
                   w);
    Instance inst;
    const auto& states = require(j, "states", w);
    if (!states.is_array() || states.empty()) fail(w + ".states", "expected a non-empty array of matrices");
    for (std::size_t s = 0; s < states.size(); ++s) {
        const std::string f = w + ".states[" + std::to_string(s) + "]";
        if (!states[s].is_array()) fail(f, "expected an array of rows");
        std::vector<std::vector<double>> rows;
        for (std::size_t a = 0; a < states[s].size(); ++a) rows.push_back(as_doubles(states[s][a], f + "[" + std::to_string(a) + "]"));
        try {
            inst.states.emplace_back(std::move(rows));
        } catch (const std::invalid_argument& e) {
            fail(f, e.what());
        }
    }
    inst.prior = as_doubles(require(j, "prior", w), w + ".prior");
    const long tsi = as_int(require(j, "true_state_index", w), w + ".true_state_index");
    if (tsi < 0) fail(w + ".true_state_index", "must be non-negative");
    inst.true_state_index = static_cast<std::size_t>(tsi);
    inst.payoff = as_doubles(require(j, "payoff", w), w + ".payoff");
    inst.discount = opt_double(j, "discount", 0.0, w);
    if (j.contains("true_lag")) inst.true_lag = true_lag_from_json(j["true_lag"], w + ".true_lag");
    if (j.contains("agent_lag")) inst.agent_lag = agent_lag_from_json(j["agent_lag"], w + ".agent_lag");
    if (j.contains("pre_history")) {
        const auto& ph = j["pre_history"];
        if (!ph.is_array()) fail(w + ".pre_history", "expected an array of action indices");
        for (std::size_t i = 0; i < ph.size(); ++i) {
            inst.pre_history.push_back(static_cast<Action>(as_int(ph[i], w + ".pre_history[" + std::to_string(i) + "]")));
        }
    }
    if (j.contains("joint_prior")) inst.joint_prior = as_doubles(j["joint_prior"], w + ".joint_prior");
    try {
        inst.validate();
    } catch (const std::invalid_argument& e) {
        fail(w, e.what());
    }
    return inst;
}

bool is_builder_spec(const Json& j) { return j.is_object() && j.contains("builder"); }

std::vector<std::string> builder_parameters(std::string_view builder) {
    if (builder == "fig1") return {"eps", "p_star", "k_star", "k_prime"};
    if (builder == "construction") return {"zeta", "zeta_prime", "k_star", "k_prime"};
    if (builder == "symmetric") return {"r", "k_star", "prior_f1", "state"};
    throw ConfigError("field 'builder': unknown builder '" + std::string(builder) + "'");
}

Instance instance_from_builder(const Json& j) {
    const std::string w = "builder";
    const auto& name_j = require(j, "builder", "instance");
    if (!name_j.is_string()) fail(w, "expected a string");
    const std::string name = name_j.get<std::string>();
    const auto params = builder_parameters(name);
    std::set<std::string> allowed(params.begin(), params.end());
    allowed.insert("builder");
    reject_unknown(j, allowed, name);
    try {
        if (name == "fig1") {
            Fig1Options o;
            o.p_star = opt_double(j, "p_star", o.p_star, name);
            o.k_star = static_cast<int>(opt_int(j, "k_star", o.k_star, name));
            o.k_prime = static_cast<int>(opt_int(j, "k_prime", o.k_prime, name));
            return build_fig1(as_double(require(j, "eps", name), name + ".eps"), o);
        }
        if (name == "construction") {
            ConstructionOptions o;
            o.k_star = static_cast<int>(opt_int(j, "k_star", o.k_star, name));
            o.k_prime = static_cast<int>(opt_int(j, "k_prime", o.k_prime, name));
            return build_construction(as_double(require(j, "zeta", name), name + ".zeta"),
                                      as_double(require(j, "zeta_prime", name), name + ".zeta_prime"), o);
        }
        SymmetricGameOptions o;
        o.k_star = static_cast<int>(opt_int(j, "k_star", o.k_star, name));
        o.prior_f1 = opt_double(j, "prior_f1", o.prior_f1, name);
        o.state = static_cast<std::size_t>(opt_int(j, "state", static_cast<long>(o.state), name));
        return build_symmetric_game(as_double(require(j, "r", name), name + ".r"), o);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        fail(name, e.what());
    }
}

Instance resolve_instance(const Json& j) { return is_builder_spec(j) ? instance_from_builder(j) : instance_from_json(j); }

Json policy_to_json(const AgentPolicy& policy) {
    if (std::holds_alternative<Myopic>(policy)) return Json{{"type", "myopic"}};
    if (const auto* t = std::get_if<ThresholdLLR>(&policy)) {
        return Json{{"type", "threshold"}, {"l_star", t->l_star}, {"prefer_low", t->prefer_low}, {"num", t->num}, {"den", t->den}};
    }
    const auto& g = std::get<GridValueIteration>(policy);
    return Json{{"type", "grid"}, {"grid_size", g.grid_size}, {"discount", g.discount}, {"convergence_tol", g.convergence_tol}};
}

AgentPolicy policy_from_json(const Json& j) {
    const std::string w = "policy";
    const auto& type_j = require(j, "type", w);
    if (!type_j.is_string()) fail(w + ".type", "expected a string");
    const std::string type = type_j.get<std::string>();
    AgentPolicy out;
    if (type == "myopic") {
        reject_unknown(j, {"type"}, w);
        out = Myopic{};
    } else if (type == "threshold") {
        reject_unknown(j, {"type", "l_star", "prefer_low", "num", "den"}, w);
        ThresholdLLR t;
        t.l_star = as_double(require(j, "l_star", w), w + ".l_star");
        t.prefer_low = static_cast<Action>(opt_int(j, "prefer_low", t.prefer_low, w));
        t.num = static_cast<std::size_t>(opt_int(j, "num", static_cast<long>(t.num), w));
        t.den = static_cast<std::size_t>(opt_int(j, "den", static_cast<long>(t.den), w));
        out = t;
    } else if (type == "grid") {
        reject_unknown(j, {"type", "grid_size", "discount", "convergence_tol"}, w);
        GridValueIteration g;
        g.grid_size = static_cast<std::size_t>(opt_int(j, "grid_size", static_cast<long>(g.grid_size), w));
        g.discount = opt_double(j, "discount", g.discount, w);
        g.convergence_tol = opt_double(j, "convergence_tol", g.convergence_tol, w);
        out = g;
    } else {
        fail(w + ".type", "unknown policy '" + type + "'");
    }
    try {
        validate_policy(out);
    } catch (const std::invalid_argument& e) {
        fail(w, e.what());
    }
    return out;
}

Json strategy_to_json(const PrincipalStrategy& s) {
    using Kind = PrincipalStrategy::Kind;
    switch (s.kind) {
        case Kind::AlwaysPropose: return Json{{"name", "always"}};
        case Kind::StatusQuo: return Json{{"name", "status_quo"}};
        case Kind::Mirror: return Json{{"name", "mirror"}, {"k_star", s.k_star}};
        case Kind::Block: return Json{{"name", "block"}, {"t1", s.t1}, {"t2", s.t2}};
        case Kind::ThresholdComposite:
            return Json{{"name", "threshold_composite"},
                        {"l_eps_star", s.l_eps_star},
                        {"trigger", s.trigger},
                        {"pre", strategy_to_json(s.children[0])},
                        {"post", strategy_to_json(s.children[1])}};
        case Kind::LearningWrapper:
            return Json{{"name", "learning_wrapper"},
                        {"tau", s.tau},
                        {"eps", s.eps},
                        {"strat0", strategy_to_json(s.children[0])},
                        {"strat1", strategy_to_json(s.children[1])}};
    }
    return {};
}

PrincipalStrategy strategy_from_json(const Json& j, const Instance& game) {
    const std::string w = "strategy";
    const auto& name_j = require(j, "name", w);
    if (!name_j.is_string()) fail(w + ".name", "expected a string");
    const std::string name = name_j.get<std::string>();
    const int k = std::max(1, max_lag(game.true_lag));
    try {
        if (name == "always") {
            reject_unknown(j, {"name"}, w);
            return PrincipalStrategy::always_propose();
        }
        if (name == "status_quo") {
            reject_unknown(j, {"name"}, w);
            return PrincipalStrategy::status_quo();
        }
        if (name == "mirror") {
            reject_unknown(j, {"name", "k_star"}, w);
            return PrincipalStrategy::mirror(static_cast<int>(opt_int(j, "k_star", k, w)));
        }
        if (name == "block") {
            reject_unknown(j, {"name", "t1", "t2"}, w);
            return PrincipalStrategy::block(static_cast<int>(as_int(require(j, "t1", w), w + ".t1")),
                                            static_cast<int>(as_int(require(j, "t2", w), w + ".t2")));
        }
        if (name == "threshold_composite") {
            reject_unknown(j, {"name", "l_eps_star", "trigger", "pre", "post"}, w);
            std::optional<double> trigger;
            if (j.contains("trigger")) trigger = as_double(j["trigger"], w + ".trigger");
            return PrincipalStrategy::threshold_composite(as_double(require(j, "l_eps_star", w), w + ".l_eps_star"),
                                                          strategy_from_json(require(j, "pre", w), game),
                                                          strategy_from_json(require(j, "post", w), game), trigger);
        }
        if (name == "learning_wrapper") {
            reject_unknown(j, {"name", "tau", "eps", "strat0", "strat1"}, w);
            const long tau = opt_int(j, "tau", 500, w);
            if (tau < 0) fail(w + ".tau", "must be non-negative");
            return PrincipalStrategy::learning_wrapper(static_cast<std::size_t>(tau), opt_double(j, "eps", 0.01, w),
                                                       strategy_from_json(require(j, "strat0", w), game),
                                                       strategy_from_json(require(j, "strat1", w), game));
        }
        if (name == "sigma_eps") {
            reject_unknown(j, {"name", "l_eps_star", "lambda_target", "eps"}, w);
            const LambdaResult lam = lambda_opt(game.states.at(0), game.states.at(1));
            return build_sigma_eps(game, opt_double(j, "l_eps_star", -1.0, w),
                                   as_double(require(j, "lambda_target", w), w + ".lambda_target"), lam,
                                   opt_double(j, "eps", 0.01, w));
        }
        if (name == "learn_then_propose") {
            reject_unknown(j, {"name", "level"}, w);
            return PrincipalStrategy::learn_then_propose(opt_double(j, "level", 1.0, w));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        fail(w, e.what());
    }
    fail(w + ".name", "unknown strategy '" + name + "'");
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const Json& config) {
    // nlohmann objects are std::map backed, so dump() is already key-sorted.
    const std::uint64_t h = fnv1a64(config.dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON syntax error: " + e.what());
    }
}

}  // namespace laglearn
