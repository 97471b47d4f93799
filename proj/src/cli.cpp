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

#include "laglearn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "laglearn/bounds.hpp"
#include "laglearn/instances.hpp"
#include "laglearn/parallel.hpp"
#include "laglearn/policy_game.hpp"
#include "laglearn/rng.hpp"

namespace laglearn {

namespace {

struct GlobalFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> horizon;
    std::size_t threads = 0;
    std::optional<double> tail_fraction;
    std::optional<double> eps;
};

/// Resolved experiment settings; `config` is the canonical form that is hashed.
struct Settings {
    Json config;
    std::size_t horizon = 100'000;
    std::size_t runs = 200;
    std::uint64_t seed = 0;
    double eps = 0.01;
    double tail_fraction = 0.5;
};

Json load_config(const GlobalFlags& g, bool required) {
    if (g.config.empty()) {
        if (required) throw ConfigError("--config is required for this command");
        return Json{{"schema", 1}};
    }
    Json j = read_json_file(g.config);
    if (!j.is_object()) throw ConfigError(g.config + ": top level must be an object");
    if (!j.contains("schema")) throw ConfigError(g.config + ": field 'schema': missing");
    if (j["schema"] != 1) throw ConfigError(g.config + ": field 'schema': unsupported version (expected 1)");
    return j;
}

Settings resolve_settings(Json config, const GlobalFlags& g) {
    if (g.horizon) config["horizon"] = *g.horizon;
    if (g.runs) config["runs"] = *g.runs;
    if (g.seed) config["seed"] = *g.seed;
    if (g.eps) config["eps"] = *g.eps;
    if (g.tail_fraction) config["tail_fraction"] = *g.tail_fraction;
    Settings s;
    auto get_count = [&](const char* key, std::size_t fallback) {
        if (!config.contains(key)) return fallback;
        const auto& v = config[key];
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
            throw ConfigError(std::string("field '") + key + "': expected a non-negative integer");
        }
        return v.get<std::size_t>();
    };
    auto get_real = [&](const char* key, double fallback) {
        if (!config.contains(key)) return fallback;
        if (!config[key].is_number()) throw ConfigError(std::string("field '") + key + "': expected a number");
        return config[key].get<double>();
    };
    s.horizon = get_count("horizon", s.horizon);
    s.runs = get_count("runs", s.runs);
    s.seed = get_count("seed", 0);
    s.eps = get_real("eps", s.eps);
    s.tail_fraction = get_real("tail_fraction", s.tail_fraction);
    if (s.horizon == 0) throw ConfigError("field 'horizon': must be at least 1");
    if (s.runs == 0) throw ConfigError("field 'runs': must be at least 1");
    if (!(s.tail_fraction > 0.0 && s.tail_fraction <= 1.0)) throw ConfigError("field 'tail_fraction': must lie in (0,1]");
    if (!(s.eps > 0.0 && s.eps < 1.0)) throw ConfigError("field 'eps': must lie in (0,1)");
    config["horizon"] = s.horizon;
    config["runs"] = s.runs;
    config["seed"] = s.seed;
    config["eps"] = s.eps;
    config["tail_fraction"] = s.tail_fraction;
    s.config = std::move(config);
    return s;
}

AgentPolicy config_policy(const Json& config) {
    if (!config.contains("policy")) return Myopic{};
    return policy_from_json(config["policy"]);
}

const Json& config_instance(const Json& config) {
    if (!config.contains("instance")) throw ConfigError("field 'instance': missing");
    return config["instance"];
}

/// Writes to --out when given, else to `out`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot open output file '" + path + "'");
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

std::string summary_path(const std::string& out) {
    const auto dot = out.find_last_of('.');
    const auto slash = out.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? out.substr(0, dot) : out) + ".summary.json";
}

std::string fmt(double x) { return format_double(x); }

Json sample_summary_json(const SampleSummary& s) {
    Json hist = Json::array();
    for (const auto& [value, count] : s.histogram) hist.push_back({value, count});
    return Json{{"count", s.count},
                {"mean", std::isnan(s.mean) ? Json(nullptr) : Json(s.mean)},
                {"variance", std::isnan(s.variance) ? Json(nullptr) : Json(s.variance)},
                {"histogram", hist}};
}

Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

EnsembleSummary run_ensemble(const Instance& inst, const AgentPolicy& policy, const Settings& s, std::size_t threads) {
    MonteCarloOptions mc;
    mc.horizon = s.horizon;
    mc.n_runs = s.runs;
    mc.base_seed = s.seed;
    mc.eps = s.eps;
    mc.tail_fraction = s.tail_fraction;
    mc.threads = threads;
    return monte_carlo(inst, policy, mc);
}

int cmd_simulate(const GlobalFlags& g, const std::string& summary_flag, std::ostream& out) {
    Settings s = resolve_settings(load_config(g, true), g);
    const Instance inst = resolve_instance(config_instance(s.config));
    const AgentPolicy policy = config_policy(s.config);
    const std::string hash = config_hash(s.config);
    const EnsembleSummary ens = run_ensemble(inst, policy, s, g.threads);

    {
        Sink sink(g.out, out);
        auto& os = sink.stream();
        os << "# config_hash=" << hash << "\n";
        const auto& cols = run_csv_columns();
        for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
        os << "\n";
        for (const auto& r : ens.runs) os << run_csv_row(r) << "\n";
    }
    std::string spath = summary_flag;
    if (spath.empty() && !g.out.empty()) spath = summary_path(g.out);
    if (!spath.empty()) {
        Json j = ensemble_to_json(ens);
        j["config_hash"] = hash;
        j["config"] = s.config;
        std::ofstream f(spath, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open summary file '" + spath + "'");
        f << j.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const GlobalFlags& g, std::ostream& out) {
    Settings s = resolve_settings(load_config(g, true), g);
    const Json& base = config_instance(s.config);
    if (!is_builder_spec(base)) throw ConfigError("field 'instance': sweeps need a builder instance");
    const auto params = builder_parameters(base["builder"].get<std::string>());
    if (!s.config.contains("grid") || !s.config["grid"].is_array() || s.config["grid"].empty()) {
        throw ConfigError("field 'grid': expected a non-empty array of {\"param\", \"values\"}");
    }
    std::vector<std::string> names;
    std::vector<std::vector<Json>> values;
    for (std::size_t i = 0; i < s.config["grid"].size(); ++i) {
        const auto& axis = s.config["grid"][i];
        const std::string f = "grid[" + std::to_string(i) + "]";
        if (!axis.is_object() || !axis.contains("param") || !axis["param"].is_string()) {
            throw ConfigError("field '" + f + ".param': missing or not a string");
        }
        const std::string name = axis["param"].get<std::string>();
        if (std::find(params.begin(), params.end(), name) == params.end()) {
            throw ConfigError("field '" + f + ".param': unknown parameter '" + name + "'");
        }
        if (!axis.contains("values") || !axis["values"].is_array() || axis["values"].empty()) {
            throw ConfigError("field '" + f + ".values': expected a non-empty array");
        }
        names.push_back(name);
        values.emplace_back(axis["values"].begin(), axis["values"].end());
    }
    const AgentPolicy policy = config_policy(s.config);
    const std::string hash = config_hash(s.config);

    // Build every cell first so that a bad value fails before any compute.
    std::size_t total = 1;
    for (const auto& v : values) total *= v.size();
    std::vector<std::vector<Json>> cells;
    for (std::size_t c = 0; c < total; ++c) {
        std::vector<Json> cell(names.size());
        std::size_t rem = c;
        for (std::size_t a = names.size(); a-- > 0;) {
            cell[a] = values[a][rem % values[a].size()];
            rem /= values[a].size();
        }
        cells.push_back(std::move(cell));
    }
    std::vector<Instance> instances;
    for (const auto& cell : cells) {
        Json spec = base;
        for (std::size_t a = 0; a < names.size(); ++a) spec[names[a]] = cell[a];
        instances.push_back(instance_from_builder(spec));
    }

    Sink sink(g.out, out);
    auto& os = sink.stream();
    os << "# config_hash=" << hash << "\n";
    for (const auto& n : names) os << n << ",";
    os << "n_runs,horizon,mean_freq_optimal,stderr_freq_optimal,mean_freq_optimal_tail,mean_switches,mean_S0,mean_S1,"
          "n_tau0,mean_tau0,var_tau0,n_tau1,mean_tau1,var_tau1,frac_event_eps_hit,mean_min_post_true,"
          "mean_max_post_true,mean_final_post_true\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const EnsembleSummary e = run_ensemble(instances[c], policy, s, g.threads);
        for (const auto& v : cells[c]) os << (v.is_number() ? fmt(v.get<double>()) : v.dump()) << ",";
        os << e.n_runs << "," << e.horizon << "," << fmt(e.mean_freq_optimal) << "," << fmt(e.stderr_freq_optimal) << ","
           << fmt(e.mean_freq_optimal_tail) << "," << fmt(e.mean_switches) << "," << fmt(e.mean_S0) << ","
           << fmt(e.mean_S1) << "," << e.tau0.count << "," << fmt(e.tau0.mean) << "," << fmt(e.tau0.variance) << ","
           << e.tau1.count << "," << fmt(e.tau1.mean) << "," << fmt(e.tau1.variance) << ","
           << fmt(e.frac_event_eps_hit) << "," << fmt(e.mean_min_posterior_true) << ","
           << fmt(e.mean_max_posterior_true) << "," << fmt(e.mean_final_posterior_true) << "\n";
    }
    return kExitOk;
}

struct BoundsFlags {
    std::vector<double> values;
    std::vector<double> probs;
    double c = 1.0;
    std::vector<double> c_seq;
    std::size_t n = 0;
    double ck = 1.0;
    double eps1 = 1.0;
    double lambda = 1.5;
    std::string side = "upper";
    bool monte_carlo = false;
};

FiniteRV bounds_rv(const BoundsFlags& b) {
    if (b.values.empty()) throw std::invalid_argument("--values is required");
    return FiniteRV(b.values, b.probs);
}

/// Mean and binomial standard error of a hit count.
Json mc_report(std::size_t hits, std::size_t n, double bound) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return Json{{"n", n}, {"hits", hits}, {"empirical", p}, {"stderr", se}, {"bound", bound},
                {"within_3se", p <= bound + 3.0 * se}};
}

int cmd_bounds(const std::string& which, const BoundsFlags& b, const GlobalFlags& g, std::ostream& out) {
    Settings s = resolve_settings(Json{{"schema", 1}, {"horizon", 10'000}, {"runs", 10'000}}, g);
    Json report;
    report["kind"] = which;
    const std::size_t n_runs = s.runs;
    const std::size_t len = s.horizon;
    std::vector<std::uint8_t> hit(n_runs, 0);
    const std::size_t threads = resolve_threads(g.threads);

    if (which == "wald") {
        const FiniteRV rv = bounds_rv(b);
        if (!(b.c > 0.0)) throw std::invalid_argument("--c must be positive");
        const double r = wald_exponent(rv);
        const double bound = wald_tail_bound(rv, b.c);
        report["inputs"] = {{"values", rv.values()}, {"probs", rv.probs()}, {"c", b.c}};
        report["mean"] = rv.mean();
        report["r_star"] = r;
        report["bound"] = bound;
        if (b.monte_carlo) {
            parallel_for_index(n_runs, threads, [&](std::size_t i) {
                Rng rng(s.seed + i);
                double z = 0.0;
                for (std::size_t t = 0; t < len; ++t) {
                    z += rv.values()[rng.categorical(rv.probs())];
                    if (z >= b.c) {
                        hit[i] = 1;
                        return;
                    }
                }
            });
            report["monte_carlo"] = mc_report(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)),
                                              n_runs, bound);
            report["monte_carlo"]["walk_length"] = len;
        }
    } else if (which == "azuma") {
        std::vector<double> cs = b.c_seq;
        if (cs.empty() && b.n > 0) cs.assign(b.n, b.ck);
        if (cs.empty()) throw std::invalid_argument("give --c-seq or --n");
        for (double c : cs) {
            if (!(c > 0.0)) throw std::invalid_argument("increment bounds must be positive");
        }
        if (!(b.eps1 > 0.0)) throw std::invalid_argument("--eps1 must be positive");
        const double bound = azuma_bound(cs, b.eps1);
        report["inputs"] = {{"n", cs.size()}, {"eps1", b.eps1}};
        report["sum_c_squared"] = [&] {
            double acc = 0.0;
            for (double c : cs) acc += c * c;
            return acc;
        }();
        report["bound"] = bound;
        if (b.monte_carlo) {
            parallel_for_index(n_runs, threads, [&](std::size_t i) {
                Rng rng(s.seed + i);
                double z = 0.0;
                for (double c : cs) z += (rng.next() >> 63) ? c : -c;
                hit[i] = z >= b.eps1 ? 1 : 0;
            });
            report["monte_carlo"] = mc_report(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)),
                                              n_runs, bound);
        }
    } else {
        const FiniteRV rv = bounds_rv(b);
        TailSide side;
        if (b.side == "upper") {
            side = TailSide::Upper;
        } else if (b.side == "lower") {
            side = TailSide::Lower;
        } else {
            throw std::invalid_argument("--side must be upper or lower");
        }
        const ChernoffRate rate = generalized_chernoff_rate(rv, b.lambda, side);
        report["inputs"] = {{"values", rv.values()}, {"probs", rv.probs()}, {"lambda", b.lambda}, {"side", b.side}};
        report["mean"] = rv.mean();
        report["rate"] = rate.infinite ? Json("inf") : Json(rate.value);
        report["infinite"] = rate.infinite;
        report["capped"] = rate.capped;
        report["argmax_t"] = rate.argmax;
        if (b.monte_carlo) {
            const double level = b.lambda * rv.mean() * static_cast<double>(len);
            const double bound = rate.infinite ? 0.0 : std::exp(-rate.value * static_cast<double>(len));
            parallel_for_index(n_runs, threads, [&](std::size_t i) {
                Rng rng(s.seed + i);
                double z = 0.0;
                for (std::size_t t = 0; t < len; ++t) z += rv.values()[rng.categorical(rv.probs())];
                hit[i] = (side == TailSide::Upper ? z >= level : z <= level) ? 1 : 0;
            });
            report["monte_carlo"] = mc_report(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)),
                                              n_runs, bound);
            report["monte_carlo"]["sum_length"] = len;
        }
    }
    if (b.monte_carlo) report["config_hash"] = config_hash(Json{{"report_inputs", report["inputs"]}, {"settings", s.config}});
    Sink sink(g.out, out);
    sink.stream() << report.dump(2) << "\n";
    return kExitOk;
}

struct GameFlags {
    std::string builder = "symmetric";
    std::optional<double> r;
    std::optional<int> k_star;
    std::optional<double> prior_f1;
    std::string mode = "auxiliary";
    std::string state = "F0";
    std::string strategy = "mirror";
    std::optional<int> t1;
    std::optional<int> t2;
    std::optional<double> lambda_target;
    std::optional<double> l_eps_star;
    std::optional<std::size_t> tau;
    std::optional<double> level;
    double absorb_margin = 1e-3;
    bool skip_qstar = false;
};

Json strategy_spec_from_flags(const GameFlags& f, double eps) {
    Json j{{"name", f.strategy}};
    if (f.strategy == "block") {
        j["t1"] = f.t1.value_or(2);
        j["t2"] = f.t2.value_or(1);
    } else if (f.strategy == "sigma_eps") {
        j["lambda_target"] = f.lambda_target.value_or(0.73);
        j["l_eps_star"] = f.l_eps_star.value_or(-1.0);
        j["eps"] = eps;
    } else if (f.strategy == "learn_then_propose") {
        j["level"] = f.level.value_or(1.0);
    } else if (f.strategy == "learning_wrapper") {
        j["tau"] = f.tau.value_or(500);
        j["eps"] = eps;
        j["strat0"] = Json{{"name", "sigma_eps"},
                           {"lambda_target", f.lambda_target.value_or(0.73)},
                           {"l_eps_star", f.l_eps_star.value_or(-1.0)},
                           {"eps", eps}};
        j["strat1"] = Json{{"name", "always"}};
    } else if (f.strategy == "mirror" && f.k_star) {
        j["k_star"] = *f.k_star;
    }
    return j;
}

Json game_result_json(const GameResult& r) {
    Json per = Json::array();
    for (const auto& p : r.per_state) {
        per.push_back({{"state", p.state == 0 ? "F0" : "F1"}, {"weight", p.weight}, {"n_runs", p.n_runs},
                       {"payoff", p.mean}, {"stderr", p.std_error}});
    }
    std::size_t certified = 0;
    std::size_t estar = 0;
    for (const auto& run : r.runs) {
        certified += run.certified ? 1 : 0;
        estar += run.estar_hit ? 1 : 0;
    }
    return Json{{"payoff", r.payoff_freq},
                {"stderr", r.payoff_stderr},
                {"frac_estar_hit", r.frac_estar_hit},
                {"frac_certified", r.frac_certified},
                {"n_estar_hit", estar},
                {"n_certified", certified},
                {"mean_crossings", r.mean_crossings},
                {"mean_proposal_freq_tail", r.mean_proposal_freq_tail},
                {"lambda_achieved", r.lambda_achieved ? Json(*r.lambda_achieved) : Json(nullptr)},
                {"per_state", per}};
}

int cmd_game(const GameFlags& f, const GlobalFlags& g, std::ostream& out) {
    Json config = load_config(g, false);
    if (!config.contains("instance")) {
        if (f.builder != "symmetric") throw ConfigError("--builder: the game needs the 'symmetric' builder");
        Json spec{{"builder", "symmetric"}, {"r", f.r.value_or(0.7)}};
        if (f.k_star) spec["k_star"] = *f.k_star;
        if (f.prior_f1) spec["prior_f1"] = *f.prior_f1;
        config["instance"] = spec;
    }
    Json game_cfg = config.value("game", Json::object());
    if (!game_cfg.is_object()) throw ConfigError("field 'game': expected an object");
    if (!game_cfg.contains("mode")) game_cfg["mode"] = f.mode;
    if (!game_cfg.contains("state")) game_cfg["state"] = f.state;
    if (!game_cfg.contains("absorb_margin")) game_cfg["absorb_margin"] = f.absorb_margin;
    Settings s = resolve_settings(config, g);
    if (!game_cfg.contains("strategy")) game_cfg["strategy"] = strategy_spec_from_flags(f, s.eps);
    s.config["game"] = game_cfg;

    const Instance game = resolve_instance(s.config["instance"]);
    const AgentPolicy policy = config_policy(s.config);
    if (!game_cfg["mode"].is_string() || !game_cfg["state"].is_string()) {
        throw ConfigError("field 'game.mode'/'game.state': expected strings");
    }
    const std::string mode_s = game_cfg["mode"].get<std::string>();
    GameMode mode;
    if (mode_s == "auxiliary") {
        mode = GameMode::Auxiliary;
    } else if (mode_s == "symmetric") {
        mode = GameMode::Symmetric;
    } else {
        throw ConfigError("field 'game.mode': expected 'auxiliary' or 'symmetric'");
    }
    const std::string state_s = game_cfg["state"].get<std::string>();
    if (state_s != "F0" && state_s != "F1" && state_s != "prior") {
        throw ConfigError("field 'game.state': expected 'F0', 'F1' or 'prior'");
    }
    if (!game_cfg["absorb_margin"].is_number()) throw ConfigError("field 'game.absorb_margin': expected a number");
    const PrincipalStrategy strategy = strategy_from_json(game_cfg["strategy"], game);

    GameOptions opts;
    opts.horizon = s.horizon;
    opts.n_runs = s.runs;
    opts.base_seed = s.seed;
    opts.tail_fraction = s.tail_fraction;
    opts.absorb_margin = game_cfg["absorb_margin"].get<double>();
    opts.threads = g.threads;

    const LambdaResult lam = lambda_opt(game.states[0], game.states[1]);
    Json report;
    report["config_hash"] = config_hash(s.config);
    report["config"] = s.config;
    report["lambda"] = {{"lambda", lam.lambda},
                        {"lambda_hat", lam.lambda_hat_unbounded ? Json("unbounded") : Json(lam.lambda_hat)},
                        {"degenerate", lam.degenerate},
                        {"m11", lam.m11},
                        {"msw", lam.msw}};
    report["strategy"] = {{"spec", strategy_to_json(strategy)}, {"description", strategy.describe()}};

    double q_hat = 0.0;
    if (!f.skip_qstar) {
        const QStarEstimate q = estimate_qstar(game, default_candidates(game, lam), policy, opts);
        Json cands = Json::array();
        for (const auto& c : q.candidates) {
            cands.push_back({{"strategy", c.strategy.describe()}, {"q", c.q}, {"stderr", c.std_error},
                             {"n_estar_hit", c.n_estar}, {"n_certified", c.n_certified}});
        }
        report["qstar"] = {{"q_hat", q.q_hat}, {"best", q.candidates[q.best].strategy.describe()},
                           {"reliable", q.reliable}, {"candidates", cands}};
        q_hat = q.q_hat;
    }

    const GameResult res = state_s == "prior"
                               ? simulate_game_prior_weighted(game, strategy, policy, mode, opts)
                               : simulate_game(game, strategy, policy, mode, state_s == "F0" ? 0 : 1, opts);
    report["simulation"] = game_result_json(res);
    if (!f.skip_qstar) {
        report["theorem2_payoff"] = theorem2_payoff(game.prior, q_hat, lam.lambda);
        if (res.lambda_achieved) {
            report["theorem2_payoff_achieved"] =
                theorem2_payoff(game.prior, q_hat, std::min(*res.lambda_achieved, 1.0));
        }
    }
    Sink sink(g.out, out);
    sink.stream() << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_validate(const GlobalFlags& g, std::ostream& out) {
    const Json config = load_config(g, true);
    const Instance inst = resolve_instance(config_instance(config));
    if (config.contains("policy")) (void)policy_from_json(config["policy"]);
    Json report;
    report["valid"] = true;
    report["instance"] = instance_to_json(inst);
    Json viol = Json::array();
    for (const auto& v : check_regular(inst)) viol.push_back(v.message);
    report["regular"] = viol.empty();
    report["regularity_violations"] = viol;
    report["warnings"] = agent_optimality_warnings(inst);
    report["lag_correctly_specified"] = lag_correctly_specified(inst);
    report["optimal_action"] = inst.optimal_action();
    if (inst.states.size() == 3 && inst.n_actions() == 2) {
        const RecipeReport rep = validate_theorem1_recipe(inst);
        auto prop = [](const RecipeProperty& p) {
            return Json{{"pass", p.pass}, {"value", nullable(p.value)}, {"detail", p.detail}};
        };
        report["recipe"] = {{"kl_separation", prop(rep.kl_separation)},
                            {"closeness", prop(rep.closeness)},
                            {"near_zero_drift", prop(rep.near_zero_drift)},
                            {"all_pass", rep.all_pass()}};
    }
    Sink sink(g.out, out);
    sink.stream() << report.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

const std::vector<std::string>& run_csv_columns() {
    static const std::vector<std::string> cols = {
        "seed",         "freq_optimal",  "n_switch_01",   "n_switch_10",     "mean_tau0",
        "mean_tau1",    "var_tau0",      "var_tau1",      "event_eps_hit",   "min_post_true",
        "max_post_true", "final_post_true", "freq_optimal_tail", "n_censored",
    };
    return cols;
}

std::string run_csv_row(const RunStats& s) {
    const SampleSummary t0 = summarize_samples({&s.tau0_samples});
    const SampleSummary t1 = summarize_samples({&s.tau1_samples});
    std::ostringstream os;
    os << s.seed << "," << fmt(s.freq_optimal) << "," << s.n_switch_01 << "," << s.n_switch_10 << "," << fmt(t0.mean)
       << "," << fmt(t1.mean) << "," << fmt(t0.variance) << "," << fmt(t1.variance) << ","
       << (s.event_eps_hit ? 1 : 0) << "," << fmt(s.min_posterior_true) << "," << fmt(s.max_posterior_true) << ","
       << fmt(s.final_posterior_true) << "," << fmt(s.freq_optimal_tail) << "," << s.censored_runs;
    return os.str();
}

Json ensemble_to_json(const EnsembleSummary& s) {
    return Json{{"n_runs", s.n_runs},
                {"horizon", s.horizon},
                {"base_seed", s.base_seed},
                {"mean_freq_optimal", s.mean_freq_optimal},
                {"stderr_freq_optimal", s.stderr_freq_optimal},
                {"mean_freq_optimal_tail", s.mean_freq_optimal_tail},
                {"stderr_freq_optimal_tail", s.stderr_freq_optimal_tail},
                {"mean_switches", s.mean_switches},
                {"mean_S0", s.mean_S0},
                {"mean_S1", s.mean_S1},
                {"tau0", sample_summary_json(s.tau0)},
                {"tau1", sample_summary_json(s.tau1)},
                {"frac_event_eps_hit", s.frac_event_eps_hit},
                {"mean_min_post_true", s.mean_min_posterior_true},
                {"mean_max_post_true", s.mean_max_posterior_true},
                {"mean_final_post_true", s.mean_final_posterior_true}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"laglearn: misattributed-lag learning experiments"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--config", g.config, "JSON config file (schema 1)");
    app.add_option("--out", g.out, "Output file (default: stdout)");
    app.add_option("--seed", g.seed, "Base seed; run i uses seed + i");
    app.add_option("--runs", g.runs, "Number of runs");
    app.add_option("--horizon", g.horizon, "Periods per run");
    app.add_option("--threads", g.threads, "Worker threads (default: LAGLEARN_THREADS or all cores)");
    app.add_option("--tail-fraction", g.tail_fraction, "Tail window fraction in (0,1]");
    app.add_option("--eps", g.eps, "Posterior margin epsilon");

    std::string summary;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo ensemble: per-run CSV plus summary JSON");
    sim->add_option("--summary", summary, "Summary JSON path (default: derived from --out)");
    auto* sweep = app.add_subcommand("sweep", "Grid sweep over builder parameters: one CSV row per cell");

    BoundsFlags b;
    auto* bounds = app.add_subcommand("bounds", "Concentration bounds with optional Monte Carlo comparison");
    bounds->require_subcommand(1);
    auto* wald = bounds->add_subcommand("wald", "Wald exponent and crossing bound");
    auto* azuma = bounds->add_subcommand("azuma", "Azuma-Hoeffding bound");
    auto* chern = bounds->add_subcommand("chernoff", "Generalized Chernoff rate");
    for (auto* sc : {wald, chern}) {
        sc->add_option("--values", b.values, "Support values")->delimiter(',')->required();
        sc->add_option("--probs", b.probs, "Probabilities")->delimiter(',')->required();
    }
    wald->add_option("--c", b.c, "Crossing level");
    azuma->add_option("--c-seq", b.c_seq, "Increment bounds c_k")->delimiter(',');
    azuma->add_option("--n", b.n, "Number of unit increments when --c-seq is absent");
    azuma->add_option("--ck", b.ck, "Common increment bound with --n");
    azuma->add_option("--eps1", b.eps1, "Deviation level");
    chern->add_option("--lambda", b.lambda, "Multiple of the mean");
    chern->add_option("--side", b.side, "upper or lower");
    for (auto* sc : {wald, azuma, chern}) {
        sc->add_flag("--mc", b.monte_carlo, "Add a Monte Carlo comparison (--runs, --horizon, --seed)");
        sc->fallthrough();
    }

    GameFlags gf;
    auto* game = app.add_subcommand("game", "Principal-agent proposal game");
    game->add_option("--builder", gf.builder, "Instance builder (symmetric)");
    game->add_option("--r", gf.r, "Symmetric game parameter r in (1/2,1)");
    game->add_option("--k-star", gf.k_star, "True lag");
    game->add_option("--prior-f1", gf.prior_f1, "Prior probability of F1");
    game->add_option("--mode", gf.mode, "auxiliary or symmetric");
    game->add_option("--state", gf.state, "F0, F1 or prior");
    game->add_option("--strategy", gf.strategy,
                     "always | status_quo | mirror | block | sigma_eps | learn_then_propose | learning_wrapper");
    game->add_option("--t1", gf.t1, "Block T1");
    game->add_option("--t2", gf.t2, "Block T2");
    game->add_option("--lambda-target", gf.lambda_target, "Target proposal frequency for sigma_eps");
    game->add_option("--l-eps-star", gf.l_eps_star, "Negative LLR level for sigma_eps");
    game->add_option("--tau", gf.tau, "Learning wrapper decision period");
    game->add_option("--level", gf.level, "Learn-then-propose LLR level");
    game->add_option("--absorb-margin", gf.absorb_margin, "Certification margin for q estimates");
    game->add_flag("--no-qstar", gf.skip_qstar, "Skip the q* candidate estimates");

    auto* validate = app.add_subcommand("validate", "Validate a config and report regularity");
    for (auto* sc : {sim, sweep, bounds, game, validate}) sc->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        if (e.get_name() == "RequiredError" || e.get_name() == "ExtrasError") err << app.help();
        return kExitInvalid;
    }

    try {
        if (*sim) return cmd_simulate(g, summary, out);
        if (*sweep) return cmd_sweep(g, out);
        if (*bounds) {
            const std::string which = *wald ? "wald" : (*azuma ? "azuma" : "chernoff");
            return cmd_bounds(which, b, g, out);
        }
        if (*game) return cmd_game(gf, g, out);
        if (*validate) return cmd_validate(g, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    err << app.help();
    return kExitInvalid;
}

}  // namespace laglearn
