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

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "laglearn/cli.hpp"
#include "laglearn/instances.hpp"
#include "laglearn/io.hpp"

using namespace laglearn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("laglearn_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

const char* kFig1Config = R"({"schema": 1, "instance": {"builder": "fig1", "eps": 0.01, "p_star": 0.01},
  "horizon": 2000, "runs": 6, "seed": 42})";

}  // namespace

TEST_CASE("instances survive a JSON round trip") {
    std::vector<Instance> cases{build_fig1(0.05), build_construction(0.05, 0.01), build_symmetric_game(0.7)};
    Instance uncertain = build_fig1(0.05);
    uncertain.agent_lag = UncertainLag{{0, 1}, {0.3, 0.7}};
    uncertain.pre_history = {1, 0};
    uncertain.validate();
    cases.push_back(uncertain);
    Instance mixture = build_construction(0.1, 0.02);
    mixture.true_lag = MixtureLag{{0.25, 0.75}};
    mixture.discount = 0.5;
    cases.push_back(mixture);
    for (const auto& inst : cases) {
        const Json j = instance_to_json(inst);
        const Instance back = instance_from_json(Json::parse(j.dump()));
        CHECK(instance_to_json(back) == j);
        CHECK(back.states == inst.states);
        CHECK(back.prior == inst.prior);
        CHECK(back.pre_history == inst.pre_history);
        CHECK(back.true_lag == inst.true_lag);
        CHECK(back.agent_lag == inst.agent_lag);
    }
}

TEST_CASE("malformed instances name the offending field") {
    Json j = instance_to_json(build_fig1(0.05));
    j["prior"] = {0.5, 0.6, 0.1};
    CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
    j = instance_to_json(build_fig1(0.05));
    j["bogus"] = 1;
    try {
        (void)instance_from_json(j);
        FAIL("accepted an unknown field");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    j = instance_to_json(build_fig1(0.05));
    j["true_lag"] = {{"point", -1}};
    CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
    CHECK_THROWS_AS(instance_from_builder(Json{{"builder", "fig1"}, {"eps", 0.3}}), std::invalid_argument);
    CHECK_THROWS_AS(instance_from_builder(Json{{"builder", "nope"}}), std::invalid_argument);
    CHECK_THROWS_AS(instance_from_builder(Json{{"builder", "fig1"}, {"eps", 0.05}, {"zeta", 0.1}}),
                    std::invalid_argument);
}

TEST_CASE("builder specs resolve to the builders") {
    const Instance a = resolve_instance(Json{{"builder", "construction"}, {"zeta", 0.05}, {"zeta_prime", 0.01}});
    CHECK(a.states == build_construction(0.05, 0.01).states);
    const Instance b = resolve_instance(Json{{"builder", "symmetric"}, {"r", 0.8}, {"state", 1}});
    CHECK(b.true_state_index == 1);
    CHECK(builder_parameters("fig1") == std::vector<std::string>{"eps", "p_star", "k_star", "k_prime"});
}

TEST_CASE("policies and strategies round trip") {
    for (const AgentPolicy& p : std::vector<AgentPolicy>{Myopic{}, ThresholdLLR{-0.5, 0, 1, 2},
                                                         GridValueIteration{501, 0.8, 1e-9}}) {
        const Json j = policy_to_json(p);
        CHECK(policy_to_json(policy_from_json(j)) == j);
    }
    CHECK_THROWS_AS(policy_from_json(Json{{"type", "oracle"}}), std::invalid_argument);
    const Instance g = build_symmetric_game(0.7);
    const auto s = PrincipalStrategy::learning_wrapper(
        300, 0.02,
        PrincipalStrategy::threshold_composite(-1.0, PrincipalStrategy::mirror(1), PrincipalStrategy::block(6, 5),
                                               3.5),
        PrincipalStrategy::always_propose());
    const Json j = strategy_to_json(s);
    CHECK(strategy_to_json(strategy_from_json(j, g)) == j);
    const auto sigma = strategy_from_json(Json{{"name", "sigma_eps"}, {"lambda_target", 0.73}}, g);
    CHECK(sigma.children.at(1).t1 == 6);
    CHECK_THROWS_AS(strategy_from_json(Json{{"name", "block"}, {"t1", 3}, {"t2", 1}}, g), std::invalid_argument);
}

TEST_CASE("hashing and number formatting") {
    // FNV-1a reference values
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    const Json a = Json::parse(R"({"b": 1, "a": [1, 2]})");
    const Json b = Json::parse(R"({"a": [1, 2], "b": 1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(a) != config_hash(Json::parse(R"({"a": [1, 2], "b": 2})")));
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_double(NAN) == "nan");
}

TEST_CASE("simulate writes a deterministic CSV and a summary") {
    TempDir tmp;
    const std::string cfg = tmp.file("fig1.json", kFig1Config);
    const auto r1 = run({"simulate", "--config", cfg, "--out", tmp.at("a.csv")});
    REQUIRE(r1.code == kExitOk);
    const auto r2 = run({"simulate", "--config", cfg, "--out", tmp.at("b.csv"), "--threads", "3"});
    REQUIRE(r2.code == kExitOk);
    const std::string a = slurp(tmp.at("a.csv"));
    CHECK(a == slurp(tmp.at("b.csv")));
    const auto rows = lines(a);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].rfind("# config_hash=", 0) == 0);
    CHECK(rows[1].rfind("seed,freq_optimal,n_switch_01,n_switch_10,mean_tau0,mean_tau1,var_tau0,var_tau1,"
                        "event_eps_hit,min_post_true,max_post_true,final_post_true",
                        0) == 0);
    CHECK(rows[2].rfind("42,", 0) == 0);
    const Json summary = read_json_file(tmp.at("a.summary.json"));
    CHECK(summary["n_runs"] == 6);
    CHECK(summary.contains("config_hash"));

    const auto r3 = run({"simulate", "--config", cfg, "--runs", "3", "--seed", "7"});
    REQUIRE(r3.code == kExitOk);
    const auto out_rows = lines(r3.out);
    CHECK(out_rows.size() == 5);
    CHECK(out_rows[2].rfind("7,", 0) == 0);
    CHECK(out_rows[0] != rows[0]);
}

TEST_CASE("exit codes for bad input") {
    TempDir tmp;
    CHECK(run({"simulate", "--config", tmp.at("missing.json")}).code == kExitInvalid);
    const auto bad_json = run({"simulate", "--config", tmp.file("bad.json", "{\n  \"schema\": 1,\n  oops\n}")});
    CHECK(bad_json.code == kExitInvalid);
    CHECK(bad_json.err.find("line") != std::string::npos);
    CHECK(run({"simulate", "--config", tmp.file("nos.json", R"({"instance": {"builder": "fig1", "eps": 0.05}})")})
              .code == kExitInvalid);
    CHECK(run({"simulate", "--config", tmp.file("bad_eps.json", R"({"schema": 1, "instance": {"builder": "fig1",
              "eps": 0.5}})")}).code == kExitInvalid);
    const auto unknown = run({"frobnicate"});
    CHECK(unknown.code == kExitInvalid);
    CHECK(run({}).code == kExitInvalid);
    CHECK(run({"simulate", "--config", tmp.file("ok.json", kFig1Config), "--tail-fraction", "0"}).code ==
          kExitInvalid);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("sweep emits one row per grid cell in grid order") {
    TempDir tmp;
    const std::string cfg = tmp.file("sw.json", R"({"schema": 1,
      "instance": {"builder": "construction", "zeta": 0.1, "zeta_prime": 0.01},
      "horizon": 500, "runs": 2,
      "grid": [{"param": "zeta", "values": [0.1, 0.05, 0.02]}, {"param": "zeta_prime", "values": [0.01, 0.001]}]})");
    const auto r = run({"sweep", "--config", cfg});
    REQUIRE(r.code == kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 8);
    CHECK(rows[1].rfind("zeta,zeta_prime,n_runs", 0) == 0);
    CHECK(rows[2].rfind("0.1,0.01,", 0) == 0);
    CHECK(rows[3].rfind("0.1,0.001,", 0) == 0);
    CHECK(rows[7].rfind("0.02,0.001,", 0) == 0);
    CHECK(run({"sweep", "--config", cfg}).out == r.out);

    const std::string unknown = tmp.file("u.json", R"({"schema": 1,
      "instance": {"builder": "construction", "zeta": 0.1, "zeta_prime": 0.01},
      "grid": [{"param": "eta", "values": [1]}]})");
    CHECK(run({"sweep", "--config", unknown}).code == kExitInvalid);
    const std::string empty = tmp.file("e.json", R"({"schema": 1,
      "instance": {"builder": "construction", "zeta": 0.1, "zeta_prime": 0.01}, "grid": []})");
    CHECK(run({"sweep", "--config", empty}).code == kExitInvalid);
    const std::string empty_axis = tmp.file("e2.json", R"({"schema": 1,
      "instance": {"builder": "construction", "zeta": 0.1, "zeta_prime": 0.01},
      "grid": [{"param": "zeta", "values": []}]})");
    CHECK(run({"sweep", "--config", empty_axis}).code == kExitInvalid);
}

TEST_CASE("bounds wald report") {
    const auto r = run({"bounds", "wald", "--values", "-1,1", "--probs", "0.75,0.25", "--c", "1.0986"});
    REQUIRE(r.code == kExitOk);
    const Json j = Json::parse(r.out);
    CHECK(j["r_star"].get<double>() == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(j["bound"].get<double>() == doctest::Approx(std::exp(-std::log(3.0) * 1.0986)).epsilon(1e-10));
    CHECK(run({"bounds", "wald", "--values", "-1,1", "--probs", "0.25,0.75", "--c", "1"}).code == kExitInvalid);

    const auto mc = run({"bounds", "wald", "--values", "-1,1", "--probs", "0.75,0.25", "--c", "1.0986", "--mc",
                         "--runs", "2000", "--horizon", "500"});
    REQUIRE(mc.code == kExitOk);
    CHECK(Json::parse(mc.out).contains("monte_carlo"));
}

TEST_CASE("bounds azuma and chernoff reports") {
    const auto az = run({"bounds", "azuma", "--n", "10000", "--ck", "1", "--eps1", "300"});
    REQUIRE(az.code == kExitOk);
    CHECK(Json::parse(az.out)["bound"].get<double>() == doctest::Approx(std::exp(-4.5)));
    const auto ch = run({"bounds", "chernoff", "--values", "0,2", "--probs", "0.5,0.5", "--lambda", "1.5"});
    REQUIRE(ch.code == kExitOk);
    const Json cj = Json::parse(ch.out);
    CHECK(cj.contains("rate"));
    CHECK(run({"bounds", "chernoff", "--values", "0,2", "--probs", "0.5,0.5", "--lambda", "0.5"}).code ==
          kExitInvalid);
}

TEST_CASE("game report") {
    const auto r = run({"game", "--builder", "symmetric", "--r", "0.7", "--mode", "auxiliary", "--state", "F0",
                        "--strategy", "mirror", "--runs", "6", "--horizon", "2000"});
    REQUIRE(r.code == kExitOk);
    const Json j = Json::parse(r.out);
    CHECK(j["lambda"]["lambda"].get<double>() == doctest::Approx(0.75));
    CHECK(j.contains("qstar"));
    CHECK(j.contains("theorem2_payoff"));
    CHECK(j["simulation"]["payoff"].get<double>() >= 0.0);
    CHECK(run({"game", "--builder", "symmetric", "--r", "0.4"}).code == kExitInvalid);
    CHECK(run({"game", "--builder", "symmetric", "--r", "0.7", "--mode", "sideways"}).code == kExitInvalid);
}

TEST_CASE("validate report") {
    TempDir tmp;
    const auto r = run({"validate", "--config", tmp.file(
                            "c.json", R"({"schema": 1, "instance": {"builder": "construction", "zeta": 0.02,
                            "zeta_prime": 0.01}})")});
    REQUIRE(r.code == kExitOk);
    const Json j = Json::parse(r.out);
    CHECK(j["regular"] == true);
    CHECK(j["optimal_action"] == 0);
    CHECK(j["recipe"]["closeness"]["pass"] == true);
    CHECK(j["lag_correctly_specified"] == false);
}
