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

#include <cmath>
#include <stdexcept>

#include "laglearn/agent.hpp"
#include "laglearn/instances.hpp"

using namespace laglearn;

namespace {

Belief point_mass(std::size_t n, std::size_t at) {
    std::vector<double> lw(n, -INFINITY);
    lw[at] = 0.0;
    return Belief(lw);
}

Belief from_weights(const std::vector<double>& w) {
    std::vector<double> lw;
    for (double x : w) lw.push_back(std::log(x));
    Belief b(lw);
    b.normalize();
    return b;
}

// F0 prefers action 0 by 0.2, F1 prefers action 1 by 0.1, so the agent is
// indifferent where 0.2 pi(F0) = 0.1 pi(F1).
Instance asymmetric_pair() {
    Instance inst;
    inst.states = {OutcomeModel({{0.5, 0.5}, {0.7, 0.3}}), OutcomeModel({{0.6, 0.4}, {0.5, 0.5}})};
    inst.prior = {0.5, 0.5};
    inst.payoff = {0.0, 1.0};
    inst.validate();
    return inst;
}

}  // namespace

TEST_CASE("myopic best response on point masses of the three-state example") {
    const double eps = 0.05;
    const Instance inst = build_fig1(eps);
    CHECK(myopic_best_response(point_mass(3, kF1Idx), inst) == 1);
    CHECK(myopic_best_response(point_mass(3, kF0Idx), inst) == 0);
    CHECK(myopic_best_response(point_mass(3, kTrueIdx), inst) == 0);
    CHECK(inst.states[kF1Idx].expected_payoff(1, inst.payoff) == doctest::Approx(2 * eps));
    CHECK(inst.states[kF1Idx].expected_payoff(0, inst.payoff) == doctest::Approx(eps));
}

TEST_CASE("constant payoff makes every action tie and the lowest wins") {
    Instance inst = build_fig1(0.05);
    inst.payoff = {3.0, 3.0, 3.0};
    CHECK(myopic_best_response(point_mass(3, kF1Idx), inst) == 0);
    CHECK(myopic_best_response(from_weights({0.2, 0.3, 0.5}), inst) == 0);
}

TEST_CASE("indifference LLR of symmetric pairs is zero") {
    CHECK(myopic_indifference_llr(build_fig1(0.05), kF0Idx, kF1Idx) == doctest::Approx(0.0));
    CHECK(myopic_indifference_llr(build_construction(0.05, 0.01), kF0Idx, kF1Idx) == doctest::Approx(0.0));
    CHECK(myopic_indifference_llr(build_symmetric_game(0.7), kGameF0, kGameF1) == doctest::Approx(0.0));
    CHECK(myopic_indifference_llr(asymmetric_pair(), 0, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    // orientation flips with the arguments
    CHECK(myopic_indifference_llr(asymmetric_pair(), 1, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("indifference LLR is unchanged when payoffs are doubled") {
    Instance inst = asymmetric_pair();
    const double base = myopic_indifference_llr(inst, 0, 1);
    inst.payoff = {0.0, 2.0};
    CHECK(myopic_indifference_llr(inst, 0, 1) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("indifference LLR rejects pairs that rank the actions the same way") {
    Instance inst = asymmetric_pair();
    inst.states[1] = OutcomeModel({{0.4, 0.6}, {0.5, 0.5}});
    CHECK_THROWS_AS(myopic_indifference_llr(inst, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(myopic_indifference_llr(build_fig1(0.05), kTrueIdx, kF0Idx), std::invalid_argument);
}

TEST_CASE("myopic response on two hypotheses is the LLR threshold rule") {
    const Instance inst = asymmetric_pair();
    const double l_star = myopic_indifference_llr(inst, 0, 1);
    const PolicyRunner threshold(ThresholdLLR{l_star, 1, 0, 1}, inst);
    const PolicyRunner myopic(Myopic{}, inst);
    for (int k = -400; k <= 400; ++k) {
        const double l = 0.01 * k;
        Belief b({l, 0.0});
        b.normalize();
        const Action expected = l >= l_star ? 0 : 1;
        CHECK(myopic_best_response(b, inst) == expected);
        CHECK(threshold.act(b) == expected);
        CHECK(myopic.act(b) == expected);
    }
}

TEST_CASE("positive affine payoff transforms preserve the myopic choice") {
    const Instance base = build_fig1(0.05);
    Instance shifted = base;
    shifted.payoff = {5.0, 5.0, 8.0};
    const int n = 40;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; i + j <= n; ++j) {
            const double w0 = (i + 0.01) / (n + 0.03);
            const double w1 = (j + 0.01) / (n + 0.03);
            const Belief b = from_weights({w0, w1, 1.0 - w0 - w1});
            CHECK(myopic_best_response(b, base) == myopic_best_response(b, shifted));
        }
    }
}

TEST_CASE("policy validation") {
    CHECK_THROWS_AS(validate_policy(ThresholdLLR{INFINITY, 1, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(validate_policy(GridValueIteration{50, 0.9, 1e-10}), std::invalid_argument);
    CHECK_THROWS_AS(validate_policy(GridValueIteration{1001, 0.9, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(validate_policy(GridValueIteration{1001, 0.9, 1e-10}));
}

TEST_CASE("nearly myopic discounted agent reproduces the myopic cutoff") {
    const Instance inst = asymmetric_pair();
    const auto res = discounted_threshold(inst, 0, 1, GridValueIteration{2001, 1e-6, 1e-12});
    CHECK(std::abs(res.threshold - std::log(0.5)) <= res.cell_width);
    CHECK(res.low_action == 1);
}

TEST_CASE("discounted cutoff of a relabelling-symmetric pair is zero") {
    const Instance inst = build_fig1(0.05);
    for (double delta : {0.3, 0.6, 0.9}) {
        const auto res = discounted_threshold(inst, kF0Idx, kF1Idx, GridValueIteration{1001, delta, 1e-10});
        CHECK(std::abs(res.threshold) <= res.cell_width);
    }
    const Instance game = build_symmetric_game(0.7);
    const auto res = discounted_threshold(game, kGameF0, kGameF1, GridValueIteration{1001, 0.8, 1e-10});
    CHECK(std::abs(res.threshold) <= res.cell_width);
}

TEST_CASE("refining the grid moves the cutoff by less than a coarse cell") {
    const Instance inst = asymmetric_pair();
    const auto coarse = discounted_threshold(inst, 0, 1, GridValueIteration{501, 0.9, 1e-10});
    const auto fine = discounted_threshold(inst, 0, 1, GridValueIteration{1001, 0.9, 1e-10});
    CHECK(std::abs(coarse.threshold - fine.threshold) < coarse.cell_width);
}

TEST_CASE("value iteration contracts by at most the discount factor per sweep") {
    const Instance inst = asymmetric_pair();
    const double delta = 0.8;
    const auto res = discounted_threshold(inst, 0, 1, GridValueIteration{501, delta, 1e-11});
    REQUIRE(res.sup_changes.size() > 3);
    CHECK(res.sup_changes.back() < 1e-11);
    for (std::size_t k = 1; k + 1 < res.sup_changes.size(); ++k) {
        CHECK(res.sup_changes[k + 1] <= delta * res.sup_changes[k] + 1e-15);
        CHECK(res.sup_changes[k + 1] < res.sup_changes[k]);
    }
}

TEST_CASE("grid policy runner acts on its computed cutoff") {
    const Instance inst = asymmetric_pair();
    const GridValueIteration g{1001, 0.5, 1e-10};
    const auto res = discounted_threshold(inst, 0, 1, g);
    const PolicyRunner runner(g, inst);
    CHECK(runner.threshold().l_star == res.threshold);
    CHECK_FALSE(runner.is_myopic());
    Belief far_low({-10.0, 0.0});
    far_low.normalize();
    CHECK(runner.act(far_low) == 1);
    CHECK_THROWS_AS(PolicyRunner(g, build_fig1(0.05)), std::invalid_argument);
}
