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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "laglearn/instances.hpp"
#include "laglearn/policy_game.hpp"
#include "laglearn/rng.hpp"

using namespace laglearn;

namespace {

using Kind = PrincipalStrategy::Kind;

GameOptions small_options(std::size_t horizon, std::size_t runs) {
    GameOptions o;
    o.horizon = horizon;
    o.n_runs = runs;
    o.base_seed = 1000;
    return o;
}

// Smallest block by exhaustive integer scan: frequency (T1 + 2 T2) / (2T)
// strictly inside (lo/100, hi/100), ordered by T then T1.
std::pair<int, int> scan_smallest_block(int lo, int hi) {
    for (int t = 2; t <= 20000; ++t) {
        for (int t1 = 2; t1 < t; t1 += 2) {
            const long num = 100L * (t1 + 2L * (t - t1));
            if (num > 2L * t * lo && num < 2L * t * hi) return {t1, t - t1};
        }
    }
    return {0, 0};
}

OutcomeModel random_binary_model(Rng& rng) {
    const double a = 0.05 + 0.9 * rng.uniform();
    const double b = 0.05 + 0.9 * rng.uniform();
    return OutcomeModel({{a, 1 - a}, {b, 1 - b}});
}

}  // namespace

TEST_CASE("lambda of the symmetric game is three quarters") {
    for (double r : {0.55, 0.6, 0.7, 0.8, 0.9}) {
        const Instance g = build_symmetric_game(r);
        const auto closed = lambda_opt(g.states[kGameF0], g.states[kGameF1]);
        const auto numeric = lambda_opt_numeric(g.states[kGameF0], g.states[kGameF1]);
        const double L = std::log(r / (1 - r));
        CHECK(closed.m11 == doctest::Approx(-(2 * r - 1) * L).epsilon(1e-12));
        CHECK(closed.msw == doctest::Approx(2 * (2 * r - 1) * L).epsilon(1e-12));
        CHECK(std::abs(closed.lambda_hat - 2.0) <= 1e-9);
        CHECK(std::abs(closed.lambda - 0.75) <= 1e-9);
        CHECK(std::abs(numeric.lambda - closed.lambda) <= 1e-9);
        CHECK_FALSE(closed.degenerate);
        CHECK_FALSE(closed.lambda_hat_unbounded);
    }
}

TEST_CASE("identical states give lambda zero") {
    const Instance g = build_symmetric_game(0.7);
    const auto res = lambda_opt(g.states[kGameF0], g.states[kGameF0]);
    CHECK(res.lambda == 0.0);
    CHECK(res.m11 == 0.0);
    CHECK(res.msw == 0.0);
    CHECK(lambda_opt_numeric(g.states[kGameF0], g.states[kGameF0]).lambda == 0.0);
}

TEST_CASE("lambda lies in (1/2, 1) or is zero, unless flagged degenerate") {
    Rng rng(17);
    int interior = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto f0 = random_binary_model(rng);
        const auto f1 = random_binary_model(rng);
        const auto res = lambda_opt(f0, f1);
        const auto num = lambda_opt_numeric(f0, f1);
        if (res.degenerate) {
            CHECK(res.lambda == 1.0);
            CHECK(res.lambda_hat_unbounded);
            CHECK(res.m11 >= 0.0);
            continue;
        }
        CHECK((res.lambda == 0.0 || (res.lambda > 0.5 && res.lambda < 1.0)));
        CHECK(std::abs(num.lambda - res.lambda) <= 1e-9);
        if (res.lambda > 0.0) ++interior;
    }
    CHECK(interior > 0);
}

TEST_CASE("game increments match the two-point closed forms") {
    const double r = 0.7;
    const Instance g = build_symmetric_game(r);
    const auto& f0 = g.states[kGameF0];
    const auto& f1 = g.states[kGameF1];
    const double L = std::log(r / (1 - r));
    const auto x11 = game_increment(f0, f1, 1, 1);
    REQUIRE(x11.size() == 2);
    CHECK(x11.values()[0] == doctest::Approx(-L));
    CHECK(x11.probs()[0] == doctest::Approx(r));
    const auto x10 = game_increment(f0, f1, 1, 0);
    CHECK(x10.mean() == doctest::Approx((2 * r - 1) * L));
    CHECK(game_increment(f0, f1, 0, 1).mean() == doctest::Approx((2 * r - 1) * L));
}

TEST_CASE("theorem payoff formula") {
    const std::vector<double> all_f1{0.0, 1.0};
    CHECK(theorem2_payoff(all_f1, 0.3, 0.6) == 1.0);
    const std::vector<double> half{0.5, 0.5};
    CHECK(theorem2_payoff(half, 0.6, 0.75) == doctest::Approx(0.725));
    double prev = -1.0;
    for (double q = 0.0; q <= 1.0; q += 0.1) {
        const double v = theorem2_payoff(half, q, 0.75);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(theorem2_payoff(std::vector<double>{0.4, 0.6}, 0.5, 0.75) >
          theorem2_payoff(std::vector<double>{0.5, 0.5}, 0.5, 0.75));
    CHECK(theorem2_payoff(half, 0.5, 0.8) > theorem2_payoff(half, 0.5, 0.7));
    CHECK_THROWS_AS(theorem2_payoff(half, 1.5, 0.75), std::invalid_argument);
    CHECK_THROWS_AS(theorem2_payoff(std::vector<double>{0.5, 0.6}, 0.5, 0.75), std::invalid_argument);
}

TEST_CASE("block schedule") {
    // Block(2,1): period 2 of each block proposes 0
    CHECK(block_proposal(2, 1, 1) == 1);
    CHECK(block_proposal(2, 1, 2) == 0);
    CHECK(block_proposal(2, 1, 3) == 1);
    CHECK(block_proposal(2, 1, 5) == 0);
    CHECK(block_frequency(2, 1) == doctest::Approx(2.0 / 3.0));
    for (const auto& [t1, t2] : std::vector<std::pair<int, int>>{{2, 1}, {4, 3}, {8, 7}, {6, 5}, {10, 1}}) {
        const int period = t1 + t2;
        for (int blocks : {1, 3, 17}) {
            int count = 0;
            for (long t = 1; t <= static_cast<long>(blocks) * period; ++t) count += block_proposal(t1, t2, t);
            CHECK(count == blocks * (t1 / 2 + t2));
        }
        CHECK(block_frequency(t1, t2) == doctest::Approx((t1 / 2.0 + t2) / period));
    }
}

TEST_CASE("smallest block pinned against an exhaustive scan") {
    CHECK(smallest_block(0.74) == std::pair<int, int>{8, 7});
    CHECK(scan_smallest_block(73, 74) == std::pair<int, int>{8, 7});
    CHECK(smallest_block(0.73) == std::pair<int, int>{6, 5});
    CHECK(scan_smallest_block(72, 73) == std::pair<int, int>{6, 5});
    for (int hi = 55; hi <= 99; ++hi) CHECK(smallest_block(hi / 100.0) == scan_smallest_block(hi - 1, hi));
    CHECK_THROWS_AS(smallest_block(0.5), std::runtime_error);
}

TEST_CASE("strategy validation") {
    CHECK_THROWS_AS(PrincipalStrategy::block(3, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PrincipalStrategy::block(2, 0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PrincipalStrategy::mirror(0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PrincipalStrategy::threshold_composite(0.5, PrincipalStrategy::mirror(1),
                                                           PrincipalStrategy::always_propose())
                        .validate(),
                    std::invalid_argument);
    CHECK_NOTHROW(PrincipalStrategy::learning_wrapper(100, 0.01, PrincipalStrategy::mirror(1),
                                                      PrincipalStrategy::always_propose())
                      .validate());
    const auto ltp = PrincipalStrategy::learn_then_propose(2.0);
    CHECK(ltp.kind == Kind::ThresholdComposite);
    REQUIRE(ltp.children.size() == 2);
    CHECK(ltp.children[0].kind == Kind::StatusQuo);
    CHECK(ltp.children[1].kind == Kind::AlwaysPropose);
    CHECK_FALSE(PrincipalStrategy::block(8, 7).describe().empty());
}

TEST_CASE("sigma eps construction") {
    const Instance g = build_symmetric_game(0.7);
    const auto lam = lambda_opt(g.states[kGameF0], g.states[kGameF1]);
    const auto s = build_sigma_eps(g, -1.0, 0.73, lam);
    CHECK(s.kind == Kind::ThresholdComposite);
    REQUIRE(s.children.size() == 2);
    CHECK(s.children[0].kind == Kind::Mirror);
    CHECK(s.children[1].kind == Kind::Block);
    CHECK(s.children[1].t1 == 6);
    CHECK(s.children[1].t2 == 5);
    CHECK(s.trigger > 1.0);
    const auto tighter = build_sigma_eps(g, -1.0, 0.73, lam, 1e-4);
    CHECK(tighter.trigger > s.trigger);
    CHECK_THROWS_AS(build_sigma_eps(g, -1.0, 0.5, lam), std::invalid_argument);
    CHECK_THROWS_AS(build_sigma_eps(g, -1.0, 0.76, lam), std::invalid_argument);
    CHECK_THROWS_AS(build_sigma_eps(g, 0.5, 0.73, lam), std::invalid_argument);
}

TEST_CASE("cycle increments of the steady strategies") {
    const Instance g = build_symmetric_game(0.7);
    const auto& f0 = g.states[kGameF0];
    const auto& f1 = g.states[kGameF1];
    const auto mirror = cycle_increment(g, PrincipalStrategy::mirror(1), kGameF0);
    CHECK(mirror.period == 2);
    CHECK(mirror.proposal_frequency == doctest::Approx(0.5));
    const auto pair = convolve(game_increment(f0, f1, 1, 0), game_increment(f0, f1, 0, 1));
    REQUIRE(mirror.rv.size() == pair.size());
    for (std::size_t i = 0; i < pair.size(); ++i) {
        CHECK(mirror.rv.values()[i] == doctest::Approx(pair.values()[i]));
        CHECK(mirror.rv.probs()[i] == doctest::Approx(pair.probs()[i]));
    }
    const auto block = cycle_increment(g, PrincipalStrategy::block(2, 1), kGameF0);
    CHECK(block.period == 3);
    CHECK(block.proposal_frequency == doctest::Approx(2.0 / 3.0));
    const auto always = cycle_increment(g, PrincipalStrategy::always_propose(), kGameF0);
    CHECK(always.rv.mean() == doctest::Approx(game_increment(f0, f1, 1, 1).mean()));
    CHECK(escape_bound(mirror, 10.0, 0.0) < escape_bound(mirror, 5.0, 0.0));
    CHECK(escape_bound(always, 10.0, 0.0) == 1.0);
}

TEST_CASE("horizon one gives a zero-one payoff and an unreliable q estimate") {
    const Instance g = build_symmetric_game(0.7);
    const auto res = simulate_game(g, PrincipalStrategy::mirror(1), Myopic{}, GameMode::Auxiliary, kGameF0,
                                   small_options(1, 20));
    for (const auto& run : res.runs) CHECK((run.payoff_freq == 0.0 || run.payoff_freq == 1.0));
    const auto q = estimate_qstar(g, {PrincipalStrategy::mirror(1)}, Myopic{}, small_options(5, 4));
    CHECK_FALSE(q.reliable);
    CHECK_THROWS_AS(simulate_game(g, PrincipalStrategy::mirror(1), Myopic{}, GameMode::Auxiliary, kGameF0,
                                  small_options(0, 1)),
                    std::invalid_argument);
}

TEST_CASE("always proposing in the favourable state converges to full acceptance") {
    SymmetricGameOptions so;
    so.prior_f1 = 0.7;
    const Instance g = build_symmetric_game(0.7, so);
    const auto res = simulate_game(g, PrincipalStrategy::always_propose(), Myopic{}, GameMode::Auxiliary, kGameF1,
                                   small_options(20000, 20));
    CHECK(res.payoff_freq > 0.95);
    const auto ltp = simulate_game(g, PrincipalStrategy::learn_then_propose(1.0), Myopic{}, GameMode::Auxiliary,
                                   kGameF1, small_options(20000, 20));
    CHECK(ltp.payoff_freq > 0.95);
}

TEST_CASE("mirror in the unfavourable state proposes half the time once absorbed") {
    const Instance g = build_symmetric_game(0.7);
    const auto res = simulate_game(g, PrincipalStrategy::mirror(1), Myopic{}, GameMode::Auxiliary, kGameF0,
                                   small_options(20000, 40));
    std::size_t n_hit = 0;
    for (const auto& run : res.runs) {
        const auto d = static_cast<long>(run.n_switch_01) - static_cast<long>(run.n_switch_10);
        CHECK(std::abs(d) <= 1);
        CHECK(run.payoff_freq >= 0.0);
        CHECK(run.payoff_freq <= 1.0);
        if (!run.estar_hit) continue;
        ++n_hit;
        CHECK(run.proposal_freq_tail == doctest::Approx(0.5).epsilon(0.001));
        CHECK(run.payoff_freq == doctest::Approx(0.5).epsilon(0.001));
    }
    CHECK(n_hit > 0);
    CHECK(res.frac_certified <= res.frac_estar_hit);
}

TEST_CASE("a prior deep in the acceptance region is certified under mirror") {
    SymmetricGameOptions so;
    so.prior_f1 = 1.0 - 1e-12;
    const Instance g = build_symmetric_game(0.7, so);
    const auto q = estimate_qstar(g, {PrincipalStrategy::always_propose(), PrincipalStrategy::mirror(1)}, Myopic{},
                                  small_options(2000, 20));
    CHECK(q.q_hat >= 0.95);
    CHECK(q.best == 1);
    CHECK(q.candidates[0].q == 0.0);
}

TEST_CASE("auxiliary game: q-hat bounds, mirror optimality and sigma eps") {
    const Instance g = build_symmetric_game(0.7);
    const auto lam = lambda_opt(g.states[kGameF0], g.states[kGameF1]);
    const auto opts = small_options(20000, 60);
    const auto cands = default_candidates(g, lam);
    const auto q = estimate_qstar(g, cands, Myopic{}, opts);
    REQUIRE(q.reliable);
    const auto mirror = std::find_if(q.candidates.begin(), q.candidates.end(),
                                     [](const CandidateEstimate& c) { return c.strategy.kind == Kind::Mirror; });
    REQUIRE(mirror != q.candidates.end());
    for (const auto& c : q.candidates) CHECK(mirror->q >= c.q - 2.0 * c.std_error);

    for (const auto& c : cands) {
        const auto res = simulate_game(g, c, Myopic{}, GameMode::Auxiliary, kGameF0, opts);
        CHECK(res.payoff_freq <= q.q_hat * lam.lambda + 3.0 * res.payoff_stderr + 0.02);
    }

    const auto sigma = build_sigma_eps(g, -1.0, 0.73, lam);
    const auto res = simulate_game(g, sigma, Myopic{}, GameMode::Auxiliary, kGameF0, opts);
    CHECK(res.payoff_freq >= q.q_hat * 0.73 - 3.0 * res.payoff_stderr - 0.02);
    REQUIRE(res.lambda_achieved.has_value());
    CHECK(*res.lambda_achieved == doctest::Approx(8.0 / 11.0));

    const auto wrapper = PrincipalStrategy::learning_wrapper(500, 0.01, sigma, PrincipalStrategy::always_propose());
    const auto sym = simulate_game_prior_weighted(g, wrapper, Myopic{}, GameMode::Symmetric, opts);
    REQUIRE(sym.lambda_achieved.has_value());
    REQUIRE(sym.per_state.size() == 2);
    const std::vector<double> pi0{0.5, 0.5};
    CHECK(std::abs(sym.payoff_freq - theorem2_payoff(pi0, q.q_hat, *sym.lambda_achieved)) <=
          3.0 * sym.payoff_stderr);
}

TEST_CASE("game ensembles are identical across thread counts") {
    const Instance g = build_symmetric_game(0.7);
    auto o = small_options(3000, 8);
    o.threads = 1;
    const auto a = simulate_game(g, PrincipalStrategy::mirror(1), Myopic{}, GameMode::Auxiliary, kGameF0, o);
    o.threads = 3;
    const auto b = simulate_game(g, PrincipalStrategy::mirror(1), Myopic{}, GameMode::Auxiliary, kGameF0, o);
    CHECK(a.payoff_freq == b.payoff_freq);
    CHECK(a.payoff_stderr == b.payoff_stderr);
    for (std::size_t i = 0; i < a.runs.size(); ++i) CHECK(a.runs[i].terminal_llr == b.runs[i].terminal_llr);
}
