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

#include "laglearn/instances.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "laglearn/bounds.hpp"

namespace laglearn {

namespace {

std::vector<Action> zero_pre_history(const Instance& inst) {
    return std::vector<Action>(static_cast<std::size_t>(inst.required_pre_history()), 0);
}

}  // namespace

Instance build_fig1(double eps, const Fig1Options& options) {
    if (!(eps > 0.0 && eps < 1.0 / 6.0)) throw std::invalid_argument("build_fig1: eps must lie in (0, 1/6)");
    if (!(options.p_star > 0.0 && options.p_star < 1.0)) throw std::invalid_argument("build_fig1: p_star must lie in (0,1)");
    const double e = eps;
    Instance inst;
    inst.states = {
        OutcomeModel({{e, 1.0 - 3.0 * e, 2.0 * e}, {1.0 - 2.0 * e, e, e}}),
        OutcomeModel({{2.0 / 3.0 - e, 1.0 / 3.0 - e, 2.0 * e}, {2.0 / 3.0 - e / 2.0, 1.0 / 3.0 - e / 2.0, e}}),
        OutcomeModel({{1.0 / 3.0 - e / 2.0, 2.0 / 3.0 - e / 2.0, e}, {1.0 / 3.0 - e, 2.0 / 3.0 - e, 2.0 * e}}),
    };
    inst.prior = {options.p_star, (1.0 - options.p_star) / 2.0, (1.0 - options.p_star) / 2.0};
    inst.true_state_index = kTrueIdx;
    inst.payoff = {0.0, 0.0, 1.0};
    inst.discount = 0.0;
    inst.true_lag = PointLag{options.k_star};
    inst.agent_lag = PointLag{options.k_prime};
    inst.pre_history = zero_pre_history(inst);
    inst.validate();
    return inst;
}

Instance build_construction(double zeta, double zeta_prime, const ConstructionOptions& options) {
    if (!(zeta > 0.0 && zeta < 0.25)) throw std::invalid_argument("build_construction: zeta must lie in (0, 1/4)");
    if (!(zeta_prime > 0.0 && zeta_prime < 0.25)) {
        throw std::invalid_argument("build_construction: zeta_prime must lie in (0, 1/4)");
    }
    const double z = zeta;
    Instance inst;
    inst.states = {
        OutcomeModel({{0.5, 0.5}, {1.0 - zeta_prime, zeta_prime}}),
        OutcomeModel({{1.0 - 2.0 * z, 2.0 * z}, {1.0 - z, z}}),
        OutcomeModel({{1.0 - 3.0 * z, 3.0 * z}, {1.0 - 4.0 * z, 4.0 * z}}),
    };
    inst.prior = {zeta_prime, (1.0 - zeta_prime) / 2.0, (1.0 - zeta_prime) / 2.0};
    inst.true_state_index = kTrueIdx;
    inst.payoff = {0.0, 1.0};
    inst.discount = 0.0;
    inst.true_lag = PointLag{options.k_star};
    inst.agent_lag = PointLag{options.k_prime};
    inst.pre_history = zero_pre_history(inst);
    inst.validate();
    return inst;
}

Instance build_symmetric_game(double r, const SymmetricGameOptions& options) {
    if (!(r > 0.5 && r < 1.0)) throw std::invalid_argument("build_symmetric_game: r must lie in (1/2, 1)");
    if (options.k_star < 1) throw std::invalid_argument("build_symmetric_game: k_star must be at least 1");
    if (!(options.prior_f1 > 0.0 && options.prior_f1 < 1.0)) {
        throw std::invalid_argument("build_symmetric_game: prior must have full support");
    }
    if (options.state > 1) throw std::invalid_argument("build_symmetric_game: state must be 0 (F0) or 1 (F1)");
    Instance inst;
    // rows indexed [a][y] with y = (y_b, y_g)
    inst.states = {
        OutcomeModel({{1.0 - r, r}, {r, 1.0 - r}}),
        OutcomeModel({{r, 1.0 - r}, {1.0 - r, r}}),
    };
    inst.prior = {1.0 - options.prior_f1, options.prior_f1};
    inst.true_state_index = options.state;
    inst.payoff = {0.0, 1.0};
    inst.discount = 0.0;
    inst.true_lag = PointLag{options.k_star};
    inst.agent_lag = PointLag{0};
    inst.pre_history = zero_pre_history(inst);
    inst.validate();
    return inst;
}

RecipeReport validate_theorem1_recipe(const Instance& inst, double kl_min, double drift_tol) {
    if (inst.states.size() != 3 || inst.n_actions() != 2) {
        throw std::invalid_argument("validate_theorem1_recipe: needs three states and two actions");
    }
    std::vector<std::size_t> others;
    for (std::size_t s = 0; s < 3; ++s) {
        if (s != inst.true_state_index) others.push_back(s);
    }
    const auto& fs = inst.true_state();
    const auto& f0 = inst.states[others[0]];
    const auto& f1 = inst.states[others[1]];

    RecipeReport rep;
    const double kl01 = kl_divergence(fs.row(0), fs.row(1));
    const double kl10 = kl_divergence(fs.row(1), fs.row(0));
    rep.kl_separation.value = std::max(kl01, kl10);
    rep.kl_separation.pass = rep.kl_separation.value >= kl_min;
    {
        std::ostringstream os;
        os << "KL(F*(.|0)||F*(.|1)) = " << kl01 << ", KL(F*(.|1)||F*(.|0)) = " << kl10 << ", threshold " << kl_min;
        rep.kl_separation.detail = os.str();
    }

    const double d0 = drift(fs, f0, f1, 0, 0);
    const double d1 = drift(fs, f0, f1, 1, 1);
    rep.closeness.value = std::min(-d0, d1);
    rep.closeness.pass = d0 < 0.0 && d1 > 0.0;
    {
        std::ostringstream os;
        os << "E log(F0/F1) under action 0: " << d0 << " (needs < 0); under action 1: " << d1 << " (needs > 0)";
        rep.closeness.detail = os.str();
    }

    rep.near_zero_drift.value = std::abs(d1);
    rep.near_zero_drift.pass = rep.near_zero_drift.value <= drift_tol;
    {
        std::ostringstream os;
        os << "|E[X_{1->1}]| = " << rep.near_zero_drift.value << ", tolerance " << drift_tol;
        rep.near_zero_drift.detail = os.str();
    }
    return rep;
}

}  // namespace laglearn
