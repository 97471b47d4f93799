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

#pragma once

#include <string>
#include <vector>

#include "laglearn/core_model.hpp"

namespace laglearn {

// State order for the three-state builders is {F*, F0, F1} with the true
// state at index 0; the two-state game is {F0, F1}.
inline constexpr std::size_t kTrueIdx = 0;
inline constexpr std::size_t kF0Idx = 1;
inline constexpr std::size_t kF1Idx = 2;

struct Fig1Options {
    double p_star = 0.01;
    int k_star = 1;
    int k_prime = 0;
};

/// Three outcomes, v = (0, 0, 1), two actions, delta = 0. Requires
/// eps in (0, 1/6).
Instance build_fig1(double eps, const Fig1Options& options = {});

struct ConstructionOptions {
    int k_star = 1;
    int k_prime = 0;
};

/// Binary-outcome cycling instance with prior ((zeta'), (1-zeta')/2, (1-zeta')/2)
/// over {F*, F0, F1}; both parameters in (0, 1/4).
Instance build_construction(double zeta, double zeta_prime, const ConstructionOptions& options = {});

struct SymmetricGameOptions {
    int k_star = 1;
    double prior_f1 = 0.5;
    /// Conditioning state written into true_state_index (0 = F0, 1 = F1).
    std::size_t state = 0;
};

inline constexpr std::size_t kGameF0 = 0;
inline constexpr std::size_t kGameF1 = 1;
inline constexpr Outcome kYBad = 0;
inline constexpr Outcome kYGood = 1;

/// Two states {F0, F1}, outcomes {y_b, y_g} with v = (0, 1), agent lag 0.
/// Requires r in (1/2, 1).
Instance build_symmetric_game(double r, const SymmetricGameOptions& options = {});

struct RecipeProperty {
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct RecipeReport {
    /// max of the two directed KL divergences between F*(.|0) and F*(.|1)
    RecipeProperty kl_separation;
    /// drift of log(F0/F1) negative under action 0, positive under action 1
    RecipeProperty closeness;
    /// |E[X_{1->1}(F0, F1)]| under F*(.|1)
    RecipeProperty near_zero_drift;
    bool all_pass() const noexcept { return kl_separation.pass && closeness.pass && near_zero_drift.pass; }
};

inline constexpr double kDefaultKlMin = 2.0;
inline constexpr double kDefaultDriftTol = 0.1;

/// Checks the three structural properties that drive persistent cycling.
/// The two non-true states, in index order, play F0 and F1. Throws
/// std::invalid_argument unless there are three states and two actions.
RecipeReport validate_theorem1_recipe(const Instance& inst, double kl_min = kDefaultKlMin,
                                      double drift_tol = kDefaultDriftTol);

}  // namespace laglearn
