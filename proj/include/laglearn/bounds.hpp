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

#include <span>
#include <vector>

#include "laglearn/core_model.hpp"

namespace laglearn {

/// Random variable with finite support. Values are kept sorted and values
/// closer than 1e-12 (relative) are merged, summing their probabilities.
class FiniteRV {
public:
    FiniteRV() = default;
    /// Throws std::invalid_argument on length mismatch, non-finite values,
    /// negative probabilities or probabilities not summing to 1 within 1e-12.
    FiniteRV(std::vector<double> values, std::vector<double> probs);

    static FiniteRV point(double value) { return FiniteRV({value}, {1.0}); }

    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return values_.size(); }

    double mean() const noexcept;
    double variance() const noexcept;
    double min() const noexcept { return values_.front(); }
    double max() const noexcept { return values_.back(); }

    /// log E[exp(t X)], evaluated with a max shift.
    double log_mgf(double t) const noexcept;

    FiniteRV negated() const;
    FiniteRV scaled(double c) const;

private:
    std::vector<double> values_;
    std::vector<double> probs_;
};

/// Distribution of X + Y for independent X and Y.
FiniteRV convolve(const FiniteRV& x, const FiniteRV& y);

/// log F0(y|a')/F1(y|a') with y ~ true_state(.|a). Throws
/// std::invalid_argument if F0 or F1 has a zero entry under a'.
FiniteRV llr_increment_rv(const OutcomeModel& true_state, const OutcomeModel& f0, const OutcomeModel& f1, Action a,
                          Action a_prime);

/// Mean of `llr_increment_rv`.
double drift(const OutcomeModel& true_state, const OutcomeModel& f0, const OutcomeModel& f1, Action a,
             Action a_prime);

/// KL(p || q) in nats; +infinity when q misses mass of p.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Unique r* > 0 with E[exp(r* Z)] = 1. Requires mean(Z) < 0 < max(Z).
double wald_exponent(const FiniteRV& rv);

/// exp(-r* c): bound on the probability that the random walk with increments
/// `rv` ever reaches c > 0.
double wald_tail_bound(const FiniteRV& rv, double c);

/// exp(-eps1^2 / (2 sum c_k^2)).
double azuma_bound(std::span<const double> c_seq, double eps1);

enum class TailSide { Upper, Lower };

struct ChernoffRate {
    double value = 0.0;
    /// Deterministic side: the sum can never cross lambda * mu * n.
    bool infinite = false;
    /// Search stopped at the t cap; `value` is the best found so far.
    bool capped = false;
    double argmax = 0.0;
};

inline constexpr double kChernoffTCap = 1e6;

/// Upper: max_{t>0} lambda mu t - ln E[e^{tX}] for lambda > 1.
/// Lower: max_{t>0} -lambda mu t - ln E[e^{-tX}] for lambda in (0,1).
/// Requires mean(X) > 0.
ChernoffRate generalized_chernoff_rate(const FiniteRV& rv, double lambda, TailSide side);

}  // namespace laglearn
