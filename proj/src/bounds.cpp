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

#include "laglearn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace laglearn {

namespace {

constexpr double kMergeRelTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::abs(a - b) <= kMergeRelTol * std::max({1.0, std::abs(a), std::abs(b)}); }

struct Atom {
    double value;
    double prob;
};

void merge_sorted(std::vector<Atom>& atoms, std::vector<double>& values, std::vector<double>& probs) {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.value < r.value; });
    values.clear();
    probs.clear();
    for (const auto& at : atoms) {
        if (at.prob == 0.0) continue;
        if (!values.empty() && near(values.back(), at.value)) {
            probs.back() += at.prob;
        } else {
            values.push_back(at.value);
            probs.push_back(at.prob);
        }
    }
}

}  // namespace

FiniteRV::FiniteRV(std::vector<double> values, std::vector<double> probs) {
    if (values.size() != probs.size()) throw std::invalid_argument("FiniteRV: values and probs differ in length");
    if (values.empty()) throw std::invalid_argument("FiniteRV: empty support");
    double sum = 0.0;
    std::vector<Atom> atoms(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw std::invalid_argument("FiniteRV: non-finite value");
        if (!(probs[i] >= 0.0)) throw std::invalid_argument("FiniteRV: negative probability");
        sum += probs[i];
        atoms[i] = {values[i], probs[i]};
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "FiniteRV: probabilities sum to " << sum;
        throw std::invalid_argument(os.str());
    }
    merge_sorted(atoms, values_, probs_);
}

double FiniteRV::mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m += probs_[i] * values_[i];
    return m;
}

double FiniteRV::variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) v += probs_[i] * (values_[i] - m) * (values_[i] - m);
    return v;
}

double FiniteRV::log_mgf(double t) const noexcept {
    double shift = -kInf;
    for (double z : values_) shift = std::max(shift, t * z);
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += probs_[i] * std::exp(t * values_[i] - shift);
    return shift + std::log(s);
}

FiniteRV FiniteRV::negated() const { return scaled(-1.0); }

FiniteRV FiniteRV::scaled(double c) const {
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [c](double z) { return c * z; });
    return FiniteRV(std::move(v), probs_);
}

FiniteRV convolve(const FiniteRV& x, const FiniteRV& y) {
    std::vector<Atom> atoms;
    atoms.reserve(x.size() * y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            atoms.push_back({x.values()[i] + y.values()[j], x.probs()[i] * y.probs()[j]});
        }
    }
    std::vector<double> values;
    std::vector<double> probs;
    merge_sorted(atoms, values, probs);
    // Products of probabilities drift from 1 by rounding only; renormalise so
    // the constructor's 1e-12 check stays meaningful for long convolutions.
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& p : probs) p /= total;
    return FiniteRV(std::move(values), std::move(probs));
}

FiniteRV llr_increment_rv(const OutcomeModel& true_state, const OutcomeModel& f0, const OutcomeModel& f1, Action a,
                          Action a_prime) {
    const std::size_t ny = true_state.n_outcomes();
    if (f0.n_outcomes() != ny || f1.n_outcomes() != ny) throw std::invalid_argument("llr_increment_rv: |Y| mismatch");
    std::vector<double> values;
    std::vector<double> probs;
    for (std::size_t y = 0; y < ny; ++y) {
        const auto yo = static_cast<Outcome>(y);
        const double p0 = f0.prob(a_prime, yo);
        const double p1 = f1.prob(a_prime, yo);
        if (p0 <= 0.0 || p1 <= 0.0) {
            throw std::invalid_argument("llr_increment_rv: zero conditional probability, log ratio undefined");
        }
        values.push_back(std::log(p0) - std::log(p1));
        probs.push_back(true_state.prob(a, yo));
    }
    return FiniteRV(std::move(values), std::move(probs));
}

double drift(const OutcomeModel& true_state, const OutcomeModel& f0, const OutcomeModel& f1, Action a,
             Action a_prime) {
    return llr_increment_rv(true_state, f0, f1, a, a_prime).mean();
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return kInf;
        d += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return d;
}

double wald_exponent(const FiniteRV& rv) {
    const double mu = rv.mean();
    if (!(mu < 0.0)) {
        std::ostringstream os;
        os << "wald_exponent: mean must be strictly negative (got " << mu << ")";
        throw std::invalid_argument(os.str());
    }
    if (!(rv.max() > 0.0)) throw std::invalid_argument("wald_exponent: no positive value in the support");

    // log_mgf is convex, zero at 0 with negative slope: negative on (0, r*),
    // positive beyond.
    double hi = 1.0 / rv.max();
    while (rv.log_mgf(hi) <= 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int iter = 0; iter < 400 && (hi - lo) > 1e-15 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (rv.log_mgf(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double wald_tail_bound(const FiniteRV& rv, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("wald_tail_bound: level c must be positive");
    return std::exp(-wald_exponent(rv) * c);
}

double azuma_bound(std::span<const double> c_seq, double eps1) {
    if (c_seq.empty()) throw std::invalid_argument("azuma_bound: empty increment bound sequence");
    if (!(eps1 > 0.0)) throw std::invalid_argument("azuma_bound: eps1 must be positive");
    double ss = 0.0;
    for (double c : c_seq) {
        if (!(c > 0.0)) throw std::invalid_argument("azuma_bound: increment bounds must be positive");
        ss += c * c;
    }
    return std::exp(-eps1 * eps1 / (2.0 * ss));
}

ChernoffRate generalized_chernoff_rate(const FiniteRV& rv, double lambda, TailSide side) {
    const double mu = rv.mean();
    if (!(mu > 0.0)) throw std::invalid_argument("generalized_chernoff_rate: mean must be positive");
    if (side == TailSide::Upper && !(lambda > 1.0)) {
        throw std::invalid_argument("generalized_chernoff_rate: upper side needs lambda > 1");
    }
    if (side == TailSide::Lower && !(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("generalized_chernoff_rate: lower side needs lambda in (0,1)");
    }
    const double level = lambda * mu;
    ChernoffRate out;
    if ((side == TailSide::Upper && rv.max() < level) || (side == TailSide::Lower && rv.min() > level)) {
        out.value = kInf;
        out.infinite = true;
        out.argmax = kInf;
        return out;
    }

    const double sign = side == TailSide::Upper ? 1.0 : -1.0;
    auto g = [&](double t) { return sign * level * t - rv.log_mgf(sign * t); };

    // g is concave with g(0) = 0 and g'(0) > 0: double until it turns down.
    const double spread = std::max(rv.max() - rv.min(), 1e-300);
    double step = 1.0 / spread;
    double t_lo = 0.0;
    double t_mid = step;
    double g_mid = g(t_mid);
    double t_hi = 2.0 * step;
    while (g(t_hi) >= g_mid) {
        if (t_hi >= kChernoffTCap) {
            out.capped = true;
            t_hi = kChernoffTCap;
            break;
        }
        t_lo = t_mid;
        t_mid = t_hi;
        g_mid = g(t_mid);
        t_hi = std::min(2.0 * t_hi, kChernoffTCap);
    }
    if (out.capped) {
        out.argmax = kChernoffTCap;
        out.value = g(kChernoffTCap);
        return out;
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = t_lo;
    double b = t_hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c);
    double gd = g(d);
    while ((b - a) > 1e-10 * std::max(1.0, b)) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    out.argmax = 0.5 * (a + b);
    out.value = std::max(0.0, g(out.argmax));
    return out;
}

}  // namespace laglearn
