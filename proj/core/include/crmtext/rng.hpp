#ifndef CRMTEXT_RNG_HPP
#define CRMTEXT_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "crmtext/errors.hpp"

namespace crmtext {

/// Seeded random source. All randomness in a run flows through one of these,
/// and every derived quantity (uniform doubles, bounded ints, shuffles) is
/// produced by our own mappings so that identical seeds give identical
/// streams on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

/// Walker alias table for O(1) sampling from a fixed discrete distribution.
class AliasSampler {
public:
    AliasSampler() = default;

    /// weights must be non-negative with a positive sum.
    explicit AliasSampler(const std::vector<double>& weights) {
        std::size_t n = weights.size();
        if (n == 0) throw ConfigError("AliasSampler: empty weight vector");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ConfigError("AliasSampler: negative weight");
            total += w;
        }
        if (total <= 0.0) throw ConfigError("AliasSampler: weights sum to zero");

        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            std::size_t s = small.back(); small.pop_back();
            std::size_t l = large.back(); large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (std::size_t i : large) prob_[i] = 1.0;
        for (std::size_t i : small) prob_[i] = 1.0;  // numerical leftovers
    }

    std::size_t size() const { return prob_.size(); }

    std::size_t sample(Rng& rng) const {
        std::size_t i = rng.uniform_index(prob_.size());
        return rng.uniform() < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

}  // namespace crmtext

#endif  // CRMTEXT_RNG_HPP
