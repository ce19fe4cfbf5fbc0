// Deterministic random streams for the Monte Carlo engine. Standard-library
// distributions are implementation-defined, so sampling is built directly on
// a xoshiro256++ integer stream; identical (seed, path) always yields the
// identical sequence.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "tbq/errors.hpp"

namespace tbq {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Independent substream addressed by a path of indices, e.g.
    // (alpha, beta, prepared index, shard).
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t sm = seed;
        std::uint64_t acc = splitmix64(sm);
        for (auto p : path) {
            sm = acc ^ (p + 0x9e3779b97f4a7c15ULL);
            acc = splitmix64(sm);
        }
        return Rng(acc);
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) {
            return (x << k) | (x >> (64 - k));
        };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform() < p;
    }

    // Knuth multiplication method; fine for the small means used here.
    std::uint64_t poisson(double mean) {
        if (mean < 0.0)
            throw Error(ErrorCode::domain_error, "Poisson mean must be >= 0");
        if (mean == 0.0) return 0;
        double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Box-Muller; one draw per call keeps the stream position predictable.
    double normal(double sigma) {
        if (sigma <= 0.0) return 0.0;
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Index into a cumulative distribution given by weights (need not be
    // normalized); returns weights.size() when the tail is hit.
    std::size_t pick(const std::vector<double>& weights, double total) {
        double x = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size();
    }

private:
    std::uint64_t s_[4];
};

}  // namespace tbq
