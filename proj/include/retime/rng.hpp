// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace retime {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seeded generator with explicit, implementation-independent draw helpers.
/// All randomness in the library flows through this type so that every
/// pipeline stage is reproducible from a single seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    long uniform_int(long lo, long hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r = gen_();
        while (r >= limit) r = gen_();
        return lo + static_cast<long>(r % n);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child stream; advances this generator by one draw.
    Rng fork() { return Rng(gen_()); }

    /// Child stream keyed by an index, e.g. one stream per worker or example.
    Rng fork(std::uint64_t key) { return Rng(splitmix64(gen_() ^ splitmix64(key))); }

private:
    std::mt19937_64 gen_;
};

}  // namespace retime
