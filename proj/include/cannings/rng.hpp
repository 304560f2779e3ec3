#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cannings {

using Rng = std::mt19937_64;

// Independent stream for a (seed, tag...) tuple; e.g. (master seed, cell, batch).
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * tags.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags) push(t);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// uniform on the open interval (0, 1)
inline double uniform01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_exponential(Rng& rng) { return -std::log(uniform01(rng)); }

// log of a Gamma(shape, 1) variate; stays finite for tiny shapes
inline double log_gamma_variate(double shape, Rng& rng) {
    if (shape >= 1.0) {
        // Marsaglia-Tsang
        double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
        std::normal_distribution<double> normal;
        for (;;) {
            double x = normal(rng), v = 1.0 + c * x;
            if (v <= 0) continue;
            v = v * v * v;
            double u = uniform01(rng);
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
        }
    }
    return log_gamma_variate(shape + 1.0, rng) + std::log(uniform01(rng)) / shape;
}

}  // namespace cannings
