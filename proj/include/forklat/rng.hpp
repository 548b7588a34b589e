#pragma once

#include <cstdint>
#include <random>

namespace forklat {

// Decorrelated substream of a master seed. Replications and purposes
// (arrivals, service, policy, ...) each get their own stream so that event
// processing order never couples the draw sequences.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t replication,
                                 std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(replication >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

inline double uniform01(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Exponential inter-event gap with the given rate.
inline double exp_draw(std::mt19937_64& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace forklat
