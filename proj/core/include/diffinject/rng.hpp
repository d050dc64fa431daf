// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace diffinject {

// Deterministic RNG with explicit transforms so results do not depend on the
// standard library's distribution implementations. Every stream in the system
// is derived from (global seed, stage name, job index) via stream_seed().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform();
    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller (one spare cached).
    double normal();

    std::uint64_t next_u64() { return engine_(); }

    static std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view stage,
                                     std::uint64_t index = 0);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

} // namespace diffinject
