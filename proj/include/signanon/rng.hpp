// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>

#include "signanon/tensor.hpp"

namespace signanon {

// splitmix64 finalizer; the whole pipeline's determinism contract rests on
// these primitives, so no std:: distributions anywhere (their output is
// implementation-defined).
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) {
    return mix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
}

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a_doubles(const std::vector<double>& v, uint64_t h = kFnvOffset) {
    for (double d : v) {
        uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        h = fnv1a(&bits, sizeof(bits), h);
    }
    return h;
}

// splitmix64 stream + Box-Muller gaussians.
class DeterministicRng {
public:
    explicit DeterministicRng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline Grid gaussian_grid(int c, int h, int w, uint64_t seed, Space s = Space::latent) {
    Grid g(c, h, w, s);
    DeterministicRng rng(seed);
    for (double& v : g.data) v = rng.gaussian();
    return g;
}

// Counter-based gaussian: pure function of the key, no sequence state.
inline double hash_gaussian(uint64_t key) {
    DeterministicRng rng(key);
    return rng.gaussian();
}

} // namespace signanon
