// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace telm {

/// splitmix64 mixing step, used to derive independent seeds from
/// (base seed, stream indices) so that results do not depend on the
/// order in which parallel work items run.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return splitmix64(base); }

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t idx, Rest... rest) {
    return derive_seed(splitmix64(base) ^ (idx + 0x9e3779b97f4a7c15ull), rest...);
}

/// Seeded random stream. Uniform doubles are produced from the raw 64-bit
/// output (top 53 bits) instead of std::uniform_real_distribution, whose
/// output is implementation-defined; this keeps draws reproducible across
/// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

private:
    std::mt19937_64 gen_;
};

/// In-place Fisher-Yates shuffle driven by Rng (std::shuffle is
/// implementation-defined given the same engine).
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace telm
