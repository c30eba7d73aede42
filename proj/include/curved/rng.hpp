#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "curved/errors.hpp"
#include "curved/types.hpp"

namespace curved {

/// splitmix64 mixing step; used to scramble user seeds and derive substreams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random source. Wraps std::mt19937_64 but keeps every output
/// transform (uniform, normal, shuffle) in this header so that streams are
/// identical across standard libraries. std::uniform_real_distribution and
/// friends are implementation-defined and would break frozen test values.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

    /// Derives an independent substream seed, e.g. one per epoch.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
        return mix64(base ^ mix64(stream + 1));
    }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; draws come in cached pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform index in [0, n).
    Index index(Index n) {
        if (n <= 0) throw OutOfRangeError("Rng::index: n must be positive");
        return static_cast<Index>(eng_() % static_cast<std::uint64_t>(n));
    }

    /// Fisher-Yates shuffle with a pinned draw sequence.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (Index i = static_cast<Index>(v.size()) - 1; i > 0; --i) {
            const Index j = index(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace curved
