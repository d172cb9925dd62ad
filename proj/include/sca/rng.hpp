#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sca {

/// Counter-based random numbers: every draw is a pure function of
/// (seed, index, lane), so values do not depend on evaluation order.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

    constexpr std::uint64_t seed() const { return seed_; }

    constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t lane = 0) const {
        std::uint64_t h = mix(seed_ ^ 0x243f6a8885a308d3ULL);
        h = mix(h ^ (index + 0x9e3779b97f4a7c15ULL));
        h = mix(h ^ (lane * 0xd1b54a32d192ed03ULL + 0x13198a2e03707344ULL));
        return h;
    }

    /// Uniform in the open interval (0, 1).
    constexpr double uniform(std::uint64_t index, std::uint64_t lane = 0) const {
        return (static_cast<double>(bits(index, lane) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on lanes (2*lane, 2*lane+1).
    double normal(std::uint64_t index, std::uint64_t lane = 0) const {
        const double u1 = uniform(index, 2 * lane);
        const double u2 = uniform(index, 2 * lane + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, bound). Multiply-shift; bias is below 2^-64 * bound.
    std::uint64_t below(std::uint64_t bound, std::uint64_t index, std::uint64_t lane = 0) const {
        const unsigned __int128 wide = static_cast<unsigned __int128>(bits(index, lane)) * bound;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    /// Sub-generator for an independent stream, e.g. one per trial.
    constexpr CounterRng derive(std::uint64_t stream) const {
        return CounterRng(mix(seed_ + 0x632be59bd9b4e019ULL * (stream + 1)));
    }

private:
    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

} // namespace sca
