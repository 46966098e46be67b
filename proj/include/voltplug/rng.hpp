#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace voltplug {

/// One splitmix64 step; also used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Seed for the k-th derived stream of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base ^ (0xa076bc9c1db72debull + index);
    return splitmix64(s);
}

/// Deterministic Gaussian source. mt19937_64 output is fully specified by the
/// standard and the Box-Muller mapping below is pinned here, so equal seeds
/// give equal sequences on every platform.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    /// Standard normal deviate.
    double next() {
        const double u1 = to_unit(engine_());
        const double u2 = to_unit(engine_());
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    // Map to (0,1), both endpoints excluded, so log() stays finite.
    static double to_unit(std::uint64_t x) {
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
};

} // namespace voltplug
