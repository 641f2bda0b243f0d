#pragma once

#include <cstdint>

namespace mas {

/// 64-bit finalizer from SplitMix64; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// SplitMix64 generator (Steele, Lea & Flood, 2014).
///
/// Every random draw in the library goes through this class so that results
/// are reproducible across platforms and standard libraries. The distribution
/// helpers below are written out explicitly for the same reason: the
/// std:: distributions are implementation-defined.
///
/// Parallel loops never share a generator. Each work cell (pair, draw,
/// attempt, ...) derives its own stream with Rng::stream(seed, i, j), so the
/// numbers a cell sees do not depend on scheduling or thread count.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept;
    double uniform(double lo, double hi) noexcept;
    /// Standard normal via Box-Muller (one value per call).
    double normal() noexcept;
    /// Unbiased integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

private:
    std::uint64_t state_;
};

} // namespace mas
