#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace tabdistill {

// xoshiro256** (Blackman & Vigna) seeded through splitmix64. The stream is a
// pure function of the 64-bit seed, so runs reproduce bit-for-bit on every
// platform. Distributions are implemented here rather than taken from
// <random>, whose distribution algorithms are implementation-defined.
class Rng {
public:
    static constexpr int kAlgorithmVersion = 1;

    explicit Rng(std::uint64_t seed = 0) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    // Standard normal via Box-Muller (the second variate is discarded).
    double normal() noexcept;
    // Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent child stream keyed by `tag`; does not advance this stream.
    Rng derive(std::uint64_t tag) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// splitmix64 finalizer; exposed for seed mixing.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace tabdistill
