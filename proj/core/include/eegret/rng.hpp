#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace eegret {

// 64-bit mixing function (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

// Stable 64-bit hash of a string (FNV-1a followed by mix64).
std::uint64_t hash_string(std::string_view s) noexcept;

// Derives a child key from a parent key and a list of integer tags.
std::uint64_t derive_key(std::uint64_t key, std::initializer_list<std::uint64_t> tags) noexcept;

// Counter-based generator: the n-th draw is mix64 of (key, n). Every draw is
// a pure function of (key, counter), so streams can be split by key without
// sharing state. Distributions are implemented here, not taken from <random>.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key ^ 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64() noexcept;
    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;
    // Standard normal via Box-Muller (cached second value).
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates permutation of [0, n) driven by rng.
std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng);

}  // namespace eegret
