#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace herb {

// Seeded generator with a fixed, portable draw sequence.
//
// The 64-bit engine state is derived from (seed, stream) with two rounds of
// SplitMix64 and fed to std::mt19937_64, whose output sequence is fixed by the
// C++ standard. All derived draws (uniform, normal, integer ranges) are
// computed here rather than through <random> distributions, whose algorithms
// are implementation-defined.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();
    // Uniform double in [lo, hi); returns lo when lo == hi.
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();
    bool bernoulli(double p);
    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a 64-bit hash, used to derive stream ids from names.
std::uint64_t stream_id(std::string_view name);

}  // namespace herb
