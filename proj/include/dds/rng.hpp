#pragma once

#include <cstdint>
#include <random>

namespace dds {

// SplitMix64 finalizer; also used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for stream `index` under `master`. Distinct indices give decorrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Seed drawn from std::random_device, for runs without an explicit seed.
std::uint64_t entropy_seed();

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();  // [0,1) with 53 random bits
    double normal();   // Box-Muller, no cached second variate
    std::uint64_t below(std::uint64_t n);  // uniform on {0,...,n-1}, unbiased

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace dds
