#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace diffserve {

uint64_t splitmix64(uint64_t x);

// FNV-1a, used to derive independent RNG streams from (seed, stream name).
uint64_t hash_name(std::string_view name);

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard, and all variate transforms below are hand-rolled, so a given
// (seed, name) pair yields the same sequence on every platform and build.
class RandomStream {
public:
    RandomStream() : eng_(0) {}
    RandomStream(uint64_t seed, std::string_view name)
        : eng_(splitmix64(seed ^ splitmix64(hash_name(name)))) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Exponential with the given rate; strictly positive.
    double exponential(double rate);

    // Standard normal via Box-Muller (both draws consumed, one returned,
    // keeping the stream position independent of caller call patterns).
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 eng_;
};

} // namespace diffserve
