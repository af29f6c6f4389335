#include "diffserve/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace diffserve {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t hash_name(std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double RandomStream::exponential(double rate) {
    if (!(rate > 0.0)) throw std::domain_error("exponential rate must be positive");
    // -log(1-U) with U in [0,1) never takes log of 0.
    return -std::log1p(-uniform()) / rate;
}

double RandomStream::normal() {
    // Box-Muller; u1 nudged away from 0 so the log is finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace diffserve
