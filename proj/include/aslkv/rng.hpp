#pragma once

#include <cstdint>

namespace aslkv {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter). Fills are order-independent, so parallel
// initialization produces the same bits as a serial one, on any platform.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        return splitmix64(splitmix64(seed ^ (stream * 0xd1342543de82ef95ULL)) + counter);
    }

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return double(bits(stream, counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in [-scale, +scale).
    double symmetric(std::uint64_t stream, std::uint64_t counter, double scale) const {
        return (uniform(stream, counter) * 2.0 - 1.0) * scale;
    }
};

}  // namespace aslkv
