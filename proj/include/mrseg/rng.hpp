// Deterministic PCG32 generator. Identical seeds give identical sequences on
// every platform; std::mt19937 distributions are not guaranteed portable, so
// all sampling helpers live here.
#pragma once

#include <cmath>
#include <cstdint>

namespace mrseg {

class Pcg32 {
public:
    static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream)
        : state_(0), inc_((stream << 1u) | 1u) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    // Derives an independent per-item stream from a base seed, e.g. one per case.
    static Pcg32 derive(std::uint64_t seed, std::uint64_t index) {
        return Pcg32(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)), kDefaultStream + index);
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Unbiased integer in [0, bound) via Lemire-style rejection.
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    double next_double() {  // [0, 1), 53-bit resolution
        std::uint64_t hi = next_u32() >> 6;   // 26 bits
        std::uint64_t lo = next_u32() >> 5;   // 27 bits
        return static_cast<double>((hi << 27) | lo) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller, one value per call (the pair's second half is discarded
        // to keep the consumption pattern independent of call sites).
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 1e-300) u1 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(T* data, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = next_below(static_cast<std::uint32_t>(i));
            T tmp = data[i - 1];
            data[i - 1] = data[j];
            data[j] = tmp;
        }
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace mrseg
