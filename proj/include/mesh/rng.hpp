#ifndef MESH_RNG_HPP
#define MESH_RNG_HPP

#include <cstdint>

namespace mesh {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Small deterministic generator (xorshift over a splitmix-seeded state).
// Hand-rolled so draws are identical across platforms and library versions;
// frozen test expectations depend on that.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(splitmix64(seed ^ 0xD1B54A32D192ED03ULL)) {
        if (state_ == 0)
            state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        state_ = x;
        return splitmix64(x);
    }

    // Uniform in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

// Derive an independent stream for (seed, purpose, index).
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    return RngStream(splitmix64(seed) ^ splitmix64(purpose * 0x100000001B3ULL + index));
}

} // namespace mesh

#endif
