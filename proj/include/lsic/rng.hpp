#pragma once

#include <cstdint>
#include <random>

namespace lsic {

// SplitMix64 finalizer; used to derive independent stream seeds from a run seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

// Named sub-streams of a run seed. Every consumer of randomness owns one.
enum class Stream : std::uint64_t {
    demand = 1,
    exploration = 2,
    evaluation = 3,
    init = 4,
    sampling = 5,
    bootstrap = 6,
    fg_cap = 7,
    curiosity = 8,
};

// mt19937_64 with portable draws. The std distributions are implementation
// defined, so uniform draws are built from raw engine output instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
    Rng(std::uint64_t seed, Stream stream)
        : engine_(derive_seed(seed, static_cast<std::uint64_t>(stream))) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller on the portable uniforms.
    double normal();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lsic
