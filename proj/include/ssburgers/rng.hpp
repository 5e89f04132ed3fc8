#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ssb {

/// SplitMix64 step. Used only to derive seeds, never as a sample stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Mix a root seed with stream labels (path index, repetition, arm tag, ...)
/// into one well-separated 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = root;
    splitmix64(s);
    s ^= 0xd1b54a32d192ed03ull * (a + 1);
    splitmix64(s);
    s ^= 0x8cb92ba72f3d8dd7ull * (b + 1);
    splitmix64(s);
    s ^= 0xaef17502108ef2d9ull * (c + 1);
    return splitmix64(s);
}

/// One random stream.
///
/// The generator is std::mt19937_64, whose output sequence is fixed by the
/// standard, so a (seed, draw count) pair identifies every sample exactly.
/// Gaussians use the Marsaglia polar method; the only libm calls involved
/// are sqrt and log.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Stream owned by path `index` of an ensemble rooted at `root_seed`.
    static Rng for_path(std::uint64_t root_seed, std::uint64_t index) {
        return Rng(derive_seed(root_seed, index));
    }

    std::uint64_t next_u64() {
        ++draws_;
        return engine_();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal sample.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Number of raw engine draws so far; lets tests assert a stream was
    /// never consulted.
    std::uint64_t draw_count() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ssb
