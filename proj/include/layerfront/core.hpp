#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace layerfront {

/// Bad user-supplied configuration (shapes, keys, field values).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside an algorithm (non-finite value, non-convergence).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A problem definition was evaluated outside its region of validity.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 seeds a xoshiro256** stream; the same seed
// produces the same stream on every platform, which the reproducibility
// contracts rely on (std::mt19937 + distributions would not guarantee that).
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // modulo bias is irrelevant at these sizes
        return next_u64() % n;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4]{};
};

/// Derives an independent stream seed from a base seed and a role tag, so
/// e.g. parameter init and point sampling never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view role) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ base;
    for (char c : role) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001b3ull;
    }
    std::uint64_t sm = h;
    return splitmix64(sm);
}

/// FNV-1a over bytes, used for content digests of resolved configs.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (char c : bytes) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[std::size_t(i)] = digits[v & 0xf];
    return out;
}

/// exp with the argument clamped to [-700, 700]; below the clamp the result
/// is exact, above it the true value would overflow anyway.
inline double clamped_exp(double x) {
    if (x > 700.0) x = 700.0;
    if (x < -700.0) x = -700.0;
    return std::exp(x);
}

inline constexpr double kPi = 3.141592653589793238462643383279502884;

} // namespace layerfront
