#pragma once

// Deterministic random-number core: seed derivation, the raw generator, and
// the bounded draw primitives everything else consumes.
//
// Reproducibility contract: a given 64-bit seed yields the same draw sequence
// on every platform and build of this library. The generator is xoshiro256**
// (Blackman & Vigna, public domain), seeded through splitmix64. Normals come
// from the polar Box-Muller transform; bounded normals are resampled until
// they land inside the bounds, never clipped (clipping would put probability
// atoms at the bounds).

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace agora {

namespace detail {

/// splitmix64 finalizer: a bijective 64-bit avalanche mixer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Identifies one replication of one grid cell. The derived seed is a pure
/// function of these four fields; the accounting regime is deliberately not
/// an input, so every regime replays the same noise for the same cell and
/// replication.
struct SeedSpec {
    std::uint64_t base_seed = 42;
    int i_ms = 0;  ///< grid index of m_S (0-based)
    int i_md = 0;  ///< grid index of m_D (0-based)
    int rep = 0;   ///< replication index (0-based)
};

/// Packs (i_ms, i_md, rep) into disjoint 21-bit lanes and avalanches the
/// packed word together with the base seed. mix64 is a bijection, so for a
/// fixed base seed the map is injective as long as each index stays below
/// 2^21 (the grid and replication ranges are nowhere near that).
inline std::uint64_t derive_seed(const SeedSpec& spec) noexcept {
    const std::uint64_t pack =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(spec.i_ms)) << 42) |
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(spec.i_md)) << 21) |
        static_cast<std::uint64_t>(static_cast<std::uint32_t>(spec.rep));
    return detail::mix64(detail::mix64(spec.base_seed) ^ pack);
}

/// xoshiro256** stream. Single-owner: a stream is never shared between
/// concurrent tasks; parallelism derives one independent stream per
/// (cell, replication, role) instead.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept {
        // splitmix64 expansion of the seed into the 256-bit state; cannot
        // produce the forbidden all-zero state.
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            w = detail::mix64(x);
        }
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// 53-bit mantissa draw in [0, 1).
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::array<std::uint64_t, 4> state_{};
};

/// A run seed is split into independent role streams so that draws consumed
/// conditionally in one part of the engine (the market tick) can never shift
/// the positions of the signal noise shared across regimes.
enum class StreamRole : std::uint64_t {
    signal = 0x7369676e616c2e31ULL,
    market = 0x6d61726b65742e31ULL,
};

inline RngStream make_stream(std::uint64_t run_seed, StreamRole role) noexcept {
    return RngStream(detail::mix64(run_seed ^ static_cast<std::uint64_t>(role)));
}

/// Anything that can stand in for RngStream in the draw primitives.
template <class T>
concept UniformRandomSource = requires(T t) {
    { t.next_u64() } -> std::convertible_to<std::uint64_t>;
    { t.next_double() } -> std::convertible_to<double>;
};

/// Uniform draw on [lo, hi). A degenerate interval (lo == hi) returns lo and
/// still consumes one raw draw, which keeps draw schedules aligned.
template <UniformRandomSource Rng>
double uniform(Rng& rng, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
    return lo + rng.next_double() * (hi - lo);
}

namespace detail {

/// One polar Box-Muller round: a pair of independent standard normals.
template <UniformRandomSource Rng>
std::pair<double, double> polar_normal_pair(Rng& rng) {
    for (;;) {
        const double u = 2.0 * rng.next_double() - 1.0;
        const double v = 2.0 * rng.next_double() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            const double f = std::sqrt(-2.0 * std::log(s) / s);
            return {u * f, v * f};
        }
    }
}

}  // namespace detail

/// Standard normal resampled until it lies in [lo, hi]. The result follows
/// the renormalized N(0,1) law on the interval. Requires lo < hi; sampling a
/// zero-width interval has probability zero and is rejected up front.
template <UniformRandomSource Rng>
double truncated_gaussian(Rng& rng, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("truncated_gaussian: requires lo < hi");
    for (;;) {
        const auto [a, b] = detail::polar_normal_pair(rng);
        if (a >= lo && a <= hi) return a;
        if (b >= lo && b <= hi) return b;
    }
}

}  // namespace agora
