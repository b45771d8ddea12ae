#ifndef DUALARM_RNG_HPP
#define DUALARM_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace dualarm {

/**
 * Rng — seeded xoshiro256++ generator with splitmix64 state expansion.
 *
 * All stochastic stages (dataset draws, weight init, reparameterization
 * noise, episode scripts) go through this class so that runs are
 * bit-for-bit reproducible across platforms and standard libraries.
 * std::uniform_real_distribution is implementation-defined and is
 * deliberately not used anywhere.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + uniform01() * (hi - lo);
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller. One draw per call, sine half discarded.
    double normal() {
        double u1 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /**
     * Independent child stream for (seed, stream_id). Used to make
     * per-sample / per-episode generation order-independent.
     */
    static Rng derive(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t x = seed;
        const std::uint64_t a = splitmix64(x);
        x = stream_id + 0x9e3779b97f4a7c15ULL;
        const std::uint64_t b = splitmix64(x);
        return Rng(a ^ rotl(b, 32));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace dualarm

#endif  // DUALARM_RNG_HPP
