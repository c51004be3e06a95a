#pragma once
// Counter-seeded random number streams.
//
// Every stochastic routine draws from a stream derived from a (master seed,
// stream index) pair.  Trajectory i of an ensemble always uses stream i, no
// matter which worker thread executes it, so ensemble output is reproducible
// byte for byte and independent of the thread count.  The generators are
// hand-rolled (xoshiro256++ seeded through splitmix64, polar-method normals)
// because the standard library leaves distribution output unspecified across
// implementations.

#include <cmath>
#include <cstdint>

namespace burgers_ldp {

/// splitmix64 mixer; used only for seeding and stream derivation.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256++ core generator.
class Xoshiro256 {
public:
    Xoshiro256() { seed(1); }
    explicit Xoshiro256(std::uint64_t s) { seed(s); }

    void seed(std::uint64_t s) {
        SplitMix64 mix{s};
        fill_from(mix);
    }

    void fill_from(SplitMix64& mix) {
        for (auto& w : s_) w = mix.next();
        // all-zero state is the one fixed point; nudge it away
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Statistically independent stream for trajectory `index` under `master_seed`.
inline Xoshiro256 derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    SplitMix64 mix{master_seed ^ (0xA0761D6478BD642FULL * (index + 1))};
    (void)mix.next();
    Xoshiro256 g;
    g.fill_from(mix);
    return g;
}

/// Standard normal variates via the polar method.
class NormalSampler {
public:
    explicit NormalSampler(Xoshiro256 gen) : gen_(gen) {}
    NormalSampler(std::uint64_t master_seed, std::uint64_t stream_index)
        : gen_(derive_stream(master_seed, stream_index)) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * gen_.uniform() - 1.0;
            v = 2.0 * gen_.uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    Xoshiro256& generator() { return gen_; }

private:
    Xoshiro256 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace burgers_ldp
