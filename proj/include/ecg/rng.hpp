#pragma once

#include <cmath>
#include <cstdint>

namespace ecg::rng {

// splitmix64 step, used both for seeding and for stream derivation.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream-splitting rule: a substream is identified by up to three tag words
// (purpose, epoch, sample). Each tag is absorbed through one splitmix64 step,
// so streams for distinct (purpose, epoch, sample) triples are independent of
// the order samples are visited in.
inline uint64_t derive_stream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = seed;
    uint64_t h = splitmix64(s);
    s = h ^ a;
    h = splitmix64(s);
    s = h ^ b;
    h = splitmix64(s);
    s = h ^ c;
    return splitmix64(s);
}

// Stream purposes used across the project. Fixed constants so that trained
// artifacts are reproducible across builds.
enum Purpose : uint64_t {
    kInit = 1,      // weight initialization, tag b = layer index
    kShuffle = 2,   // per-epoch dataset shuffle, tag b = epoch
    kAugment = 3,   // per-sample augmentation, tags b = epoch, c = sample index
    kSample = 4,    // syngen per-sample generation, tag b = sample index
    kGeneric = 5,
    kSplit = 6,     // train/val split shuffle
};

// xoshiro256++ by Blackman & Vigna. All floating-point mappings below are
// fully specified bit-level procedures so that streams are portable.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit mantissa
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // multiply-shift rejection-free mapping is biased for huge n; all
        // uses here have n far below 2^32 where the bias is immaterial
        return uint64_t((__uint128_t(next()) * n) >> 64);
    }

    // standard normal via Box-Muller (no spare caching, deterministic)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        u1 = u1 > 0 ? u1 : 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

inline Xoshiro256pp stream(uint64_t seed, uint64_t purpose, uint64_t b = 0, uint64_t c = 0) {
    return Xoshiro256pp(derive_stream(seed, purpose, b, c));
}

} // namespace ecg::rng
