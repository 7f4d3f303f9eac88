#pragma once

#include <cmath>
#include <cstdint>

namespace unitax {

// splitmix64: cheap, well-mixed 64-bit generator. Used everywhere instead of
// <random> engines so that streams are reproducible across platforms and
// standard-library versions.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    // derive an independent stream, e.g. one per simulated image
    static Rng derive(uint64_t seed, uint64_t stream) {
        uint64_t s = seed;
        splitmix64(s);
        s ^= 0x9e3779b97f4a7c15ULL * (stream + 1);
        return Rng(s);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    // standard normal via Box-Muller (no cached spare; every call consumes
    // exactly two uniforms, which keeps streams easy to reason about)
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double gaussian(double sigma) { return sigma == 0.0 ? 0.0 : sigma * gaussian(); }

private:
    uint64_t state_;
};

} // namespace unitax
