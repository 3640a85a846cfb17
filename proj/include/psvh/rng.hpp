#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psvh {

// Seedable RNG with hand-rolled distributions so that streams are
// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derive an independent stream from a seed and up to two sub-ids.
    // Used to give every (shape, view) sample its own RNG so parallel
    // generation order cannot change the outputs.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t h = seed;
        h = mix(h ^ (a + 0x9e3779b97f4a7c15ULL));
        h = mix(h ^ (b + 0x9e3779b97f4a7c15ULL));
        return Rng(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1));
    }

    // Marsaglia polar method; one spare value cached.
    double normal(double mean = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sigma * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return mean + sigma * u * m;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace psvh
