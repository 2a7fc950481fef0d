#pragma once

// Seeded, splittable pseudo-random streams. Every consumer takes a 64-bit
// seed plus a worker index; (seed, worker) -> substream is pure, so runs are
// reproducible bit for bit and parallel phases can carve out disjoint
// streams. Transforms (Box-Muller, Marsaglia-Tsang) are implemented here
// rather than via std:: distributions, which are not pinned by the standard.

#include <cmath>
#include <cstdint>
#include <random>

#include "latrd/math.hpp"

namespace latrd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Mixes a base seed with a worker index into an independent stream seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t worker) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (worker + 0x9E3779B97F4A7C15ull));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t worker) {
        return Rng(derive_stream_seed(seed, worker));
    }

    // Uniform on the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached so streams stay deterministic.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform01()); }

    double laplace(double scale) {
        double u = uniform01() - 0.5;
        return u >= 0.0 ? -scale * std::log(1.0 - 2.0 * u) : scale * std::log(1.0 + 2.0 * u);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 handled by the
    // usual boost Gamma(shape + 1) * U^{1/shape}.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    std::mt19937_64 gen_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace latrd
