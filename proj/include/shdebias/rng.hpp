// Deterministic random number generation.
//
// Everything stochastic in the library draws from this generator so that a
// given seed produces bit-identical results on every platform and at every
// thread count.  The standard <random> distributions are implementation
// defined, so the few distributions we need are spelled out here.
//
// The generator is a SplitMix64 stream: state advances by the 64-bit golden
// gamma and each output is finalized with the usual xor-shift-multiply mix.
// Independent streams for corpus items are derived by folding a path of
// integers (class index, item index, purpose tag) into a master seed with
// derive_seed, so parallel generation never shares a stream.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "shdebias/error.hpp"

namespace shdebias {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return detail::splitmix64_next(state_); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw PreconditionError("Rng::uniform: lo must be < hi");
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller; the second variate is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    // Rejection-sampled truncated normal on the open interval (lo, hi).
    double truncated_gaussian(double mean, double sigma, double lo, double hi) {
        if (!(lo < hi)) throw PreconditionError("Rng::truncated_gaussian: lo must be < hi");
        for (;;) {
            const double x = gaussian(mean, sigma);
            if (x > lo && x < hi) return x;
        }
    }

    // Unbiased uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw PreconditionError("Rng::below: n must be > 0");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        for (;;) {
            const std::uint64_t u = next_u64();
            if (u < limit) return u % n;
        }
    }

    // Uniform direction on the unit sphere.
    std::array<double, 3> unit_vector() {
        const double z = 1.0 - 2.0 * uniform();
        const double phi = 2.0 * std::numbers::pi * uniform();
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {s * std::cos(phi), s * std::sin(phi), z};
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Folds a path of stream indices into a master seed.  Each step keys the
// SplitMix finalizer with the previous hash xor the next component; the
// finalizer is a bijection, so within a step distinct components can never
// collide, and (master, {a, b}) differs from (master, {b, a}).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = master;
    std::uint64_t h = detail::splitmix64_next(state);
    for (std::uint64_t part : path) {
        std::uint64_t keyed = h ^ part;
        h = detail::splitmix64_next(keyed);
    }
    return h;
}

}  // namespace shdebias
