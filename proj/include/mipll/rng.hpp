#pragma once

#include <cstdint>
#include <random>

#include "mipll/linalg.hpp"

namespace mipll {

// Deterministic random source. All stochastic code in the toolkit draws
// through this wrapper so that a seed fully determines every output byte;
// the samplers are hand-rolled because the std distributions are not
// pinned across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

    double uniform() {  // [0, 1)
        return (eng_() >> 11) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_cached_) {
            have_cached_ = false;
            return mean + stddev * cached_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = radius * std::sin(theta);
        have_cached_ = true;
        return mean + stddev * radius * std::cos(theta);
    }

    double exponential() {
        double u;
        do {
            u = uniform();
        } while (u <= 1e-300);
        return -std::log(u);
    }

    // Draw an index according to the given probability vector.
    int categorical(const Vec& probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    // Uniform sample from the k-simplex (Dirichlet with all-ones parameters).
    Vec dirichlet_uniform(int k) {
        Vec v(k);
        double s = 0.0;
        for (int i = 0; i < k; ++i) {
            v[i] = exponential();
            s += v[i];
        }
        for (double& x : v) x /= s;
        return v;
    }

    std::uint64_t next_u64() { return eng_(); }

    // Decorrelated seed for a sub-stream (restart index, grid point, ...).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace mipll
