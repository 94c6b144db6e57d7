#pragma once

// Portable seeded random source. The standard distributions are
// implementation-defined, so draws are derived directly from mt19937_64 bits
// to keep realizations identical across toolchains.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace rischest {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for a named purpose under one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly-symmetric complex Gaussian with E|w|^2 = variance.
    std::complex<double> complex_normal(double variance = 1.0)
    {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    // k distinct indices from [0, n), in increasing order.
    std::vector<int> choose(int n, int k)
    {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i)
            idx[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace rischest
