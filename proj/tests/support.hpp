#pragma once

// Test-only statistical helpers, deliberately independent of the library's
// special-function implementations: plain lgamma summation and inverse
// transform sampling.

#include <cmath>
#include <cstdint>
#include <vector>

namespace testsupport {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

private:
    std::uint64_t state_;
};

inline double log_binom_pmf(std::uint64_t k, std::uint64_t n, double p) {
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
           std::lgamma(double(n - k) + 1) + double(k) * std::log(p) +
           double(n - k) * std::log1p(-p);
}

// P(X <= k), X ~ Binomial(n, p); direct summation around the mass.
inline double binom_cdf_oracle(std::int64_t k, std::uint64_t n, double p) {
    if (k < 0) return 0.0;
    if (std::uint64_t(k) >= n) return 1.0;
    double total = 0.0;
    // sum the smaller tail for stability
    double mean = double(n) * p;
    if (double(k) < mean) {
        for (std::int64_t i = 0; i <= k; ++i)
            total += std::exp(log_binom_pmf(std::uint64_t(i), n, p));
        return std::min(1.0, total);
    }
    for (std::uint64_t i = std::uint64_t(k) + 1; i <= n; ++i) {
        double term = std::exp(log_binom_pmf(i, n, p));
        total += term;
        if (term < 1e-18 && i > mean) break;
    }
    return std::max(0.0, 1.0 - total);
}

// Inverse-transform binomial sampler walking outward from the mode.
inline std::uint64_t binom_sample(Rng& rng, std::uint64_t n, double p) {
    double u = rng.unit();
    std::uint64_t k = std::uint64_t(double(n) * p);
    double cdf_k = binom_cdf_oracle(std::int64_t(k), n, p);
    if (u <= cdf_k) {
        // walk down
        double cum = cdf_k;
        while (k > 0) {
            double pmf = std::exp(log_binom_pmf(k, n, p));
            if (u > cum - pmf) return k;
            cum -= pmf;
            --k;
        }
        return 0;
    }
    double cum = cdf_k;
    while (k < n) {
        ++k;
        cum += std::exp(log_binom_pmf(k, n, p));
        if (u <= cum) return k;
    }
    return n;
}

}  // namespace testsupport
