#include "mixmeter/stats.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>

namespace mixmeter::stats {

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

double chi2_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(df / 2.0, x / 2.0);
}

double normal_upper_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: p must be in (0,1)");
    return std::sqrt(2.0) * boost::math::erf_inv(1.0 - 2.0 * p);
}

double z_to_confidence(double z) { return std::erf(z / std::sqrt(2.0)); }

double chi2_critical(double df, double significance) {
    if (df <= 0 || !(significance > 0.0 && significance < 1.0))
        throw std::invalid_argument("chi2_critical: bad arguments");
    if (df >= 10.0) {
        // Wilson-Hilferty cube approximation.
        double z = normal_upper_quantile(significance);
        double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
        return df * t * t * t;
    }
    double lo = 0.0, hi = df + 20.0 * std::sqrt(2.0 * df) + 50.0;
    double target = 1.0 - significance;
    while (chi2_cdf(hi, df) < target) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-10 * (1.0 + hi); ++i) {
        double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, df) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double binomial_cdf(std::uint64_t k, std::uint64_t n, double p) {
    if (k >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    // P(X <= k) = I_{1-p}(n-k, k+1)
    return reg_inc_beta(double(n - k), double(k + 1), 1.0 - p);
}

}  // namespace mixmeter::stats
