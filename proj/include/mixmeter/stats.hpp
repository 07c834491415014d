#pragma once

#include <cstdint>

namespace mixmeter::stats {

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Chi-square CDF with df degrees of freedom.
double chi2_cdf(double x, double df);

// Upper-tail critical value: P(X > c) = significance. Wilson-Hilferty for
// df >= 10, bisection on the CDF below that.
double chi2_critical(double df, double significance);

// Upper-tail standard normal quantile.
double normal_upper_quantile(double p);

// Two-sided confidence level covered by +-z standard deviations.
double z_to_confidence(double z);

// P(X <= k) for X ~ Binomial(n, p).
double binomial_cdf(std::uint64_t k, std::uint64_t n, double p);

}  // namespace mixmeter::stats
