#pragma once

namespace evalstats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Upper-tail standard normal quantile: returns z with normal_cdf(z) = 1 - p.
/// Absolute error below 1e-9 for p in [1e-12, 1 - 1e-12]. Throws
/// std::invalid_argument unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace evalstats
