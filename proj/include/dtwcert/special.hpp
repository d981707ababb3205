#pragma once

#include <cstdint>

namespace dtwcert {

/// P[Bin(n, q) <= k]. Absolute error below 1e-12 for n <= 1e4.
double binomial_cdf(std::int64_t n, std::int64_t k, double q);

/// P[Bin(n, q) = k] via Loader's saddle-point expansion.
double binomial_pmf(std::int64_t n, std::int64_t k, double q);

/// Standard normal CDF.
double gaussian_cdf(double z);

/// Inverse standard normal CDF (Wichura AS241 plus one Newton step). Requires 0 < q < 1.
double gaussian_icdf(double q);

}  // namespace dtwcert
