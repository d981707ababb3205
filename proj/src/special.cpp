#include "dtwcert/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dtwcert/error.hpp"

namespace dtwcert {

namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// log(n!) - log(sqrt(2 pi n) (n/e)^n)
double stirlerr(double n) {
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  if (n <= 15.0) {
    // n! is exact in a double up to 15!
    double fact = 1.0;
    for (int i = 2; i <= static_cast<int>(n); ++i) fact *= i;
    return std::log(fact) - (n + 0.5) * std::log(n) + n - kLnSqrt2Pi;
  }
  const double nn = n * n;
  if (n > 500) return (s0 - s1 / nn) / n;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x / np) + np - x, without cancellation when x ~ np
double bd0(double x, double np) {
  if (std::abs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2 * x * v;
    v = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
  }
  return x * std::log(x / np) + np - x;
}

}  // namespace

double binomial_pmf(std::int64_t n, std::int64_t k, double q) {
  if (n < 0 || !(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::DomainError, "binomial_pmf(n=" + std::to_string(n) + ", q)");
  }
  if (k < 0 || k > n) return 0.0;
  const double p = q;
  const double r = 1.0 - q;
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (r == 0.0) return k == n ? 1.0 : 0.0;
  if (k == 0) {
    if (n == 0) return 1.0;
    return std::exp(p < 0.1 ? -bd0(dn, dn * r) - dn * p : dn * std::log1p(-p));
  }
  if (k == n) return std::exp(r < 0.1 ? -bd0(dn, dn * p) - dn * r : dn * std::log(p));
  const double lc = stirlerr(dn) - stirlerr(dk) - stirlerr(dn - dk) - bd0(dk, dn * p) -
                    bd0(dn - dk, dn * r);
  const double lf = 2.0 * kLnSqrt2Pi + std::log(dk) + std::log1p(-dk / dn);
  return std::exp(lc - 0.5 * lf);
}

double binomial_cdf(std::int64_t n, std::int64_t k, double q) {
  if (n < 0 || k < 0 || k > n || !(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::DomainError, "binomial_cdf(n=" + std::to_string(n) +
                                            ", k=" + std::to_string(k) + ")");
  }
  if (k == n || q == 0.0) return 1.0;
  if (q == 1.0) return 0.0;

  const double odds = q / (1.0 - q);
  if (static_cast<double>(k) < static_cast<double>(n) * q) {
    // lower tail, walking down from k; terms shrink monotonically below the mode
    double term = binomial_pmf(n, k, q);
    double sum = term;
    for (std::int64_t i = k; i > 0 && term > 0.0; --i) {
      term *= static_cast<double>(i) / (static_cast<double>(n - i + 1) * odds);
      sum += term;
      if (term <= sum * 1e-17) break;
    }
    return std::min(sum, 1.0);
  }
  // upper tail above k, walking up
  double term = binomial_pmf(n, k + 1, q);
  double sum = term;
  for (std::int64_t i = k + 1; i < n && term > 0.0; ++i) {
    term *= static_cast<double>(n - i) * odds / static_cast<double>(i + 1);
    sum += term;
    if (term <= sum * 1e-17) break;
  }
  return std::max(1.0 - sum, 0.0);
}

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double gaussian_icdf(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::DomainError, "gaussian_icdf requires 0 < q < 1");
  }
  const double dq = q - 0.5;
  double z = 0.0;
  if (std::abs(dq) <= 0.425) {
    const double r = 0.180625 - dq * dq;
    z = dq *
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
  } else {
    double r = dq < 0.0 ? q : 1.0 - q;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
    } else {
      r -= 5.0;
      z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    }
    if (dq < 0.0) z = -z;
  }
  // one Newton refinement against the erfc-based CDF
  const double density = std::exp(-0.5 * z * z) / (std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
  if (density > 0.0) z -= (gaussian_cdf(z) - q) / density;
  return z;
}

}  // namespace dtwcert
