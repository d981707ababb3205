#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dtwcert/error.hpp"
#include "dtwcert/smoothing.hpp"
#include "dtwcert/special.hpp"
#include "../support/helpers.hpp"

using namespace dtwcert;
using testing::error_code_of;

namespace {

ScoreSamples samples_of(std::vector<double> scores, SmoothingConfig cfg = {}) {
  std::sort(scores.begin(), scores.end());
  cfg.n = scores.size();
  return ScoreSamples{std::move(scores), cfg, 0};
}

// Direct scan over all indices.
std::size_t lower_scan(std::size_t n, double level, double alpha) {
  std::size_t best = 0;
  for (std::size_t q = 1; q <= n; ++q)
    if (binomial_cdf(static_cast<long>(n), static_cast<long>(q) - 1, level) <= alpha) best = q;
  return best;
}

std::size_t upper_scan(std::size_t n, double level, double alpha) {
  for (std::size_t q = 1; q <= n; ++q)
    if (binomial_cdf(static_cast<long>(n), static_cast<long>(q) - 1, level) >= 1.0 - alpha) return q;
  return n + 1;
}

}  // namespace

TEST_CASE("noise marginals") {
  for (auto kind : {NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::Uniform}) {
    for (double q = 0.01; q < 1.0; q += 0.01) {
      CHECK(noise_cdf(kind, noise_icdf(kind, q)) == doctest::Approx(q).epsilon(1e-12));
    }
    CHECK(shifted_level(kind, 0.5, 0.0) == doctest::Approx(0.5));
    CHECK(shifted_level(kind, 0.5, 0.3) > 0.5);
    CHECK(shifted_level(kind, 0.5, -0.3) < 0.5);
  }
  CHECK(noise_cdf(NoiseKind::Uniform, 1.5) == 1.0);
  CHECK(shifted_level(NoiseKind::Uniform, 0.5, 1.0) == 1.0);
  CHECK(noise_cdf(NoiseKind::Laplace, 0.0) == 0.5);
  CHECK(certified_norm(NoiseKind::Laplace) == NormOrder::L1);
  CHECK(certified_norm(NoiseKind::Uniform) == NormOrder::Linf);
  CHECK(parse_noise(to_string(NoiseKind::Laplace)) == NoiseKind::Laplace);
}

TEST_CASE("config validation") {
  SmoothingConfig c;
  CHECK(c.sigma == 0.5);
  CHECK(c.n == 1000);
  CHECK(c.percentile == 0.5);
  CHECK(c.alpha == 1e-3);
  c.n = 1;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  c = {};
  c.sigma = 0.0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  c = {};
  c.percentile = 1.0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("moving average denoiser") {
  const auto x = testing::col({0, 3, 6, 9});
  const auto y = apply_denoiser(Denoiser::MovingAverage3, x);
  CHECK(y == testing::col({1.5, 3, 6, 7.5}));
  CHECK(apply_denoiser(Denoiser::Identity, x) == x);
}

TEST_CASE("sample_scores") {
  const Matrix x(4, 2, 0.25);
  LambdaScore constant([](const Matrix&) { return 2.5; });
  SmoothingConfig cfg;
  cfg.n = 50;
  const auto s = sample_scores(constant, x, cfg, 0);
  CHECK(s.sorted.size() == 50);
  for (double v : s.sorted) CHECK(v == 2.5);

  LambdaScore first([](const Matrix& m) { return m(0, 0); });
  cfg.sigma = 1.0;
  cfg.n = 100000;
  cfg.seed = 9;
  const auto big = sample_scores(first, x, cfg, 4);
  CHECK(std::abs(empirical_percentile(big.sorted, 0.5) - 0.25) <= 0.02);
  CHECK(std::is_sorted(big.sorted.begin(), big.sorted.end()));

  cfg.n = 300;
  const auto a = sample_scores(first, x, cfg, 17);
  const auto b = sample_scores(first, x, cfg, 17);
  const auto c = sample_scores(first, x, cfg, 18);
  CHECK(a.sorted == b.sorted);
  CHECK(a.input_digest == b.input_digest);
  CHECK(a.sorted != c.sorted);

  LambdaScore nan([](const Matrix& m) { return m(0, 0) > 0 ? std::nan("") : 0.0; });
  CHECK(error_code_of([&] { sample_scores(nan, x, cfg, 0); }) == ErrorCode::NonFiniteScore);
  LambdaScore thrower([](const Matrix&) -> double { throw std::runtime_error("model crashed"); });
  CHECK(error_code_of([&] { sample_scores(thrower, x, cfg, 0); }) == ErrorCode::ScoreFnFailure);
}

TEST_CASE("laplace and uniform sampling scales") {
  LambdaScore first([](const Matrix& m) { return m(0, 0); });
  SmoothingConfig cfg;
  cfg.n = 200000;
  cfg.sigma = 2.0;
  cfg.noise = NoiseKind::Uniform;
  auto u = sample_scores(first, Matrix(1, 1), cfg, 0);
  CHECK(u.sorted.front() >= -2.0);
  CHECK(u.sorted.back() <= 2.0);
  CHECK(empirical_percentile(u.sorted, 0.75) == doctest::Approx(1.0).epsilon(0.02));
  cfg.noise = NoiseKind::Laplace;
  auto l = sample_scores(first, Matrix(1, 1), cfg, 0);
  // Laplace(0, 2) quartile = 2 ln 2
  CHECK(empirical_percentile(l.sorted, 0.75) == doctest::Approx(2.0 * std::log(2.0)).epsilon(0.02));
}

TEST_CASE("order indices match a direct scan") {
  for (std::size_t n : {2ul, 10ul, 101ul, 1000ul}) {
    for (double level : {0.05, 0.3, 0.5, 0.77, 0.99}) {
      for (double alpha : {1e-3, 0.05}) {
        CHECK(lower_order_index(n, level, alpha) == lower_scan(n, level, alpha));
        CHECK(upper_order_index(n, level, alpha) == upper_scan(n, level, alpha));
      }
    }
  }
}

TEST_CASE("percentile bounds at r = 0 bracket the empirical median") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal;
  std::vector<double> scores(1000);
  for (double& v : scores) v = normal(gen);
  const auto s = samples_of(scores);
  const auto b = percentile_bounds(s, 0.0);
  CHECK(b.lower_index == lower_scan(1000, 0.5, 1e-3));
  CHECK(b.upper_index == upper_scan(1000, 0.5, 1e-3));
  const double median = empirical_percentile(s.sorted, 0.5);
  CHECK(b.lower <= median);
  CHECK(b.upper >= median);
  CHECK(b.lower == s.sorted[b.lower_index - 1]);
}

TEST_CASE("two samples are vacuous") {
  const auto b = percentile_bounds(samples_of({0.1, 0.2}), 0.0);
  CHECK(b.lower_vacuous());
  CHECK(b.upper_vacuous(2));
  CHECK(std::isinf(b.lower));
  CHECK(std::isinf(b.upper));
  CHECK(certified_l2_radius(samples_of({5.0, 6.0}), 0.0).decision == Decision::Abstain);
}

TEST_CASE("bounds move outward with r") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  std::vector<double> scores(1000);
  for (double& v : scores) v = normal(gen);
  const auto s = samples_of(scores);
  double prev_lo = std::numeric_limits<double>::infinity();
  double prev_hi = -std::numeric_limits<double>::infinity();
  for (double r = 0.0; r < 3.0; r += 0.05) {
    const auto b = percentile_bounds(s, r);
    CHECK(b.lower <= prev_lo);
    CHECK(b.upper >= prev_hi);
    prev_lo = b.lower;
    prev_hi = b.upper;
  }
}

TEST_CASE("constant scores above gamma certify up to the vacuous bracket") {
  const auto s = samples_of(std::vector<double>(1000, 3.0));
  const auto cert = certified_l2_radius(s, 1.0);
  CHECK(cert.decision == Decision::Anomaly);
  CHECK(cert.radius > 0.0);
  CHECK(certifies_at(s, 1.0, Decision::Anomaly, cert.radius));
  CHECK_FALSE(certifies_at(s, 1.0, Decision::Anomaly, cert.radius + 1e-5));
  // the lower index reaches zero exactly where the bound turns vacuous
  CHECK(percentile_bounds(s, cert.radius + 1e-5).lower_vacuous());
}

TEST_CASE("benign radius agrees with a fine grid") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<double> scores(1000);
  for (double& v : scores) v = normal(gen);
  const auto s = samples_of(scores);
  const double gamma = 1.0;
  const auto cert = certified_l2_radius(s, gamma);
  REQUIRE(cert.decision == Decision::Benign);
  CHECK(cert.radius > 0.0);
  double grid = 0.0;
  for (double r = 0.0; r < 5.0; r += 1e-4) {
    if (!certifies_at(s, gamma, Decision::Benign, r)) break;
    grid = r;
  }
  CHECK(cert.radius >= grid - 1e-9);
  CHECK(cert.radius < grid + 1e-4 + 1e-9);
  CHECK_FALSE(certifies_at(s, gamma, Decision::Benign, cert.radius + 1e-5));
}

TEST_CASE("straddling samples abstain") {
  std::vector<double> scores(1000);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = static_cast<double>(i);
  const auto cert = certified_l2_radius(samples_of(scores), 499.5);
  CHECK(cert.decision == Decision::Abstain);
  CHECK(cert.radius == 0.0);
}

TEST_CASE("decision strings") {
  for (auto d : {Decision::Anomaly, Decision::Benign, Decision::Abstain}) CHECK(parse_decision(to_string(d)) == d);
}
