#include <doctest.h>

#include <cmath>
#include <random>

#include "dtwcert/certify.hpp"
#include "dtwcert/error.hpp"
#include "../support/helpers.hpp"
#include "../support/oracles.hpp"

using namespace dtwcert;
using testing::col;
using testing::error_code_of;

namespace {

double l2(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.flat()[i] - b.flat()[i]) * (a.flat()[i] - b.flat()[i]);
  return std::sqrt(s);
}

SlackStats ramp_stats() {
  const auto x = col({0, 1, 2, 3});
  return slack_stats(x, keogh_envelope(x, 1));
}

}  // namespace

TEST_CASE("closed-form dtw radius") {
  const auto s = ramp_stats();
  CHECK(dtw_radius(1.5, s) == 0.0);
  CHECK(dtw_radius(2.0, s) == 0.0);
  CHECK(dtw_radius(2.5, s) == doctest::Approx(std::sqrt(3.25) - 1.0).epsilon(1e-15));
  CHECK(dtw_radius(2.5, s) == doctest::Approx(0.802776).epsilon(1e-6));

  const auto zero = slack_stats(Matrix(6, 1, 2.0), keogh_envelope(Matrix(6, 1, 2.0), 3));
  CHECK(dtw_radius(0.25, zero) == 0.25);
  CHECK(error_code_of([&] { dtw_radius(-0.1, s); }) == ErrorCode::NegativeInput);
}

TEST_CASE("dtw radius is continuous, monotone and below r") {
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = testing::random_matrix(gen, 3 + rep % 15, 1 + rep % 3);
    const auto st = slack_stats(x, keogh_envelope(x, 1 + rep % 4));
    double prev = 0.0;
    for (double r = 0.0; r < st.R + 3.0; r += 0.01) {
      const double e = dtw_radius(r, st);
      CHECK(e >= prev);
      if (st.M > 0) CHECK(e - prev <= 0.01 * st.R / st.M + 1e-12);
      if (r > st.R && st.M > 0) {
        CHECK(e > 0.0);
        CHECK(e < r);
      }
      prev = e;
    }
    CHECK(dtw_radius(st.R, st) == 0.0);
  }
}

TEST_CASE("widening w never increases e") {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = testing::random_walk(gen, 20, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t w = 1; w <= 8; ++w) {
      const double e = dtw_radius(4.0, slack_stats(x, keogh_envelope(x, w)));
      CHECK(e <= prev);
      prev = e;
    }
  }
}

TEST_CASE("worst-case witness") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = rep % 2 ? testing::random_walk(gen, 4 + rep % 16, 1 + rep % 3)
                           : testing::random_matrix(gen, 4 + rep % 16, 1 + rep % 3);
    const auto env = keogh_envelope(x, 1 + rep % 4);
    const auto st = slack_stats(x, env);
    const double r = st.R * (1.0 + 0.05 * (1 + rep % 10)) + 0.01;
    const auto witness = worst_case_witness(x, env, r);
    CHECK(std::abs(l2(x, witness) - r) <= 1e-9);
    CHECK(std::abs(keogh_lower_bound(env, witness, NormOrder::L2) - dtw_radius(r, st)) <= 1e-9);
  }
  const auto x = col({0, 1, 2, 3});
  const auto env = keogh_envelope(x, 1);
  CHECK(error_code_of([&] { worst_case_witness(x, env, 2.0); }) == ErrorCode::RadiusInsideSlack);

  const Matrix flat(5, 2, 1.0);
  const auto w0 = worst_case_witness(flat, keogh_envelope(flat, 2), 0.7);
  CHECK(w0(0, 0) == 1.7);
  CHECK(w0(0, 1) == 1.0);
}

TEST_CASE("witness ties go to the first row") {
  const auto x = col({0, 1, 2, 3});
  const auto w = worst_case_witness(x, keogh_envelope(x, 1), 2.5);
  // all rows have slack 1; row 0 carries the extra push
  CHECK(w(0, 0) > 1.0);
  CHECK(w(1, 0) == 2.0);
  CHECK(w(2, 0) == 3.0);
  CHECK(w(3, 0) == 2.0);
}

TEST_CASE("numeric infimum on the ramp is r - R, below the closed form") {
  const auto x = col({0, 1, 2, 3});
  const double oracle_value = oracle::numeric_infimum(x, 1, 2.5, 10000, 7);
  // infimum of LB_Keogh over the sphere is r - R, reached by scaling every slack
  CHECK(oracle_value == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(oracle_value < dtw_radius(2.5, ramp_stats()));

  const auto scaled = [&] {
    const auto st = ramp_stats();
    Matrix out = x;
    const auto env = keogh_envelope(x, 1);
    for (std::size_t i = 0; i < 4; ++i) {
      const bool up = env.upper(i, 0) - x(i, 0) >= x(i, 0) - env.lower(i, 0);
      out(i, 0) += (up ? 1.0 : -1.0) * st.delta(i, 0) * 2.5 / st.R;
    }
    return out;
  }();
  CHECK(l2(x, scaled) == doctest::Approx(2.5));
  CHECK(keogh_lower_bound(keogh_envelope(x, 1), scaled, NormOrder::L2) == doctest::Approx(0.5));
}

TEST_CASE("numeric infimum trivial cases") {
  const Matrix flat(5, 1, 0.3);
  CHECK(oracle::numeric_infimum(flat, 2, 1.0, 1000, 1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(oracle::numeric_infimum(col({0, 1, 2, 3}), 1, 1.5, 1000, 1) == 0.0);
}

TEST_CASE("conservative lp radius") {
  const auto s = ramp_stats();
  CHECK(lp_dtw_radius(1.0, s, NormOrder::L2) == 0.0);
  CHECK(lp_dtw_radius(2.5, s, NormOrder::L2) == doctest::Approx(0.5));
  CHECK(lp_dtw_radius(4.5, s, NormOrder::L1) == doctest::Approx(0.5));
  CHECK(lp_dtw_radius(1.5, s, NormOrder::Linf) == doctest::Approx(0.5));
  const Matrix flat(4, 1, 0.0);
  CHECK(lp_dtw_radius(0.3, flat, keogh_envelope(flat, 2), NormOrder::Linf) == 0.3);
  for (double r = 0.0; r < 6.0; r += 0.01) CHECK(lp_dtw_radius(r, s, NormOrder::L2) <= dtw_radius(r, s));
}

TEST_CASE("certify_window pipeline") {
  CertifyOptions opts;
  opts.warp_window = 2;
  SmoothingConfig cfg;
  cfg.n = 500;

  LambdaScore constant([](const Matrix&) { return 5.0; });
  const Window flat{Matrix(8, 1, 0.0), 7};
  const auto res = certify_window(flat, constant, cfg, 1.0, opts);
  CHECK(res.decision == Decision::Anomaly);
  CHECK(res.R == 0.0);
  CHECK(res.dtw_radius == res.l2_radius);
  CHECK(res.origin_index == 7);

  LambdaScore straddle([](const Matrix& m) { return m(0, 0); });
  const auto abstain = certify_window(flat, straddle, cfg, 0.0, opts);
  CHECK(abstain.decision == Decision::Abstain);
  CHECK(abstain.l2_radius == 0.0);
  CHECK(abstain.dtw_radius == 0.0);

  cfg.noise = NoiseKind::Laplace;
  const auto lap = certify_window(flat, constant, cfg, 1.0, opts);
  CHECK(lap.bound == DtwBound::Conservative);
  CHECK(lap.dtw_radius == lap.l2_radius);

  const auto a = certify_window(flat, straddle, cfg, -3.0, opts);
  const auto b = certify_window(flat, straddle, cfg, -3.0, opts);
  CHECK(a.decision == b.decision);
  CHECK(a.l2_radius == b.l2_radius);
}

TEST_CASE("dtw bound names") {
  CHECK(parse_dtw_bound("theorem") == DtwBound::Theorem);
  CHECK(parse_dtw_bound("conservative") == DtwBound::Conservative);
  CHECK(error_code_of([] { parse_dtw_bound("x"); }) == ErrorCode::InvalidConfig);
}
