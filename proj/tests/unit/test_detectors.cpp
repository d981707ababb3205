#include <doctest.h>

#include <cmath>
#include <random>

#include "dtwcert/detectors.hpp"
#include "dtwcert/error.hpp"
#include "../support/helpers.hpp"
#include "../support/oracles.hpp"

using namespace dtwcert;
using testing::error_code_of;

namespace {

std::vector<Window> random_windows(std::mt19937_64& gen, std::size_t count, std::size_t T, std::size_t C) {
  std::vector<Window> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back({testing::random_matrix(gen, T, C), i});
  return out;
}

}  // namespace

TEST_CASE("knn examples") {
  std::mt19937_64 gen(1);
  const auto train = random_windows(gen, 20, 5, 2);
  const KnnScore knn(train, 1);
  CHECK(knn.score(train[7].values) == 0.0);

  const std::vector<Window> zero{{Matrix(4, 1, 0.0), 0}};
  Matrix unit(4, 1, 0.0);
  unit(2, 0) = 1.0;
  CHECK(KnnScore(zero, 1).score(unit) == 1.0);

  CHECK(error_code_of([] { KnnScore(std::vector<Window>{}, 1); }) == ErrorCode::EmptyTrainSet);
  CHECK(error_code_of([&] { KnnScore(train, 21); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("knn matches an exhaustive scan") {
  std::mt19937_64 gen(2);
  for (std::size_t k : {1ul, 3ul, 10ul}) {
    const auto train = random_windows(gen, 60, 6, 2);
    const KnnScore knn(train, k);
    for (int rep = 0; rep < 30; ++rep) {
      const auto x = testing::random_matrix(gen, 6, 2);
      const double got = knn.score(x);
      CHECK(got == doctest::Approx(oracle::knn_scan(train, k, x)).epsilon(1e-13));
      CHECK(got >= 0.0);
    }
  }
}

TEST_CASE("reconstruction score") {
  std::mt19937_64 gen(3);
  const auto train = random_windows(gen, 80, 4, 2);
  const ReconstructionScore pca(train, 3);
  CHECK(pca.effective_rank() == 3);

  // mean + combination of basis columns reconstructs exactly
  Eigen::VectorXd v = pca.mean() + 0.7 * pca.basis().col(0) - 1.3 * pca.basis().col(2);
  Matrix in_span(4, 2);
  for (std::size_t i = 0; i < 8; ++i) in_span.flat()[i] = v(static_cast<Eigen::Index>(i));
  CHECK(pca.score(in_span) <= 1e-9);

  const ReconstructionScore full(train, 8);
  for (const auto& w : train) CHECK(full.score(w.values) <= 1e-9);

  for (int rep = 0; rep < 20; ++rep) {
    const auto x = testing::random_matrix(gen, 4, 2);
    for (std::size_t rank : {1ul, 3ul, 6ul}) {
      const ReconstructionScore model(train, rank);
      CHECK(std::abs(model.score(x) - oracle::pca_residual(train, rank, x)) <= 1e-8);
    }
  }
  CHECK(error_code_of([&] { ReconstructionScore(train, 9); }) == ErrorCode::RankTooLarge);
}

TEST_CASE("reconstruction on a 64-dim flatten matches the Jacobi oracle") {
  std::mt19937_64 gen(4);
  const auto train = random_windows(gen, 120, 32, 2);
  const ReconstructionScore model(train, 10);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = testing::random_matrix(gen, 32, 2);
    CHECK(std::abs(model.score(x) - oracle::pca_residual(train, 10, x)) <= 1e-8);
  }
}

TEST_CASE("degenerate covariance lowers the rank") {
  std::vector<Window> flat;
  for (std::size_t i = 0; i < 10; ++i) {
    Matrix m(3, 1, 0.0);
    m(0, 0) = static_cast<double>(i);  // variance along one axis only
    flat.push_back({m, i});
  }
  const ReconstructionScore model(flat, 2);
  CHECK(model.degenerate());
  CHECK(model.effective_rank() == 1);
}

TEST_CASE("zmax and mean-abs") {
  ZmaxScore z;
  CHECK(z.score(Matrix(3, 2, 0.0)) == 0.0);
  Matrix m(3, 2, 0.0);
  m(1, 1) = 3.0;
  CHECK(z.score(m) == 3.0);
  m(2, 0) = -4.0;
  CHECK(z.score(m) == 4.0);
  MeanAbsScore mean_abs;
  CHECK(mean_abs.score(testing::col({0.5, 1.5})) == 1.0);
  CHECK(z.reentrant());
}

TEST_CASE("threshold selection") {
  std::vector<double> scores(100);
  for (std::size_t i = 0; i < 100; ++i) scores[i] = static_cast<double>(i);
  CHECK(select_threshold(scores, ThresholdMethod::TrainQuantile, 0.99).gamma == doctest::Approx(98.01));
  CHECK(quantile_linear(scores, 0.0) == 0.0);
  CHECK(quantile_linear(scores, 1.0) == 99.0);
  double prev = -1.0;
  for (double q = 0.0; q <= 1.0; q += 0.01) {
    const double g = select_threshold(scores, ThresholdMethod::TrainQuantile, q).gamma;
    CHECK(g >= prev);
    prev = g;
  }

  const std::vector<double> two{0.0, 1.0};
  const std::vector<int> labels{0, 1};
  CHECK(select_threshold(two, ThresholdMethod::BestF1Scan, 0.99, std::span<const int>(labels)).gamma == 0.5);
  const std::vector<int> benign{0, 0};
  CHECK(std::isinf(select_threshold(two, ThresholdMethod::BestF1Scan, 0.99, std::span<const int>(benign)).gamma));
  CHECK(error_code_of([] { select_threshold(std::vector<double>{}, ThresholdMethod::TrainQuantile); }) ==
        ErrorCode::EmptyScores);
  CHECK(parse_threshold_method("best-f1-scan") == ThresholdMethod::BestF1Scan);
}
