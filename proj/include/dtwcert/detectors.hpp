#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dtwcert/core.hpp"
#include "dtwcert/score_function.hpp"

namespace dtwcert {

/// Mean l2 distance from the flattened window to its k nearest training windows.
class KnnScore final : public ScoreFunction {
 public:
  KnnScore(std::span<const Window> train, std::size_t k);

  double score(const Matrix& x) const override;
  std::string name() const override { return "knn"; }

  std::size_t bank_size() const noexcept { return count_; }

 private:
  std::vector<double> bank_;  // count_ x dim_, row-major
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::size_t k_ = 1;
};

/// Residual norm after projecting the centered flattened window onto the leading
/// principal components of the training windows.
class ReconstructionScore final : public ScoreFunction {
 public:
  ReconstructionScore(std::span<const Window> train, std::size_t rank);

  double score(const Matrix& x) const override;
  std::string name() const override { return "reconstruction"; }

  /// Number of components actually kept (< requested when the covariance is degenerate).
  std::size_t effective_rank() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
  bool degenerate() const noexcept { return degenerate_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;  // dim x rank, orthonormal columns
  bool degenerate_ = false;
};

/// max |x[i,k]|; meaningful on normalized data.
class ZmaxScore final : public ScoreFunction {
 public:
  double score(const Matrix& x) const override;
  std::string name() const override { return "zmax"; }
};

/// mean |x[i,k]|; the in-process twin of the reference external scorer.
class MeanAbsScore final : public ScoreFunction {
 public:
  double score(const Matrix& x) const override;
  std::string name() const override { return "mean-abs"; }
};

enum class ThresholdMethod { TrainQuantile, BestF1Scan };

ThresholdMethod parse_threshold_method(std::string_view text);
std::string to_string(ThresholdMethod method);

struct Threshold {
  double gamma = 0.0;
  ThresholdMethod selection = ThresholdMethod::TrainQuantile;
};

/// Linear interpolation between order statistics at position q (n - 1).
double quantile_linear(std::span<const double> scores, double q);

/// TrainQuantile: q-quantile of benign scores. BestF1Scan: the midpoint between adjacent
/// sorted unique scores that maximizes point-adjusted F1 (first one on ties); +inf when
/// the labels contain no anomaly.
Threshold select_threshold(std::span<const double> scores, ThresholdMethod method,
                           double quantile = 0.99,
                           std::optional<std::span<const int>> labels = std::nullopt);

}  // namespace dtwcert
