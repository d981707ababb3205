#include "dtwcert/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtwcert/error.hpp"
#include "dtwcert/metrics.hpp"

namespace dtwcert {

KnnScore::KnnScore(std::span<const Window> train, std::size_t k) : k_(k) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainSet, "knn needs training windows");
  if (k == 0 || k > train.size()) {
    throw Error(ErrorCode::InvalidConfig, "knn k must be in [1, " + std::to_string(train.size()) + "]");
  }
  count_ = train.size();
  dim_ = train.front().values.size();
  bank_.reserve(count_ * dim_);
  for (const auto& w : train) {
    if (w.values.size() != dim_) throw Error(ErrorCode::ShapeMismatch, "ragged training windows");
    bank_.insert(bank_.end(), w.values.flat().begin(), w.values.flat().end());
  }
}

double KnnScore::score(const Matrix& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::ShapeMismatch, "knn input dimension");
  const auto v = x.flat();
  std::vector<double> dist(count_);
  for (std::size_t r = 0; r < count_; ++r) {
    const double* row = bank_.data() + r * dim_;
    double sq = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double diff = v[d] - row[d];
      sq += diff * diff;
    }
    dist[r] = sq;
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k_; ++i) sum += std::sqrt(dist[i]);
  return sum / static_cast<double>(k_);
}

ReconstructionScore::ReconstructionScore(std::span<const Window> train, std::size_t rank) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainSet, "reconstruction needs training windows");
  const auto dim = static_cast<Eigen::Index>(train.front().values.size());
  if (rank == 0 || static_cast<Eigen::Index>(rank) > dim) {
    throw Error(ErrorCode::RankTooLarge,
                "rank " + std::to_string(rank) + " for dimension " + std::to_string(dim));
  }
  const auto count = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd data(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    const auto flat = train[static_cast<std::size_t>(r)].values.flat();
    if (static_cast<Eigen::Index>(flat.size()) != dim) {
      throw Error(ErrorCode::ShapeMismatch, "ragged training windows");
    }
    data.row(r) = Eigen::Map<const Eigen::RowVectorXd>(flat.data(), dim);
  }
  mean_ = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - mean_.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(count);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascending; keep the top `rank` that are numerically nonzero
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = std::max(values(dim - 1), 0.0);
  const double floor = top * 1e-12;
  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(rank) && values(dim - 1 - keep) > floor && top > 0.0) {
    ++keep;
  }
  degenerate_ = keep < static_cast<Eigen::Index>(rank);
  basis_ = eig.eigenvectors().rightCols(keep).rowwise().reverse();
}

double ReconstructionScore::score(const Matrix& x) const {
  if (static_cast<Eigen::Index>(x.size()) != mean_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "reconstruction input dimension");
  }
  const Eigen::VectorXd v =
      Eigen::Map<const Eigen::VectorXd>(x.flat().data(), mean_.size()) - mean_;
  if (basis_.cols() == 0) return v.norm();
  const Eigen::VectorXd coeff = basis_.transpose() * v;
  return (v - basis_ * coeff).norm();
}

double ZmaxScore::score(const Matrix& x) const {
  double best = 0.0;
  for (const double v : x.flat()) best = std::max(best, std::abs(v));
  return best;
}

double MeanAbsScore::score(const Matrix& x) const {
  double sum = 0.0;
  for (const double v : x.flat()) sum += std::abs(v);
  return x.empty() ? 0.0 : sum / static_cast<double>(x.size());
}

ThresholdMethod parse_threshold_method(std::string_view text) {
  if (text == "train-quantile") return ThresholdMethod::TrainQuantile;
  if (text == "best-f1-scan") return ThresholdMethod::BestF1Scan;
  throw Error(ErrorCode::InvalidConfig, "unknown threshold method '" + std::string(text) + "'");
}

std::string to_string(ThresholdMethod method) {
  return method == ThresholdMethod::TrainQuantile ? "train-quantile" : "best-f1-scan";
}

double quantile_linear(std::span<const double> scores, double q) {
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, "quantile of no scores");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::DomainError, "quantile must be in [0, 1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return sorted[below] + frac * (sorted[above] - sorted[below]);
}

Threshold select_threshold(std::span<const double> scores, ThresholdMethod method,
                           double quantile, std::optional<std::span<const int>> labels) {
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, "threshold selection needs scores");
  if (method == ThresholdMethod::TrainQuantile) {
    return {quantile_linear(scores, quantile), method};
  }

  if (!labels || labels->size() != scores.size()) {
    throw Error(ErrorCode::LengthMismatch, "best-f1-scan needs one label per score");
  }
  if (std::none_of(labels->begin(), labels->end(), [](int y) { return y == 1; })) {
    return {std::numeric_limits<double>::infinity(), method};
  }
  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() < 2) return {unique.front(), method};

  std::vector<int> pred(scores.size());
  double best_gamma = unique.front();
  double best_f1 = -1.0;
  for (std::size_t i = 0; i + 1 < unique.size(); ++i) {
    const double gamma = 0.5 * (unique[i] + unique[i + 1]);
    for (std::size_t j = 0; j < scores.size(); ++j) pred[j] = scores[j] > gamma ? 1 : 0;
    const double f1 = point_adjusted_f1(pred, *labels);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_gamma = gamma;
    }
  }
  return {best_gamma, method};
}

}  // namespace dtwcert
