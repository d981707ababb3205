#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dtwcert/matrix.hpp"

namespace dtwcert {

/// An anomaly score f(x) over (T, C) windows. Higher means more anomalous.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  virtual double score(const Matrix& x) const = 0;

  /// Scores a batch; responses are in request order.
  virtual std::vector<double> score_batch(std::span<const Matrix> xs) const {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(score(x));
    return out;
  }

  /// True when concurrent calls to score() are safe.
  virtual bool reentrant() const { return true; }

  virtual std::string name() const = 0;
};

/// Wraps a plain callable; used for analytic test scorers.
class LambdaScore final : public ScoreFunction {
 public:
  LambdaScore(std::function<double(const Matrix&)> fn, std::string name = "lambda",
              bool reentrant = true)
      : fn_(std::move(fn)), name_(std::move(name)), reentrant_(reentrant) {}

  double score(const Matrix& x) const override { return fn_(x); }
  bool reentrant() const override { return reentrant_; }
  std::string name() const override { return name_; }

 private:
  std::function<double(const Matrix&)> fn_;
  std::string name_;
  bool reentrant_;
};

}  // namespace dtwcert
