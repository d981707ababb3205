#include "dtwcert/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dtwcert/error.hpp"

namespace dtwcert {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> labels) {
  require_same_length(pred.size(), labels.size());
  std::vector<int> out(pred.begin(), pred.end());
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] != 1) {
      ++i;
      continue;
    }
    std::size_t end = i;
    bool hit = false;
    for (; end < labels.size() && labels[end] == 1; ++end) hit = hit || pred[end] == 1;
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i),
                       out.begin() + static_cast<std::ptrdiff_t>(end), 1);
    i = end;
  }
  return out;
}

double ConfusionMatrix::accuracy() const { return ratio(tp + tn, total()); }
double ConfusionMatrix::precision() const { return ratio(tp, tp + fp); }
double ConfusionMatrix::recall() const { return ratio(tp, tp + fn); }

double ConfusionMatrix::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> labels) {
  require_same_length(pred.size(), labels.size());
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (labels[i] == 1) {
      pred[i] == 1 ? ++cm.tp : ++cm.fn;
    } else {
      pred[i] == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

double pointwise_f1(std::span<const int> pred, std::span<const int> labels) {
  return confusion(pred, labels).f1();
}

double point_adjusted_f1(std::span<const int> pred, std::span<const int> labels) {
  const auto adjusted = point_adjust(pred, labels);
  return confusion(adjusted, labels).f1();
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share their average
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::SingleClass, "roc_auc needs both classes");
  }
  const double np = static_cast<double>(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

std::string to_string(AttackMode mode) {
  return mode == AttackMode::Evasion ? "evasion" : "availability";
}

std::vector<int> smoothed_predictions(std::span<const CertificationResult> results, double gamma) {
  std::vector<int> pred;
  pred.reserve(results.size());
  for (const auto& r : results) {
    switch (r.decision) {
      case Decision::Anomaly: pred.push_back(1); break;
      case Decision::Benign: pred.push_back(0); break;
      case Decision::Abstain: pred.push_back(r.empirical_score > gamma ? 1 : 0); break;
    }
  }
  return pred;
}

ConfusionMatrix certified_confusion(std::span<const CertificationResult> results,
                                    std::span<const int> labels, std::span<const int> pred,
                                    double t, AttackMode mode) {
  require_same_length(results.size(), labels.size());
  require_same_length(results.size(), pred.size());
  ConfusionMatrix cm;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t certified = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const bool robust = r.dtw_radius >= t;
    if (labels[i] == 1) {
      ++positives;
      if (mode == AttackMode::Evasion) {
        if (r.decision == Decision::Anomaly && robust) ++certified;
      } else {
        pred[i] == 1 ? ++cm.tp : ++cm.fn;
      }
    } else {
      ++negatives;
      if (mode == AttackMode::Availability) {
        if (r.decision == Decision::Benign && robust) ++certified;
      } else {
        pred[i] == 1 ? ++cm.fp : ++cm.tn;
      }
    }
  }
  if (mode == AttackMode::Evasion) {
    cm.tp = certified;
    cm.fn = positives - certified;
  } else {
    cm.tn = certified;
    cm.fp = negatives - certified;
  }
  return cm;
}

std::vector<double> budget_grid(double max, double step) {
  if (!(step > 0.0) || !(max >= 0.0)) throw Error(ErrorCode::InvalidConfig, "budget grid");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor(max / step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(static_cast<double>(i) * step);
  return grid;
}

CertifiedCurve certified_curve(std::span<const CertificationResult> results,
                               std::span<const int> labels, std::span<const int> pred,
                               std::span<const double> budgets, AttackMode mode) {
  CertifiedCurve curve;
  curve.attack_mode = mode;
  curve.budgets.assign(budgets.begin(), budgets.end());
  for (const double t : budgets) {
    const auto cm = certified_confusion(results, labels, pred, t, mode);
    curve.certified_accuracy.push_back(cm.accuracy());
    curve.certified_f1.push_back(cm.f1());
  }
  return curve;
}

RadiiStats radii_stats(std::span<const double> radii) {
  if (radii.empty()) throw Error(ErrorCode::EmptyResults, "no radii");
  RadiiStats s;
  std::size_t nonzero = 0;
  double sum = 0.0;
  for (const double e : radii) {
    sum += e;
    s.max = std::max(s.max, e);
    if (e > 0.0) ++nonzero;
  }
  const double n = static_cast<double>(radii.size());
  s.mean = sum / n;
  double ss = 0.0;
  for (const double e : radii) ss += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(ss / n);
  s.certified_proportion = static_cast<double>(nonzero) / n;
  return s;
}

RadiiStats radii_stats(std::span<const CertificationResult> results) {
  std::vector<double> radii;
  radii.reserve(results.size());
  for (const auto& r : results) radii.push_back(r.dtw_radius);
  return radii_stats(radii);
}

}  // namespace dtwcert
