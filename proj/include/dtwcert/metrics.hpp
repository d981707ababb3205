#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/certify.hpp"

namespace dtwcert {

/// Promotes every ground-truth anomaly segment that contains at least one hit.
std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> labels);

double pointwise_f1(std::span<const int> pred, std::span<const int> labels);
double point_adjusted_f1(std::span<const int> pred, std::span<const int> labels);

/// Mann-Whitney AUC with average ranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const;
  double precision() const;
  double recall() const;
  double f1() const;
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> labels);

enum class AttackMode { Evasion, Availability };

std::string to_string(AttackMode mode);

/// Unperturbed smoothed decision per window: the certified decision, or the empirical
/// percentile against gamma for abstentions.
std::vector<int> smoothed_predictions(std::span<const CertificationResult> results, double gamma);

/// Certified confusion matrix at DTW budget t. The attacked class (positives for evasion,
/// negatives for availability) counts as correct only when the window was certified with
/// the matching decision and radius >= t; the other class uses `pred`.
ConfusionMatrix certified_confusion(std::span<const CertificationResult> results,
                                    std::span<const int> labels, std::span<const int> pred,
                                    double t, AttackMode mode);

struct CertifiedCurve {
  std::vector<double> budgets;
  std::vector<double> certified_accuracy;
  std::vector<double> certified_f1;
  AttackMode attack_mode = AttackMode::Evasion;
};

/// Budgets 0, step, 2 step, ... up to max (inclusive, computed as i * step).
std::vector<double> budget_grid(double max, double step);

CertifiedCurve certified_curve(std::span<const CertificationResult> results,
                               std::span<const int> labels, std::span<const int> pred,
                               std::span<const double> budgets, AttackMode mode);

struct RadiiStats {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // population
  double certified_proportion = 0.0;
};

RadiiStats radii_stats(std::span<const double> radii);
RadiiStats radii_stats(std::span<const CertificationResult> results);

}  // namespace dtwcert
