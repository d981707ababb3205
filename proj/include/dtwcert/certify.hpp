#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dtwcert/core.hpp"
#include "dtwcert/dtw.hpp"
#include "dtwcert/smoothing.hpp"

namespace dtwcert {

/// How the l_p certificate is carried over to DTW.
///   Theorem:      sqrt(M^2 + r^2 - R^2) - M (Gaussian / l2 only)
///   Conservative: max(0, r - ||slack||_p), the infimum of LB_Keogh over the l_p sphere
/// Laplace and uniform noise always use Conservative.
enum class DtwBound { Theorem, Conservative };

DtwBound parse_dtw_bound(std::string_view text);
std::string to_string(DtwBound bound);

struct CertificationResult {
  Decision decision = Decision::Abstain;
  double l2_radius = 0.0;  // radius in the noise's norm (l2 for Gaussian)
  double dtw_radius = 0.0;
  double R = 0.0;
  double M = 0.0;
  std::size_t origin_index = 0;
  std::size_t lower_index = 0;  // order-statistic indices at r = 0
  std::size_t upper_index = 0;
  double empirical_score = 0.0;  // K_ceil(p n)
  DtwBound bound = DtwBound::Theorem;
};

/// 0 when r <= R, else sqrt(M^2 + r^2 - R^2) - M.
double dtw_radius(double r, const SlackStats& stats);

/// max(0, r - ||slack||_p); never larger than dtw_radius for p = 2.
double lp_dtw_radius(double r, const SlackStats& stats, NormOrder p);
double lp_dtw_radius(double r, const Matrix& x, const Envelope& env, NormOrder p);

/// Point at l2 distance r from x whose Keogh bound equals dtw_radius(r): every timestep
/// is pushed to the edge of its slack, and the row with the largest slack (smallest index
/// on ties) is pushed further along its own signed slack direction.
Matrix worst_case_witness(const Matrix& x, const Envelope& env, double r);

struct CertifyOptions {
  std::size_t warp_window = 4;
  Denoiser denoiser = Denoiser::Identity;
  DtwBound bound = DtwBound::Theorem;
};

CertificationResult certify_from_samples(const Window& x, const ScoreSamples& samples,
                                         double gamma, const CertifyOptions& opts);

/// sample_scores -> certified_l2_radius -> envelope/slack of the clean window -> DTW radius.
/// The noise substream is the window's origin index.
CertificationResult certify_window(const Window& x, const ScoreFunction& fn,
                                   const SmoothingConfig& cfg, double gamma,
                                   const CertifyOptions& opts);

}  // namespace dtwcert
