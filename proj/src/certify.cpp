#include "dtwcert/certify.hpp"

#include <cmath>

#include "dtwcert/error.hpp"

namespace dtwcert {

DtwBound parse_dtw_bound(std::string_view text) {
  if (text == "theorem") return DtwBound::Theorem;
  if (text == "conservative") return DtwBound::Conservative;
  throw Error(ErrorCode::InvalidConfig, "unknown dtw bound '" + std::string(text) + "'");
}

std::string to_string(DtwBound bound) {
  return bound == DtwBound::Theorem ? "theorem" : "conservative";
}

double dtw_radius(double r, const SlackStats& stats) {
  if (!(r >= 0.0)) throw Error(ErrorCode::NegativeInput, "radius must be >= 0");
  if (r <= stats.R) return 0.0;
  const double m = stats.M;
  // (r - R)(r + R) avoids cancellation in r^2 - R^2
  return std::sqrt(m * m + (r - stats.R) * (r + stats.R)) - m;
}

double lp_dtw_radius(double r, const SlackStats& stats, NormOrder p) {
  if (!(r >= 0.0)) throw Error(ErrorCode::NegativeInput, "radius must be >= 0");
  return std::max(0.0, r - slack_norm(stats, p));
}

double lp_dtw_radius(double r, const Matrix& x, const Envelope& env, NormOrder p) {
  return lp_dtw_radius(r, slack_stats(x, env), p);
}

Matrix worst_case_witness(const Matrix& x, const Envelope& env, double r) {
  const SlackStats stats = slack_stats(x, env);
  if (!(r > stats.R)) {
    throw Error(ErrorCode::RadiusInsideSlack, "r must exceed R to leave the envelope");
  }
  Matrix out = x;
  if (stats.M == 0.0) {
    out(0, 0) += r;
    return out;
  }

  std::size_t peak = 0;
  double peak_norm = -1.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) sq += stats.delta(i, k) * stats.delta(i, k);
    if (std::sqrt(sq) > peak_norm) {
      peak_norm = std::sqrt(sq);
      peak = i;
    }
  }

  const double m = stats.M;
  const double lambda = -1.0 + std::sqrt(1.0 + (r - stats.R) * (r + stats.R) / (m * m));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double scale = i == peak ? 1.0 + lambda : 1.0;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const bool up = env.upper(i, k) - x(i, k) >= x(i, k) - env.lower(i, k);
      const double step = scale * stats.delta(i, k);
      if (scale == 1.0) {
        // land exactly on the band edge
        out(i, k) = up ? env.upper(i, k) : env.lower(i, k);
      } else {
        out(i, k) = up ? x(i, k) + step : x(i, k) - step;
      }
    }
  }
  return out;
}

CertificationResult certify_from_samples(const Window& x, const ScoreSamples& samples,
                                         double gamma, const CertifyOptions& opts) {
  const auto cert = certified_l2_radius(samples, gamma);
  const Envelope env = keogh_envelope(x.values, opts.warp_window);
  const SlackStats stats = slack_stats(x.values, env);

  CertificationResult result;
  result.decision = cert.decision;
  result.l2_radius = cert.radius;
  result.R = stats.R;
  result.M = stats.M;
  result.origin_index = x.origin_index;
  result.lower_index = cert.at_zero.lower_index;
  result.upper_index = cert.at_zero.upper_index;
  result.empirical_score = empirical_percentile(samples.sorted, samples.config.percentile);

  const NoiseKind noise = samples.config.noise;
  result.bound = noise == NoiseKind::Gaussian ? opts.bound : DtwBound::Conservative;
  if (cert.decision == Decision::Abstain) return result;
  result.dtw_radius = result.bound == DtwBound::Theorem
                          ? dtw_radius(cert.radius, stats)
                          : lp_dtw_radius(cert.radius, stats, certified_norm(noise));
  return result;
}

CertificationResult certify_window(const Window& x, const ScoreFunction& fn,
                                   const SmoothingConfig& cfg, double gamma,
                                   const CertifyOptions& opts) {
  const auto samples = sample_scores(fn, x.values, cfg, x.origin_index, opts.denoiser);
  return certify_from_samples(x, samples, gamma, opts);
}

}  // namespace dtwcert
