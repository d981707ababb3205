#include "dtwcert/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "dtwcert/error.hpp"
#include "dtwcert/rng.hpp"
#include "dtwcert/special.hpp"

namespace dtwcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

NoiseKind parse_noise(std::string_view text) {
  if (text == "gaussian" || text == "gaussian-l2") return NoiseKind::Gaussian;
  if (text == "laplace" || text == "laplace-l1") return NoiseKind::Laplace;
  if (text == "uniform" || text == "uniform-linf") return NoiseKind::Uniform;
  throw Error(ErrorCode::InvalidConfig, "unknown noise '" + std::string(text) + "'");
}

std::string to_string(NoiseKind noise) {
  switch (noise) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Laplace: return "laplace";
    case NoiseKind::Uniform: return "uniform";
  }
  return "?";
}

NormOrder certified_norm(NoiseKind noise) {
  switch (noise) {
    case NoiseKind::Gaussian: return NormOrder::L2;
    case NoiseKind::Laplace: return NormOrder::L1;
    case NoiseKind::Uniform: return NormOrder::Linf;
  }
  return NormOrder::L2;
}

double noise_cdf(NoiseKind noise, double z) {
  switch (noise) {
    case NoiseKind::Gaussian:
      return gaussian_cdf(z);
    case NoiseKind::Laplace:
      return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
    case NoiseKind::Uniform:
      return std::clamp(0.5 * (z + 1.0), 0.0, 1.0);
  }
  return 0.0;
}

double noise_icdf(NoiseKind noise, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::DomainError, "noise_icdf requires 0 < q < 1");
  switch (noise) {
    case NoiseKind::Gaussian:
      return gaussian_icdf(q);
    case NoiseKind::Laplace:
      return q < 0.5 ? std::log(2.0 * q) : -std::log(2.0 - 2.0 * q);
    case NoiseKind::Uniform:
      return 2.0 * q - 1.0;
  }
  return 0.0;
}

double shifted_level(NoiseKind noise, double p, double shift) {
  return noise_cdf(noise, noise_icdf(noise, p) + shift);
}

Denoiser parse_denoiser(std::string_view text) {
  if (text == "identity" || text == "none") return Denoiser::Identity;
  if (text == "ma3" || text == "moving-average") return Denoiser::MovingAverage3;
  throw Error(ErrorCode::InvalidConfig, "unknown denoiser '" + std::string(text) + "'");
}

std::string to_string(Denoiser denoiser) {
  return denoiser == Denoiser::Identity ? "identity" : "ma3";
}

Matrix apply_denoiser(Denoiser denoiser, const Matrix& x) {
  if (denoiser == Denoiser::Identity || x.rows() < 2) return x;
  // centered width-3 average; edges average over the available neighbours
  Matrix out(x.rows(), x.cols());
  const std::size_t last = x.rows() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(last, i + 1);
    const double count = static_cast<double>(hi - lo + 1);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      double sum = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) sum += x(j, k);
      out(i, k) = sum / count;
    }
  }
  return out;
}

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidConfig, "sigma must be > 0");
  if (n < 2) throw Error(ErrorCode::InvalidConfig, "samples must be >= 2");
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "percentile must be in (0, 1)");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be in (0, 1)");
}

std::uint64_t digest(const Matrix& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[2] = {x.rows(), x.cols()};
  feed(shape, sizeof(shape));
  feed(x.flat().data(), x.size() * sizeof(double));
  return h;
}

ScoreSamples sample_scores(const ScoreFunction& fn, const Matrix& x, const SmoothingConfig& cfg,
                           std::uint64_t stream, Denoiser denoiser) {
  cfg.validate();
  Rng rng(substream_seed(cfg.seed, stream));

  std::vector<Matrix> noisy;
  noisy.reserve(cfg.n);
  for (std::size_t j = 0; j < cfg.n; ++j) {
    Matrix perturbed = x;
    for (double& v : perturbed.flat()) {
      switch (cfg.noise) {
        case NoiseKind::Gaussian: v += cfg.sigma * rng.normal(); break;
        case NoiseKind::Laplace: v += cfg.sigma * rng.laplace(); break;
        case NoiseKind::Uniform: v += cfg.sigma * (2.0 * rng.uniform() - 1.0); break;
      }
    }
    noisy.push_back(apply_denoiser(denoiser, perturbed));
  }

  std::vector<double> scores;
  try {
    scores = fn.score_batch(noisy);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ScoreFnFailure, std::string("batch: ") + e.what());
  }
  if (scores.size() != cfg.n) {
    throw Error(ErrorCode::ScoreFnFailure, "expected " + std::to_string(cfg.n) + " scores, got " +
                                               std::to_string(scores.size()));
  }
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!std::isfinite(scores[j])) {
      throw Error(ErrorCode::NonFiniteScore, "sample " + std::to_string(j));
    }
  }
  std::sort(scores.begin(), scores.end());
  return ScoreSamples{std::move(scores), cfg, digest(x)};
}

double empirical_percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyScores, "no samples");
  const double n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

std::size_t lower_order_index(std::size_t n, double level, double alpha) {
  const auto nn = static_cast<std::int64_t>(n);
  // P[Bin <= q-1] grows with q; find the last q where it is still <= alpha
  if (binomial_cdf(nn, 0, level) > alpha) return 0;
  std::size_t lo = 1;  // satisfies
  std::size_t hi = n + 1;  // sentinel: fails
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (binomial_cdf(nn, static_cast<std::int64_t>(mid) - 1, level) <= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::size_t upper_order_index(std::size_t n, double level, double alpha) {
  const auto nn = static_cast<std::int64_t>(n);
  if (binomial_cdf(nn, nn - 1, level) < 1.0 - alpha) return n + 1;
  std::size_t lo = 0;  // sentinel: fails
  std::size_t hi = n;  // satisfies
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (binomial_cdf(nn, static_cast<std::int64_t>(mid) - 1, level) >= 1.0 - alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

PercentileBounds percentile_bounds(std::span<const double> sorted, double p, double r,
                                   double alpha, NoiseKind noise, double sigma) {
  if (!(r >= 0.0)) throw Error(ErrorCode::NegativeInput, "radius must be >= 0");
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(ErrorCode::EmptyScores, "no samples");

  PercentileBounds b;
  b.lower_level = shifted_level(noise, p, -r / sigma);
  b.upper_level = shifted_level(noise, p, r / sigma);

  b.lower_index = (b.lower_level > 0.0 && b.lower_level < 1.0)
                      ? lower_order_index(n, b.lower_level, alpha)
                      : 0;
  b.upper_index = (b.upper_level > 0.0 && b.upper_level < 1.0)
                      ? upper_order_index(n, b.upper_level, alpha)
                      : n + 1;
  b.lower = b.lower_index == 0 ? -kInf : sorted[b.lower_index - 1];
  b.upper = b.upper_index > n ? kInf : sorted[b.upper_index - 1];
  return b;
}

PercentileBounds percentile_bounds(const ScoreSamples& samples, double r) {
  const auto& c = samples.config;
  return percentile_bounds(samples.sorted, c.percentile, r, c.alpha, c.noise, c.sigma);
}

std::string to_string(Decision decision) {
  switch (decision) {
    case Decision::Anomaly: return "anomaly";
    case Decision::Benign: return "benign";
    case Decision::Abstain: return "abstain";
  }
  return "?";
}

Decision parse_decision(std::string_view text) {
  if (text == "anomaly") return Decision::Anomaly;
  if (text == "benign") return Decision::Benign;
  if (text == "abstain") return Decision::Abstain;
  throw Error(ErrorCode::ParseError, "unknown decision '" + std::string(text) + "'");
}

bool certifies_at(const ScoreSamples& samples, double gamma, Decision decision, double r) {
  const auto b = percentile_bounds(samples, r);
  switch (decision) {
    case Decision::Anomaly: return !b.lower_vacuous() && b.lower > gamma;
    case Decision::Benign: return !b.upper_vacuous(samples.sorted.size()) && b.upper <= gamma;
    case Decision::Abstain: return false;
  }
  return false;
}

L2Certificate certified_l2_radius(const ScoreSamples& samples, double gamma) {
  L2Certificate cert;
  cert.at_zero = percentile_bounds(samples, 0.0);
  const std::size_t n = samples.sorted.size();
  if (!cert.at_zero.lower_vacuous() && cert.at_zero.lower > gamma) {
    cert.decision = Decision::Anomaly;
  } else if (!cert.at_zero.upper_vacuous(n) && cert.at_zero.upper <= gamma) {
    cert.decision = Decision::Benign;
  } else {
    return cert;
  }

  // the test is monotone in r: bracket by doubling, then bisect
  double lo = 0.0;
  double hi = samples.config.sigma;
  for (int doublings = 0; doublings < 64 && certifies_at(samples, gamma, cert.decision, hi);
       ++doublings) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > kRadiusTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (certifies_at(samples, gamma, cert.decision, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  cert.radius = lo;
  return cert;
}

}  // namespace dtwcert
