#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/dtw.hpp"
#include "dtwcert/matrix.hpp"
#include "dtwcert/score_function.hpp"

namespace dtwcert {

/// Smoothing noise family; each one pairs with the l_p norm it certifies.
enum class NoiseKind { Gaussian, Laplace, Uniform };

NoiseKind parse_noise(std::string_view text);
std::string to_string(NoiseKind noise);
NormOrder certified_norm(NoiseKind noise);

/// Standardized 1-D marginal of the noise (scale 1) and its inverse.
double noise_cdf(NoiseKind noise, double z);
double noise_icdf(NoiseKind noise, double q);

/// Percentile level F(F^-1(p) + shift). Returns exactly 0 or 1 once the shift leaves the
/// support (uniform) or underflows (Gaussian/Laplace).
double shifted_level(NoiseKind noise, double p, double shift);

/// Optional transform applied to x + noise before scoring.
enum class Denoiser { Identity, MovingAverage3 };

Denoiser parse_denoiser(std::string_view text);
std::string to_string(Denoiser denoiser);
Matrix apply_denoiser(Denoiser denoiser, const Matrix& x);

struct SmoothingConfig {
  double sigma = 0.5;
  std::size_t n = 1000;
  double percentile = 0.5;
  double alpha = 1e-3;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::Gaussian;

  /// Throws InvalidConfig on out-of-range fields.
  void validate() const;
};

/// Sorted Monte-Carlo scores K_1 <= ... <= K_n of f(x + noise).
struct ScoreSamples {
  std::vector<double> sorted;
  SmoothingConfig config;
  std::uint64_t input_digest = 0;
};

/// FNV-1a over the bytes of the values.
std::uint64_t digest(const Matrix& x);

/// Draws cfg.n i.i.d. entrywise noise fields from substream `stream` of cfg.seed,
/// scores the (optionally denoised) perturbed windows, and sorts the scores.
ScoreSamples sample_scores(const ScoreFunction& fn, const Matrix& x, const SmoothingConfig& cfg,
                           std::uint64_t stream, Denoiser denoiser = Denoiser::Identity);

/// Empirical p-th order statistic K_ceil(p n).
double empirical_percentile(std::span<const double> sorted, double p);

/// Confidence bounds on the smoothed percentile over an l_p ball of radius r.
struct PercentileBounds {
  double lower = 0.0;           // K_{q^l}, -inf when vacuous
  double upper = 0.0;           // K_{q^u}, +inf when vacuous
  std::size_t lower_index = 0;  // 1-based; 0 when vacuous
  std::size_t upper_index = 0;  // 1-based; n + 1 when vacuous
  double lower_level = 0.0;     // shifted percentile p_lower
  double upper_level = 0.0;     // shifted percentile p_upper

  bool lower_vacuous() const noexcept { return lower_index == 0; }
  bool upper_vacuous(std::size_t n) const noexcept { return upper_index > n; }
};

/// Largest q in [1, n] with P[Bin(n, level) <= q - 1] <= alpha, else 0.
std::size_t lower_order_index(std::size_t n, double level, double alpha);
/// Smallest q in [1, n] with P[Bin(n, level) <= q - 1] >= 1 - alpha, else n + 1.
std::size_t upper_order_index(std::size_t n, double level, double alpha);

PercentileBounds percentile_bounds(std::span<const double> sorted, double p, double r,
                                   double alpha, NoiseKind noise, double sigma);
PercentileBounds percentile_bounds(const ScoreSamples& samples, double r);

enum class Decision { Anomaly, Benign, Abstain };

std::string to_string(Decision decision);
Decision parse_decision(std::string_view text);

struct L2Certificate {
  Decision decision = Decision::Abstain;
  double radius = 0.0;
  PercentileBounds at_zero;
};

inline constexpr double kRadiusTolerance = 1e-9;

/// Decision at r = 0 and the largest r (bisection, bracket doubling) for which the
/// deciding bound still clears gamma.
L2Certificate certified_l2_radius(const ScoreSamples& samples, double gamma);

/// True when the deciding bound for `decision` still clears gamma at radius r.
bool certifies_at(const ScoreSamples& samples, double gamma, Decision decision, double r);

}  // namespace dtwcert
