#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dtwcert/matrix.hpp"

namespace dtwcert {

enum class NormOrder { L1, L2, Linf };

/// Accepts "1", "2", "inf" (also "l1", "l2", "linf").
NormOrder parse_norm(std::string_view text);
std::string to_string(NormOrder p);

/// Banded DTW between two (T, C) windows, per-step cost ||x_i - y_j||_p across channels.
///
/// Paths run from (0,0) to (T-1,T-1) with unit steps and |i - j| <= w. For p = 1, 2 the
/// path cost is (sum of ||.||_p^p)^(1/p); for p = inf it is the max step cost along the
/// path. A band wider than T is the unconstrained DTW. Runs in O(T * w * C).
double dtw_distance(const Matrix& x, const Matrix& y, std::size_t w, NormOrder p);

/// Per-timestep p-th power cost used by the DP (max-abs for p = inf).
double step_cost(const Matrix& x, std::size_t i, const Matrix& y, std::size_t j, NormOrder p);

/// Keogh bands of a reference window; index ranges are clamped at the window edges.
struct Envelope {
  Matrix upper;
  Matrix lower;
  std::size_t window_w = 1;
  Matrix source;
};

Envelope keogh_envelope(const Matrix& x, std::size_t w);

/// Exceedance of `y` outside `env`, aggregated as an l_p norm over all cells.
double keogh_lower_bound(const Envelope& env, const Matrix& y, NormOrder p);

/// Slack of a window inside its own envelope.
struct SlackStats {
  Matrix delta;         // max(U - x, x - L) per cell
  double R = 0.0;       // sqrt(sum_i ||delta_i||^2)
  double M = 0.0;       // max_i ||delta_i||
};

SlackStats slack_stats(const Matrix& x, const Envelope& env);

/// l_p norm of the slack field taken over all cells.
double slack_norm(const SlackStats& stats, NormOrder p);

}  // namespace dtwcert
