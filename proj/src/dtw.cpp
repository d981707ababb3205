#include "dtwcert/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "dtwcert/error.hpp"

namespace dtwcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_window(const Matrix& x, std::size_t w) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::InvalidWindow, "empty window");
  if (w == 0) throw Error(ErrorCode::InvalidWindow, "warping window must be >= 1");
}

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                "(" + std::to_string(a.rows()) + "," + std::to_string(a.cols()) + ") vs (" +
                    std::to_string(b.rows()) + "," + std::to_string(b.cols()) + ")");
  }
}

}  // namespace

NormOrder parse_norm(std::string_view text) {
  if (text == "1" || text == "l1" || text == "L1") return NormOrder::L1;
  if (text == "2" || text == "l2" || text == "L2") return NormOrder::L2;
  if (text == "inf" || text == "linf" || text == "Linf" || text == "INF") return NormOrder::Linf;
  throw Error(ErrorCode::UnsupportedNorm, std::string(text));
}

std::string to_string(NormOrder p) {
  switch (p) {
    case NormOrder::L1: return "1";
    case NormOrder::L2: return "2";
    case NormOrder::Linf: return "inf";
  }
  return "?";
}

double step_cost(const Matrix& x, std::size_t i, const Matrix& y, std::size_t j, NormOrder p) {
  const auto a = x.row(i);
  const auto b = y.row(j);
  double cost = 0.0;
  switch (p) {
    case NormOrder::L1:
      for (std::size_t k = 0; k < a.size(); ++k) cost += std::abs(a[k] - b[k]);
      break;
    case NormOrder::L2:
      for (std::size_t k = 0; k < a.size(); ++k) cost += (a[k] - b[k]) * (a[k] - b[k]);
      break;
    case NormOrder::Linf:
      for (std::size_t k = 0; k < a.size(); ++k) cost = std::max(cost, std::abs(a[k] - b[k]));
      break;
  }
  return cost;
}

double dtw_distance(const Matrix& x, const Matrix& y, std::size_t w, NormOrder p) {
  require_same_shape(x, y);
  require_window(x, w);
  const std::size_t n = x.rows();
  w = std::min(w, n);

  const bool max_path = p == NormOrder::Linf;
  std::vector<double> prev(n, kInf);
  std::vector<double> cur(n, kInf);
  std::size_t prev_lo = 0;
  std::size_t prev_hi = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const std::size_t hi = std::min(n - 1, i + w);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double c = step_cost(x, i, y, j, p);
      double best = kInf;
      if (i == 0 && j == 0) {
        cur[j] = c;
        continue;
      }
      if (i > 0 && j >= prev_lo && j <= prev_hi) best = std::min(best, prev[j]);
      if (i > 0 && j > 0 && j - 1 >= prev_lo && j - 1 <= prev_hi) best = std::min(best, prev[j - 1]);
      if (j > lo) best = std::min(best, cur[j - 1]);
      cur[j] = max_path ? std::max(best, c) : best + c;
    }
    std::swap(prev, cur);
    prev_lo = lo;
    prev_hi = hi;
  }

  const double total = prev[n - 1];
  return p == NormOrder::L2 ? std::sqrt(total) : total;
}

Envelope keogh_envelope(const Matrix& x, std::size_t w) {
  require_window(x, w);
  const std::size_t n = x.rows();
  const std::size_t channels = x.cols();
  Envelope env{Matrix(n, channels), Matrix(n, channels), w, x};

  std::deque<std::size_t> maxq;
  std::deque<std::size_t> minq;
  for (std::size_t k = 0; k < channels; ++k) {
    maxq.clear();
    minq.clear();
    // j is the index entering the window; i = j - w is the row being emitted
    for (std::size_t j = 0; j < n + w; ++j) {
      if (j < n) {
        while (!maxq.empty() && x(maxq.back(), k) <= x(j, k)) maxq.pop_back();
        maxq.push_back(j);
        while (!minq.empty() && x(minq.back(), k) >= x(j, k)) minq.pop_back();
        minq.push_back(j);
      }
      if (j < w) continue;
      const std::size_t i = j - w;
      if (i >= n) break;
      const std::size_t first = i > w ? i - w : 0;
      while (maxq.front() < first) maxq.pop_front();
      while (minq.front() < first) minq.pop_front();
      env.upper(i, k) = x(maxq.front(), k);
      env.lower(i, k) = x(minq.front(), k);
    }
  }
  return env;
}

double keogh_lower_bound(const Envelope& env, const Matrix& y, NormOrder p) {
  require_same_shape(env.upper, y);
  const auto u = env.upper.flat();
  const auto l = env.lower.flat();
  const auto v = y.flat();
  double acc = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) {
    double excess = 0.0;
    if (v[c] > u[c]) {
      excess = v[c] - u[c];
    } else if (v[c] < l[c]) {
      excess = l[c] - v[c];
    }
    switch (p) {
      case NormOrder::L1: acc += excess; break;
      case NormOrder::L2: acc += excess * excess; break;
      case NormOrder::Linf: acc = std::max(acc, excess); break;
    }
  }
  return p == NormOrder::L2 ? std::sqrt(acc) : acc;
}

SlackStats slack_stats(const Matrix& x, const Envelope& env) {
  if (!(env.source == x)) {
    throw Error(ErrorCode::EnvelopeMismatch, "envelope was built from a different window");
  }
  SlackStats stats{Matrix(x.rows(), x.cols()), 0.0, 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double d = std::max(env.upper(i, k) - x(i, k), x(i, k) - env.lower(i, k));
      stats.delta(i, k) = d;
      row += d * d;
    }
    total += row;
    stats.M = std::max(stats.M, std::sqrt(row));
  }
  stats.R = std::sqrt(total);
  return stats;
}

double slack_norm(const SlackStats& stats, NormOrder p) {
  double acc = 0.0;
  for (const double d : stats.delta.flat()) {
    switch (p) {
      case NormOrder::L1: acc += d; break;
      case NormOrder::L2: acc += d * d; break;
      case NormOrder::Linf: acc = std::max(acc, d); break;
    }
  }
  return p == NormOrder::L2 ? std::sqrt(acc) : acc;
}

}  // namespace dtwcert
