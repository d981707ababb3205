#include "dtwcert/falsify.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "dtwcert/error.hpp"
#include "dtwcert/format.hpp"
#include "dtwcert/pipeline.hpp"
#include "dtwcert/special.hpp"

namespace dtwcert {

namespace {

constexpr std::uint64_t kProbeSalt = 0x70726f6265ULL;
constexpr std::uint64_t kFreshSalt = 0x6672657368ULL;
constexpr ProbeKind kKinds[] = {ProbeKind::WitnessPlus,       ProbeKind::WitnessMinus,
                                ProbeKind::CoordinateBump,    ProbeKind::GaussianDirection,
                                ProbeKind::TimeWarp,          ProbeKind::TimeShift};

double l2_norm(const Matrix& m) {
  double sq = 0.0;
  for (const double v : m.flat()) sq += v * v;
  return std::sqrt(sq);
}

Matrix axpy(const Matrix& x, double s, const Matrix& delta) {
  Matrix out = x;
  auto o = out.flat();
  auto d = delta.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += s * d[i];
  return out;
}

// Linear interpolation of x at fractional time t (clamped).
double sample_at(const Matrix& x, double t, std::size_t k) {
  const double last = static_cast<double>(x.rows() - 1);
  t = std::clamp(t, 0.0, last);
  const auto lo = static_cast<std::size_t>(std::floor(t));
  const std::size_t hi = std::min(lo + 1, x.rows() - 1);
  const double frac = t - static_cast<double>(lo);
  return (1.0 - frac) * x(lo, k) + frac * x(hi, k);
}

}  // namespace

std::string to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::WitnessPlus: return "witness+";
    case ProbeKind::WitnessMinus: return "witness-";
    case ProbeKind::CoordinateBump: return "bump";
    case ProbeKind::GaussianDirection: return "gaussian";
    case ProbeKind::TimeWarp: return "warp";
    case ProbeKind::TimeShift: return "shift";
  }
  return "unknown";
}

Matrix probe_direction(ProbeKind kind, const Matrix& x, const CertificationResult& cert,
                       std::size_t w, Rng& rng) {
  const std::size_t T = x.rows();
  const std::size_t C = x.cols();
  Matrix delta(T, C);
  switch (kind) {
    case ProbeKind::WitnessPlus:
    case ProbeKind::WitnessMinus: {
      const Envelope env = keogh_envelope(x, w);
      const double r = std::max(cert.l2_radius, slack_stats(x, env).R * (1.0 + 1e-9) + 1e-12);
      const Matrix witness = worst_case_witness(x, env, r);
      const double sign = kind == ProbeKind::WitnessPlus ? 1.0 : -1.0;
      for (std::size_t i = 0; i < T; ++i)
        for (std::size_t k = 0; k < C; ++k) delta(i, k) = sign * (witness(i, k) - x(i, k));
      break;
    }
    case ProbeKind::CoordinateBump: {
      const std::size_t cell = static_cast<std::size_t>(rng.next() % (T * C));
      delta.flat()[cell] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      break;
    }
    case ProbeKind::GaussianDirection:
      for (double& v : delta.flat()) v = rng.normal();
      break;
    case ProbeKind::TimeWarp: {
      // smooth monotone reparametrization with displacement at most w
      const double amp = static_cast<double>(w) * (2.0 * rng.uniform() - 1.0);
      const double cycles = 1.0 + std::floor(rng.uniform() * 3.0);
      const double span = std::max<double>(1.0, static_cast<double>(T - 1));
      for (std::size_t i = 0; i < T; ++i) {
        const double t = static_cast<double>(i);
        const double warped = t + amp * std::sin(M_PI * cycles * t / span) / std::max(1.0, cycles);
        for (std::size_t k = 0; k < C; ++k) delta(i, k) = sample_at(x, warped, k) - x(i, k);
      }
      break;
    }
    case ProbeKind::TimeShift: {
      const auto lag = static_cast<long>(1 + rng.next() % std::max<std::size_t>(w, 1));
      const long dir = rng.uniform() < 0.5 ? -1 : 1;
      for (std::size_t i = 0; i < T; ++i) {
        const long src = std::clamp<long>(static_cast<long>(i) - dir * lag, 0, static_cast<long>(T) - 1);
        for (std::size_t k = 0; k < C; ++k) delta(i, k) = x(static_cast<std::size_t>(src), k) - x(i, k);
      }
      break;
    }
  }
  if (l2_norm(delta) == 0.0) {
    // flat stretches make warps and shifts vanish; fall back to a bump
    delta.flat()[rng.next() % (T * C)] = 1.0;
  }
  return delta;
}

Matrix scale_to_dtw_ball(const Matrix& x, const Matrix& delta, double e, std::size_t w) {
  const double norm = l2_norm(delta);
  if (!(e > 0.0) || norm == 0.0) return x;
  auto inside = [&](double s) { return dtw_distance(x, axpy(x, s, delta), w, NormOrder::L2) <= e; };

  double lo = e / norm;
  for (int i = 0; i < 64 && !inside(lo); ++i) lo *= 1.0 - 1e-12;
  if (!inside(lo)) return x;
  double hi = 2.0 * lo;
  int doublings = 0;
  while (inside(hi) && doublings < 40) {
    lo = hi;
    hi *= 2.0;
    ++doublings;
  }
  if (doublings == 40) return axpy(x, lo, delta);
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (inside(mid)) lo = mid;
    else hi = mid;
  }
  return axpy(x, lo, delta);
}

std::size_t allowed_flips(std::size_t probes, double alpha) {
  const auto n = static_cast<std::int64_t>(probes);
  for (std::int64_t k = 0; k < n; ++k) {
    if (binomial_cdf(n, k, alpha) >= 1.0 - 1e-6) return static_cast<std::size_t>(k);
  }
  return probes;
}

FalsifyReport falsify(std::span<const Window> windows, std::span<const CertificationResult> results,
                      const ScoreFunction& fn, const SmoothingConfig& cfg, double gamma,
                      const FalsifyOptions& opts) {
  if (windows.size() != results.size()) {
    throw Error(ErrorCode::ShapeMismatch, "windows and results differ in count");
  }
  FalsifyReport report;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].origin_index != windows[i].origin_index) {
      throw Error(ErrorCode::ShapeMismatch, "results do not match the windows (origin index " +
                                                std::to_string(results[i].origin_index) + ")");
    }
    if (results[i].decision != Decision::Abstain && results[i].dtw_radius > 0.0) targets.push_back(i);
  }
  report.certified_windows = targets.size();
  report.skipped_windows = results.size() - targets.size();
  if (targets.empty()) return report;

  report.probes = opts.probes;
  report.allowed = allowed_flips(opts.probes, cfg.alpha);

  SmoothingConfig fresh = cfg;
  fresh.seed = mix64(cfg.seed ^ opts.seed ^ kFreshSalt);

  std::vector<std::optional<Flip>> found(opts.probes);
  const std::size_t threads = fn.reentrant() ? opts.workers : 1;
  parallel_for(opts.probes, threads, [&](std::size_t j) {
    const std::size_t target = targets[j % targets.size()];
    const ProbeKind kind = kKinds[(j + j / targets.size()) % std::size(kKinds)];
    const Matrix& x = windows[target].values;
    const CertificationResult& cert = results[target];
    const double e = cert.dtw_radius * opts.radius_scale;

    Rng rng(substream_seed(opts.seed ^ kProbeSalt, j));
    const Matrix delta = probe_direction(kind, x, cert, opts.warp_window, rng);
    const Matrix probe = scale_to_dtw_ball(x, delta, e, opts.warp_window);

    const auto samples = sample_scores(fn, probe, fresh, j, opts.denoiser);
    const Decision observed = certified_l2_radius(samples, gamma).decision;
    if (observed != Decision::Abstain && observed != cert.decision) {
      Flip flip;
      flip.origin_index = cert.origin_index;
      flip.kind = kind;
      flip.dtw = dtw_distance(x, probe, opts.warp_window, NormOrder::L2);
      Matrix diff = probe;
      for (std::size_t c = 0; c < diff.size(); ++c) diff.flat()[c] -= x.flat()[c];
      flip.l2 = l2_norm(diff);
      flip.certified = cert.decision;
      flip.observed = observed;
      found[j] = flip;
    }
  });
  for (auto& f : found)
    if (f) report.flips.push_back(*f);
  return report;
}

std::string format_report(const FalsifyReport& report) {
  std::string out;
  out += "certified_windows = " + std::to_string(report.certified_windows) + '\n';
  out += "skipped_windows = " + std::to_string(report.skipped_windows) + " (abstained or e = 0)\n";
  out += "probes = " + std::to_string(report.probes) + '\n';
  out += "flips = " + std::to_string(report.flips.size()) + '\n';
  out += "allowed_flips = " + std::to_string(report.allowed) + '\n';
  for (const auto& f : report.flips) {
    out += "flip origin_index=" + std::to_string(f.origin_index) + " kind=" + to_string(f.kind) +
           " dtw=" + format_double(f.dtw) + " l2=" + format_double(f.l2) + " certified=" +
           to_string(f.certified) + " observed=" + to_string(f.observed) + '\n';
  }
  out += std::string("verdict = ") + (report.failed() ? "FAIL" : "ok") + '\n';
  return out;
}

}  // namespace dtwcert
