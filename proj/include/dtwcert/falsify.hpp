#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtwcert/certify.hpp"
#include "dtwcert/core.hpp"
#include "dtwcert/rng.hpp"
#include "dtwcert/smoothing.hpp"

namespace dtwcert {

enum class ProbeKind { WitnessPlus, WitnessMinus, CoordinateBump, GaussianDirection, TimeWarp, TimeShift };

std::string to_string(ProbeKind kind);

/// Direction of a probe for window x; the caller scales it onto the DTW ball.
Matrix probe_direction(ProbeKind kind, const Matrix& x, const CertificationResult& cert,
                       std::size_t w, Rng& rng);

/// x + s * delta with the largest s found (doubling, then bisection) such that
/// dtw_distance(x, x + s * delta, w, 2) <= e. Starts from s = e / ||delta||, which the
/// diagonal path always admits.
Matrix scale_to_dtw_ball(const Matrix& x, const Matrix& delta, double e, std::size_t w);

/// Smallest k with P[Bin(probes, alpha) <= k] >= 1 - 1e-6.
std::size_t allowed_flips(std::size_t probes, double alpha);

struct FalsifyOptions {
  std::size_t probes = 1000;
  std::size_t warp_window = 4;
  std::uint64_t seed = 0;
  Denoiser denoiser = Denoiser::Identity;
  std::size_t workers = 1;
  double radius_scale = 1.0;  // multiplies every stored e before probing
};

struct Flip {
  std::size_t origin_index = 0;
  ProbeKind kind = ProbeKind::WitnessPlus;
  double dtw = 0.0;
  double l2 = 0.0;
  Decision certified = Decision::Abstain;
  Decision observed = Decision::Abstain;
};

struct FalsifyReport {
  std::size_t probes = 0;
  std::size_t certified_windows = 0;
  std::size_t skipped_windows = 0;  // abstained or e = 0
  std::size_t allowed = 0;
  std::vector<Flip> flips;

  bool failed() const noexcept { return flips.size() > allowed; }
};

/// Probes certified windows (round-robin over windows and probe kinds) with points inside
/// their DTW balls and re-decides each point from a fresh noise seed. A flip is a
/// confident decision opposite to the certified one.
FalsifyReport falsify(std::span<const Window> windows, std::span<const CertificationResult> results,
                      const ScoreFunction& fn, const SmoothingConfig& cfg, double gamma,
                      const FalsifyOptions& opts);

std::string format_report(const FalsifyReport& report);

}  // namespace dtwcert
