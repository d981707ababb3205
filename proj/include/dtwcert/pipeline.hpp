#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/certify.hpp"
#include "dtwcert/core.hpp"
#include "dtwcert/detectors.hpp"
#include "dtwcert/metrics.hpp"
#include "dtwcert/smoothing.hpp"

namespace dtwcert {

struct RunConfig {
  SmoothingConfig smoothing;
  std::size_t seq_len = 50;
  std::size_t warp_window = 4;

  std::string detector = "knn";  // knn | reconstruction | zmax | mean-abs | external
  std::size_t knn_k = 5;
  std::size_t pca_rank = 8;
  std::size_t bank_stride = 1;

  ThresholdMethod threshold_method = ThresholdMethod::TrainQuantile;
  double threshold_quantile = 0.99;
  double validation_fraction = 0.25;  // tail of train held out for train-quantile
  std::size_t max_validation_windows = 200;

  Denoiser denoiser = Denoiser::Identity;
  DtwBound dtw_bound = DtwBound::Theorem;
  double budget_max = 0.5;
  double budget_step = 0.01;
  std::size_t workers = 1;

  std::string scorer_cmd;
  std::string scorer_address;
  int scorer_timeout_ms = 10000;
  std::size_t scorer_pool = 1;

  std::filesystem::path train;
  std::filesystem::path data;
  std::filesystem::path labels;
  std::filesystem::path out;

  /// Sets one field from its config-file key ('-' and '_' are interchangeable).
  /// Unknown keys and unparsable values raise InvalidConfig.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  /// Canonical "key = value" lines, one per field.
  std::string to_text() const;
};

/// Applies "key = value" lines ('#' starts a comment) on top of `base`.
void apply_config_text(RunConfig& base, std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// DTWCERT_SEED, when set, replaces the default seed.
void apply_seed_env(RunConfig& cfg);

std::unique_ptr<ScoreFunction> make_detector(const RunConfig& cfg, std::span<const Window> bank);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first exception thrown
/// by any call is rethrown after all threads stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::vector<ScoreSamples> sample_windows(const ScoreFunction& fn, std::span<const Window> windows,
                                         const SmoothingConfig& cfg, Denoiser denoiser,
                                         std::size_t workers, std::uint64_t stream_offset = 0);

std::vector<CertificationResult> certify_samples(std::span<const Window> windows,
                                                 std::span<const ScoreSamples> samples,
                                                 double gamma, const CertifyOptions& opts,
                                                 std::size_t workers);

/// Windows of a run: test windows with their labels, the detector bank, and the
/// held-out validation windows used by train-quantile thresholds.
struct RunInputs {
  std::vector<Window> test;
  std::vector<int> labels;
  std::vector<Window> bank;
  std::vector<Window> validation;
};

RunInputs prepare_inputs(const RunConfig& cfg, const LabeledDataset& data);

struct RunReport {
  std::vector<CertificationResult> results;
  std::vector<int> labels;
  double gamma = 0.0;           // smoothed detector threshold
  double standard_gamma = 0.0;  // raw detector threshold
  double standard_f1 = 0.0;
  double standard_roc_auc = 0.0;
  double smoothed_f1 = 0.0;
  double smoothed_roc_auc = 0.0;
  RadiiStats radii;
  CertifiedCurve evasion;
  CertifiedCurve availability;
  std::string detector_name;
  std::size_t bank_windows = 0;
  std::size_t validation_windows = 0;
};

/// Full certification run on an already-loaded dataset. `detector` overrides the one
/// built from cfg (its bank is then ignored).
RunReport run_certify(const RunConfig& cfg, const LabeledDataset& data,
                      const ScoreFunction* detector = nullptr);

std::string results_csv(const RunReport& report);
std::string stats_csv(const RunReport& report);
std::string curves_csv(const RunReport& report);
std::string meta_text(const RunConfig& cfg, const RunReport& report);

/// Writes results.csv, stats.csv, curves.csv and meta.txt into cfg.out. Files are staged
/// under temporary names and renamed at the end; nothing is left behind on failure.
void write_outputs(const RunConfig& cfg, const RunReport& report);

struct StoredResults {
  std::vector<CertificationResult> results;
  std::vector<int> labels;
};

StoredResults parse_results_csv(std::string_view text);

/// Value of a "key = value" line in meta.txt.
std::string meta_value(std::string_view meta, std::string_view key);

}  // namespace dtwcert
