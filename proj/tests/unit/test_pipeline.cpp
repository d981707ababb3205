#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "dtwcert/error.hpp"
#include "dtwcert/format.hpp"
#include "dtwcert/pipeline.hpp"
#include "dtwcert/synth.hpp"
#include "../support/helpers.hpp"

using namespace dtwcert;
using testing::error_code_of;

namespace {

LabeledDataset small_dataset() {
  SynthConfig sc;
  sc.train_length = 240;
  sc.test_length = 160;
  sc.period = 200.0;
  sc.noise = 0.01;
  sc.seed = 4;
  sc.anomalies = parse_anomalies("spike@60:4,level@100x30:1.5");
  const auto syn = generate_synth(sc);
  LabeledDataset d;
  d.norm_stats = compute_stats(syn.train);
  d.train = normalize(syn.train, d.norm_stats);
  d.test = normalize(syn.test, d.norm_stats);
  d.test_labels = syn.labels;
  return d;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.seq_len = 20;
  cfg.smoothing.n = 200;
  cfg.smoothing.seed = 3;
  cfg.max_validation_windows = 30;
  return cfg;
}

}  // namespace

TEST_CASE("run config defaults and parsing") {
  RunConfig cfg;
  CHECK(cfg.seq_len == 50);
  CHECK(cfg.warp_window == 4);
  CHECK(cfg.smoothing.n == 1000);
  CHECK(cfg.smoothing.sigma == 0.5);
  CHECK(cfg.budget_max == 0.5);
  CHECK(cfg.budget_step == 0.01);

  apply_config_text(cfg, "# comment\nsigma = 0.25\nseq-len=30  # trailing\n\nthreshold_method = best-f1-scan\n");
  CHECK(cfg.smoothing.sigma == 0.25);
  CHECK(cfg.seq_len == 30);
  CHECK(cfg.threshold_method == ThresholdMethod::BestF1Scan);
  CHECK(error_code_of([&] { apply_config_text(cfg, "nonsense = 1\n"); }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([&] { apply_config_text(cfg, "sigma 1\n"); }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([&] { apply_config_text(cfg, "samples = -4\n"); }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([&] { apply_config_text(cfg, "detector = svm\n"); cfg.validate(); }) ==
        ErrorCode::InvalidConfig);

  RunConfig round;
  round.smoothing.alpha = 0.01;
  round.dtw_bound = DtwBound::Conservative;
  RunConfig back;
  apply_config_text(back, round.to_text());
  CHECK(back.to_text() == round.to_text());
}

TEST_CASE("seed falls back to DTWCERT_SEED") {
  ::setenv("DTWCERT_SEED", "77", 1);
  RunConfig cfg;
  apply_seed_env(cfg);
  CHECK(cfg.smoothing.seed == 77);
  ::unsetenv("DTWCERT_SEED");
  RunConfig plain;
  apply_seed_env(plain);
  CHECK(plain.smoothing.seed == 0);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(100, 3, [](std::size_t i) {
                    if (i == 42) throw std::runtime_error("x");
                  }),
                  std::runtime_error);
}

TEST_CASE("non-reentrant scorers are never called concurrently") {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  LambdaScore guarded(
      [&](const Matrix& m) {
        const int now = ++active;
        peak = std::max(peak.load(), now);
        std::this_thread::yield();
        --active;
        return m(0, 0);
      },
      "guarded", false);
  std::vector<Window> windows;
  for (std::size_t i = 0; i < 16; ++i) windows.push_back({Matrix(3, 1, 0.1 * i), i});
  SmoothingConfig sc;
  sc.n = 50;
  sample_windows(guarded, windows, sc, Denoiser::Identity, 4);
  CHECK(peak.load() == 1);
}

TEST_CASE("end-to-end run is deterministic across worker counts") {
  const auto data = small_dataset();
  auto cfg = small_config();
  const auto a = run_certify(cfg, data);
  cfg.workers = 3;
  const auto b = run_certify(cfg, data);
  CHECK(results_csv(a) == results_csv(b));
  CHECK(stats_csv(a) == stats_csv(b));
  CHECK(a.results.size() == 160 - 20 + 1);
  CHECK(a.bank_windows > 0);
  CHECK(a.validation_windows == 30);
  for (std::size_t i = 1; i < a.results.size(); ++i) CHECK(a.results[i].origin_index == a.results[i - 1].origin_index + 1);
  for (const auto& r : a.results) {
    if (r.decision == Decision::Abstain) CHECK(r.dtw_radius == 0.0);
    if (r.l2_radius <= r.R) CHECK(r.dtw_radius == 0.0);
  }
  const auto parsed = parse_results_csv(results_csv(a));
  REQUIRE(parsed.results.size() == a.results.size());
  CHECK(parsed.labels == a.labels);
  CHECK(parsed.results[10].dtw_radius == a.results[10].dtw_radius);
  CHECK(parsed.results[10].decision == a.results[10].decision);
}

TEST_CASE("two samples per window abstain everywhere") {
  const auto data = small_dataset();
  auto cfg = small_config();
  cfg.smoothing.n = 2;
  const auto report = run_certify(cfg, data);
  for (const auto& r : report.results) CHECK(r.decision == Decision::Abstain);
  CHECK(report.radii.certified_proportion == 0.0);
}

TEST_CASE("best-f1 thresholds use test labels") {
  const auto data = small_dataset();
  auto cfg = small_config();
  cfg.threshold_method = ThresholdMethod::BestF1Scan;
  const auto report = run_certify(cfg, data);
  CHECK(std::isfinite(report.gamma));
  CHECK(report.standard_f1 > 0.0);
}

TEST_CASE("output files") {
  const auto data = small_dataset();
  auto cfg = small_config();
  cfg.out = testing::temp_dir("pipeline-out");
  const auto report = run_certify(cfg, data);
  write_outputs(cfg, report);
  for (const char* name : {"results.csv", "stats.csv", "curves.csv", "meta.txt"}) {
    CHECK(std::filesystem::exists(cfg.out / name));
  }
  const auto stats = read_file(cfg.out / "stats.csv");
  CHECK(stats.rfind("standard_f1,standard_roc_auc,smoothed_f1,smoothed_roc_auc,radii_mean,radii_max,radii_std,certified_prop\n", 0) == 0);
  const auto curves = read_file(cfg.out / "curves.csv");
  CHECK(std::count(curves.begin(), curves.end(), '\n') == 52);
  const auto meta = read_file(cfg.out / "meta.txt");
  CHECK(*parse_double(meta_value(meta, "gamma")) == report.gamma);
  CHECK(meta.find("z-score") != std::string::npos);
  CHECK(meta.find("abstain_policy") != std::string::npos);
  CHECK(error_code_of([&] { meta_value(meta, "missing_key"); }) == ErrorCode::MissingResults);
  for (const auto& entry : std::filesystem::directory_iterator(cfg.out)) {
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("detector factory") {
  std::vector<Window> bank{{Matrix(3, 1, 0.0), 2}, {Matrix(3, 1, 1.0), 3}};
  RunConfig cfg;
  cfg.knn_k = 1;
  CHECK(make_detector(cfg, bank)->name() == "knn");
  cfg.detector = "zmax";
  CHECK(make_detector(cfg, bank)->name() == "zmax");
  cfg.detector = "reconstruction";
  cfg.pca_rank = 1;
  CHECK(make_detector(cfg, bank)->name() == "reconstruction");
  cfg.detector = "external";
  CHECK(error_code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
}
