#include "dtwcert/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dtwcert/error.hpp"
#include "dtwcert/external.hpp"
#include "dtwcert/format.hpp"

namespace dtwcert {

namespace {

std::string normalize_key(std::string_view key) {
  std::string out(trim(key));
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig,
              "bad value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v) bad_value(key, value);
  return *v;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const auto v = parse_int(value);
  if (!v || *v < 0) bad_value(key, value);
  return static_cast<std::size_t>(*v);
}

std::uint64_t to_seed(std::string_view key, std::string_view value) {
  const auto v = parse_int(value);
  if (!v || *v < 0) bad_value(key, value);
  return static_cast<std::uint64_t>(*v);
}

template <typename Parser>
auto parse_enum(std::string_view key, std::string_view value, Parser parser) {
  try {
    return parser(trim(value));
  } catch (const Error&) {
    bad_value(key, value);
  }
}

constexpr std::uint64_t kValidationStream = std::uint64_t{1} << 62;

std::vector<Window> every_nth(std::vector<Window> windows, std::size_t stride) {
  if (stride <= 1) return windows;
  std::vector<Window> out;
  for (std::size_t i = 0; i < windows.size(); i += stride) out.push_back(std::move(windows[i]));
  return out;
}

std::vector<Window> evenly_spaced(std::vector<Window> windows, std::size_t limit) {
  if (limit == 0 || windows.size() <= limit) return windows;
  std::vector<Window> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) {
    out.push_back(std::move(windows[i * windows.size() / limit]));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileMissing, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::FileMissing, "write failed for " + path.string());
}

}  // namespace

void RunConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = normalize_key(raw_key);
  const std::string_view value = trim(raw_value);
  if (key == "sigma") smoothing.sigma = to_double(key, value);
  else if (key == "samples" || key == "n") smoothing.n = to_size(key, value);
  else if (key == "percentile") smoothing.percentile = to_double(key, value);
  else if (key == "alpha") smoothing.alpha = to_double(key, value);
  else if (key == "seed") smoothing.seed = to_seed(key, value);
  else if (key == "noise") smoothing.noise = parse_enum(key, value, parse_noise);
  else if (key == "seq_len") seq_len = to_size(key, value);
  else if (key == "warp_window") warp_window = to_size(key, value);
  else if (key == "detector") detector = std::string(value);
  else if (key == "knn_k") knn_k = to_size(key, value);
  else if (key == "pca_rank") pca_rank = to_size(key, value);
  else if (key == "bank_stride") bank_stride = to_size(key, value);
  else if (key == "threshold_method") threshold_method = parse_enum(key, value, parse_threshold_method);
  else if (key == "threshold_quantile") threshold_quantile = to_double(key, value);
  else if (key == "validation_fraction") validation_fraction = to_double(key, value);
  else if (key == "max_validation_windows") max_validation_windows = to_size(key, value);
  else if (key == "denoiser") denoiser = parse_enum(key, value, parse_denoiser);
  else if (key == "dtw_bound") dtw_bound = parse_enum(key, value, parse_dtw_bound);
  else if (key == "budget_max") budget_max = to_double(key, value);
  else if (key == "budget_step") budget_step = to_double(key, value);
  else if (key == "workers") workers = to_size(key, value);
  else if (key == "scorer_cmd") scorer_cmd = std::string(value);
  else if (key == "scorer_address") scorer_address = std::string(value);
  else if (key == "scorer_timeout_ms") scorer_timeout_ms = static_cast<int>(to_size(key, value));
  else if (key == "scorer_pool") scorer_pool = to_size(key, value);
  else if (key == "train") train = std::string(value);
  else if (key == "data") data = std::string(value);
  else if (key == "labels") labels = std::string(value);
  else if (key == "out") out = std::string(value);
  else throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(raw_key) + "'");
}

void RunConfig::validate() const {
  smoothing.validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (seq_len == 0) fail("seq_len must be >= 1");
  if (warp_window == 0) fail("warp_window must be >= 1");
  if (knn_k == 0) fail("knn_k must be >= 1");
  if (pca_rank == 0) fail("pca_rank must be >= 1");
  if (bank_stride == 0) fail("bank_stride must be >= 1");
  if (!(threshold_quantile >= 0.0 && threshold_quantile <= 1.0)) fail("threshold_quantile must be in [0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation_fraction must be in [0, 1)");
  if (!(budget_max >= 0.0) || !std::isfinite(budget_max)) fail("budget_max must be >= 0");
  if (!(budget_step > 0.0) || !std::isfinite(budget_step)) fail("budget_step must be > 0");
  if (scorer_timeout_ms <= 0) fail("scorer_timeout_ms must be > 0");
  static const char* kDetectors[] = {"knn", "reconstruction", "zmax", "mean-abs", "external"};
  if (std::find(std::begin(kDetectors), std::end(kDetectors), detector) == std::end(kDetectors)) {
    fail("unknown detector '" + detector + "'");
  }
  if (detector == "external" && scorer_cmd.empty() && scorer_address.empty()) {
    fail("detector 'external' needs scorer_cmd or scorer_address");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  auto line = [&os](std::string_view key, const std::string& value) {
    os << key << " = " << value << '\n';
  };
  line("seq_len", std::to_string(seq_len));
  line("warp_window", std::to_string(warp_window));
  line("sigma", format_double(smoothing.sigma));
  line("samples", std::to_string(smoothing.n));
  line("percentile", format_double(smoothing.percentile));
  line("alpha", format_double(smoothing.alpha));
  line("seed", std::to_string(smoothing.seed));
  line("noise", to_string(smoothing.noise));
  line("detector", detector);
  line("knn_k", std::to_string(knn_k));
  line("pca_rank", std::to_string(pca_rank));
  line("bank_stride", std::to_string(bank_stride));
  line("threshold_method", to_string(threshold_method));
  line("threshold_quantile", format_double(threshold_quantile));
  line("validation_fraction", format_double(validation_fraction));
  line("max_validation_windows", std::to_string(max_validation_windows));
  line("denoiser", to_string(denoiser));
  line("dtw_bound", to_string(dtw_bound));
  line("budget_max", format_double(budget_max));
  line("budget_step", format_double(budget_step));
  if (!scorer_cmd.empty()) line("scorer_cmd", scorer_cmd);
  if (!scorer_address.empty()) line("scorer_address", scorer_address);
  return os.str();
}

void apply_config_text(RunConfig& base, std::string_view text) {
  std::size_t number = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++number;
    const auto hash = raw.find('#');
    const std::string_view body = trim(raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(number) + ": expected key = value");
    }
    base.set(body.substr(0, eq), body.substr(eq + 1));
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::InvalidConfig, "no config file " + path.string());
  apply_config_text(cfg, read_file(path));
  return cfg;
}

void apply_seed_env(RunConfig& cfg) {
  if (const char* env = std::getenv("DTWCERT_SEED"); env != nullptr && *env != '\0') {
    cfg.set("seed", env);
  }
}

std::unique_ptr<ScoreFunction> make_detector(const RunConfig& cfg, std::span<const Window> bank) {
  if (cfg.detector == "knn") return std::make_unique<KnnScore>(bank, cfg.knn_k);
  if (cfg.detector == "reconstruction") return std::make_unique<ReconstructionScore>(bank, cfg.pca_rank);
  if (cfg.detector == "zmax") return std::make_unique<ZmaxScore>();
  if (cfg.detector == "mean-abs") return std::make_unique<MeanAbsScore>();
  if (cfg.detector == "external") {
    ExternalConfig ext;
    ext.command = cfg.scorer_cmd;
    ext.address = cfg.scorer_address;
    ext.timeout_ms = cfg.scorer_timeout_ms;
    ext.pool_size = std::max<std::size_t>(cfg.scorer_pool, 1);
    return std::make_unique<ExternalScore>(ext);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown detector '" + cfg.detector + "'");
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        while (!stop.load()) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop.store(true);
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<ScoreSamples> sample_windows(const ScoreFunction& fn, std::span<const Window> windows,
                                         const SmoothingConfig& cfg, Denoiser denoiser,
                                         std::size_t workers, std::uint64_t stream_offset) {
  std::vector<ScoreSamples> out(windows.size());
  const std::size_t threads = fn.reentrant() ? workers : 1;
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    out[i] = sample_scores(fn, windows[i].values, cfg, stream_offset + windows[i].origin_index, denoiser);
  });
  return out;
}

std::vector<CertificationResult> certify_samples(std::span<const Window> windows,
                                                 std::span<const ScoreSamples> samples,
                                                 double gamma, const CertifyOptions& opts,
                                                 std::size_t workers) {
  if (windows.size() != samples.size()) {
    throw Error(ErrorCode::ShapeMismatch, "windows and samples differ in count");
  }
  std::vector<CertificationResult> out(windows.size());
  parallel_for(windows.size(), workers, [&](std::size_t i) {
    out[i] = certify_from_samples(windows[i], samples[i], gamma, opts);
  });
  return out;
}

RunInputs prepare_inputs(const RunConfig& cfg, const LabeledDataset& data) {
  cfg.validate();
  RunInputs in;
  in.test = sliding_windows(data.test, cfg.seq_len);
  in.labels = window_labels(data.test_labels, cfg.seq_len);

  // Bank / validation split of the train series by window end point.
  auto train_windows = sliding_windows(data.train, cfg.seq_len);
  const bool hold_out = cfg.threshold_method == ThresholdMethod::TrainQuantile && cfg.validation_fraction > 0.0;
  const auto split = static_cast<std::size_t>(
      std::floor(static_cast<double>(data.train.length()) * (1.0 - cfg.validation_fraction)));
  for (auto& w : train_windows) {
    if (hold_out && w.origin_index >= split) in.validation.push_back(std::move(w));
    else in.bank.push_back(std::move(w));
  }
  if (hold_out && (in.validation.empty() || in.bank.empty())) {
    throw Error(ErrorCode::EmptyTrainSet, "train series too short to hold out validation windows");
  }
  if (!hold_out) in.validation = in.bank;
  in.bank = every_nth(std::move(in.bank), cfg.bank_stride);
  in.validation = evenly_spaced(std::move(in.validation), cfg.max_validation_windows);
  return in;
}

RunReport run_certify(const RunConfig& cfg, const LabeledDataset& data, const ScoreFunction* detector) {
  RunInputs in = prepare_inputs(cfg, data);
  RunReport report;
  const auto& test_windows = in.test;
  const auto& validation = in.validation;
  const auto& bank = in.bank;
  report.labels = in.labels;
  report.bank_windows = bank.size();
  report.validation_windows = validation.size();

  std::unique_ptr<ScoreFunction> owned;
  if (detector == nullptr) {
    owned = make_detector(cfg, bank);
    detector = owned.get();
  }
  report.detector_name = detector->name();

  const auto test_samples = sample_windows(*detector, test_windows, cfg.smoothing, cfg.denoiser, cfg.workers);
  std::vector<double> smoothed_scores(test_windows.size());
  std::vector<double> raw_scores(test_windows.size());
  for (std::size_t i = 0; i < test_windows.size(); ++i) {
    smoothed_scores[i] = empirical_percentile(test_samples[i].sorted, cfg.smoothing.percentile);
    raw_scores[i] = detector->score(test_windows[i].values);
  }

  if (cfg.threshold_method == ThresholdMethod::TrainQuantile) {
    const auto val_samples = sample_windows(*detector, validation, cfg.smoothing, cfg.denoiser,
                                            cfg.workers, kValidationStream);
    std::vector<double> val_smoothed;
    std::vector<double> val_raw;
    for (std::size_t i = 0; i < validation.size(); ++i) {
      val_smoothed.push_back(empirical_percentile(val_samples[i].sorted, cfg.smoothing.percentile));
      val_raw.push_back(detector->score(validation[i].values));
    }
    report.gamma = select_threshold(val_smoothed, cfg.threshold_method, cfg.threshold_quantile).gamma;
    report.standard_gamma = select_threshold(val_raw, cfg.threshold_method, cfg.threshold_quantile).gamma;
  } else {
    const std::span<const int> labels(report.labels);
    report.gamma = select_threshold(smoothed_scores, cfg.threshold_method, cfg.threshold_quantile, labels).gamma;
    report.standard_gamma = select_threshold(raw_scores, cfg.threshold_method, cfg.threshold_quantile, labels).gamma;
  }

  CertifyOptions opts;
  opts.warp_window = cfg.warp_window;
  opts.denoiser = cfg.denoiser;
  opts.bound = cfg.dtw_bound;
  report.results = certify_samples(test_windows, test_samples, report.gamma, opts, cfg.workers);

  std::vector<int> raw_pred(raw_scores.size());
  for (std::size_t i = 0; i < raw_scores.size(); ++i) raw_pred[i] = raw_scores[i] > report.standard_gamma ? 1 : 0;
  const auto smoothed_pred = smoothed_predictions(report.results, report.gamma);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool both_classes = std::count(report.labels.begin(), report.labels.end(), 1) > 0 &&
                            std::count(report.labels.begin(), report.labels.end(), 0) > 0;
  report.standard_f1 = point_adjusted_f1(raw_pred, report.labels);
  report.smoothed_f1 = point_adjusted_f1(smoothed_pred, report.labels);
  report.standard_roc_auc = both_classes ? roc_auc(raw_scores, report.labels) : nan;
  report.smoothed_roc_auc = both_classes ? roc_auc(smoothed_scores, report.labels) : nan;
  report.radii = radii_stats(report.results);

  const auto budgets = budget_grid(cfg.budget_max, cfg.budget_step);
  report.evasion = certified_curve(report.results, report.labels, smoothed_pred, budgets, AttackMode::Evasion);
  report.availability =
      certified_curve(report.results, report.labels, smoothed_pred, budgets, AttackMode::Availability);
  return report;
}

std::string results_csv(const RunReport& report) {
  std::string out = "origin_index,label,decision,r,e,R,M,q_lower,q_upper,abstain\n";
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    out += std::to_string(r.origin_index) + ',' + std::to_string(report.labels.at(i)) + ',' +
           to_string(r.decision) + ',' + format_double(r.l2_radius) + ',' + format_double(r.dtw_radius) +
           ',' + format_double(r.R) + ',' + format_double(r.M) + ',' + std::to_string(r.lower_index) +
           ',' + std::to_string(r.upper_index) + ',' + (r.decision == Decision::Abstain ? "1" : "0") +
           '\n';
  }
  return out;
}

std::string stats_csv(const RunReport& report) {
  std::string out =
      "standard_f1,standard_roc_auc,smoothed_f1,smoothed_roc_auc,radii_mean,radii_max,radii_std,"
      "certified_prop\n";
  const double row[] = {report.standard_f1, report.standard_roc_auc, report.smoothed_f1,
                        report.smoothed_roc_auc, report.radii.mean, report.radii.max,
                        report.radii.std, report.radii.certified_proportion};
  for (std::size_t i = 0; i < std::size(row); ++i) {
    if (i > 0) out += ',';
    out += format_double(row[i]);
  }
  out += '\n';
  return out;
}

std::string curves_csv(const RunReport& report) {
  std::string out =
      "budget,certified_accuracy_evasion,certified_f1_evasion,certified_accuracy_availability,"
      "certified_f1_availability\n";
  const auto& ev = report.evasion;
  const auto& av = report.availability;
  for (std::size_t i = 0; i < ev.budgets.size(); ++i) {
    out += format_double(ev.budgets[i]) + ',' + format_double(ev.certified_accuracy[i]) + ',' +
           format_double(ev.certified_f1[i]) + ',' + format_double(av.certified_accuracy[i]) + ',' +
           format_double(av.certified_f1[i]) + '\n';
  }
  return out;
}

std::string meta_text(const RunConfig& cfg, const RunReport& report) {
  std::string out = "# dtwcert run metadata\n";
  out += cfg.to_text();
  out += "detector_name = " + report.detector_name + '\n';
  out += "gamma = " + format_double(report.gamma) + '\n';
  out += "standard_gamma = " + format_double(report.standard_gamma) + '\n';
  out += "bank_windows = " + std::to_string(report.bank_windows) + '\n';
  out += "validation_windows = " + std::to_string(report.validation_windows) + '\n';
  out += "normalization = per-channel z-score with train mean and population std (floor 1e-8); "
         "radii are in normalized units\n";
  out += "abstain_policy = abstain with r = e = 0 when neither r = 0 confidence bound clears gamma; "
         "abstentions never count as certified and their uncertified decision is the empirical "
         "percentile against gamma\n";
  out += std::string("radius_bound = ") +
         (cfg.smoothing.noise == NoiseKind::Gaussian && cfg.dtw_bound == DtwBound::Theorem
              ? "closed form sqrt(M^2 + r^2 - R^2) - M"
              : "conservative max(0, r - ||slack||_p)") +
         '\n';
  return out;
}

void write_outputs(const RunConfig& cfg, const RunReport& report) {
  if (cfg.out.empty()) throw Error(ErrorCode::InvalidConfig, "no output directory");
  std::filesystem::create_directories(cfg.out);
  const std::pair<const char*, std::string> files[] = {
      {"results.csv", results_csv(report)},
      {"stats.csv", stats_csv(report)},
      {"curves.csv", curves_csv(report)},
      {"meta.txt", meta_text(cfg, report)},
  };
  std::vector<std::filesystem::path> staged;
  try {
    for (const auto& [name, text] : files) {
      staged.push_back(cfg.out / (std::string(".") + name + ".tmp"));
      write_text(staged.back(), text);
    }
    for (std::size_t i = 0; i < staged.size(); ++i) {
      std::filesystem::rename(staged[i], cfg.out / files[i].first);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& path : staged) std::filesystem::remove(path, ec);
    for (const auto& [name, text] : files) std::filesystem::remove(cfg.out / name, ec);
    throw;
  }
}

StoredResults parse_results_csv(std::string_view text) {
  StoredResults out;
  std::size_t row = 0;
  for (std::string_view line : split(text, '\n')) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    if (row == 1) {
      if (line.rfind("origin_index,", 0) != 0) throw Error(ErrorCode::ParseError, "results: bad header");
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 10) {
      throw Error(ErrorCode::ParseError, "results row " + std::to_string(row) + ": expected 10 cells");
    }
    auto num = [&](std::size_t col) {
      const auto v = parse_double(cells[col]);
      if (!v) throw Error(ErrorCode::ParseError, "results row " + std::to_string(row) + " col " + std::to_string(col + 1));
      return *v;
    };
    auto integer = [&](std::size_t col) {
      const auto v = parse_int(cells[col]);
      if (!v || *v < 0) throw Error(ErrorCode::ParseError, "results row " + std::to_string(row) + " col " + std::to_string(col + 1));
      return static_cast<std::size_t>(*v);
    };
    CertificationResult r;
    r.origin_index = integer(0);
    out.labels.push_back(static_cast<int>(integer(1)));
    r.decision = parse_decision(cells[2]);
    r.l2_radius = num(3);
    r.dtw_radius = num(4);
    r.R = num(5);
    r.M = num(6);
    r.lower_index = integer(7);
    r.upper_index = integer(8);
    out.results.push_back(r);
  }
  return out;
}

std::string meta_value(std::string_view meta, std::string_view key) {
  for (std::string_view line : split(meta, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    if (trim(line.substr(0, eq)) == key) return std::string(trim(line.substr(eq + 1)));
  }
  throw Error(ErrorCode::MissingResults, "meta.txt has no '" + std::string(key) + "'");
}

}  // namespace dtwcert
