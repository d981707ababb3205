// dtwcert command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dtwcert/certify.hpp"
#include "dtwcert/core.hpp"
#include "dtwcert/dtw.hpp"
#include "dtwcert/error.hpp"
#include "dtwcert/falsify.hpp"
#include "dtwcert/format.hpp"
#include "dtwcert/pipeline.hpp"
#include "dtwcert/synth.hpp"
#include "dtwcert/version.hpp"

namespace fs = std::filesystem;
using namespace dtwcert;

namespace {

struct RunFlags {
  std::optional<std::string> config;
  std::optional<std::string> data, labels, train, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma, percentile, alpha;
  std::optional<std::size_t> samples, seq_len, warp_window, workers;
  std::optional<std::string> detector, threshold_method, scorer_cmd;
  std::vector<std::string> sets;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "config file of key = value lines");
    cmd.add_option("--data", data, "test series CSV");
    cmd.add_option("--labels", labels, "test labels, one 0/1 per line");
    cmd.add_option("--train", train, "train series CSV");
    cmd.add_option("--out", out, "output directory");
    cmd.add_option("--seed", seed, "master seed (falls back to DTWCERT_SEED)");
    cmd.add_option("--sigma", sigma, "smoothing noise scale");
    cmd.add_option("--samples", samples, "Monte-Carlo samples per window");
    cmd.add_option("--percentile", percentile, "smoothed percentile p");
    cmd.add_option("--alpha", alpha, "confidence failure probability");
    cmd.add_option("--seq-len", seq_len, "window length T");
    cmd.add_option("--warp-window", warp_window, "Sakoe-Chiba band w");
    cmd.add_option("--detector", detector, "knn | reconstruction | zmax | mean-abs | external");
    cmd.add_option("--threshold-method", threshold_method, "train-quantile | best-f1-scan");
    cmd.add_option("--workers", workers, "worker threads");
    cmd.add_option("--scorer-cmd", scorer_cmd, "external scorer command, spoken to over stdio");
    cmd.add_option("--set", sets, "extra key=value config override (repeatable)");
  }

  RunConfig resolve(RunConfig cfg) const {
    if (config) apply_config_text(cfg, read_file(*config));
    if (data) cfg.data = *data;
    if (labels) cfg.labels = *labels;
    if (train) cfg.train = *train;
    if (out) cfg.out = *out;
    if (seed) cfg.smoothing.seed = *seed;
    if (sigma) cfg.smoothing.sigma = *sigma;
    if (samples) cfg.smoothing.n = *samples;
    if (percentile) cfg.smoothing.percentile = *percentile;
    if (alpha) cfg.smoothing.alpha = *alpha;
    if (seq_len) cfg.seq_len = *seq_len;
    if (warp_window) cfg.warp_window = *warp_window;
    if (detector) cfg.detector = *detector;
    if (threshold_method) cfg.set("threshold_method", *threshold_method);
    if (workers) cfg.workers = *workers;
    if (scorer_cmd) {
      cfg.scorer_cmd = *scorer_cmd;
      if (!detector) cfg.detector = "external";
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value");
      cfg.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

RunConfig defaults_with_env() {
  RunConfig cfg;
  apply_seed_env(cfg);
  return cfg;
}

LabeledDataset load_run_data(const RunConfig& cfg) {
  if (cfg.train.empty() || cfg.data.empty() || cfg.labels.empty()) {
    throw Error(ErrorCode::InvalidConfig, "--train, --data and --labels are required");
  }
  return load_dataset(cfg.train, cfg.data, cfg.labels);
}

// A CSV file path, or an inline series: comma-separated timesteps, '|' between channels.
Matrix read_series_arg(const std::string& arg) {
  if (fs::exists(arg)) return load_csv(arg).series.values;
  std::vector<std::vector<double>> channels;
  for (auto chan : split(arg, '|')) {
    std::vector<double> values;
    for (auto cell : split(chan, ',')) {
      const auto v = parse_double(cell);
      if (!v) throw Error(ErrorCode::ParseError, "'" + std::string(cell) + "' is not a number");
      if (!std::isfinite(*v)) throw Error(ErrorCode::NonFiniteValue, std::string(cell));
      values.push_back(*v);
    }
    if (!channels.empty() && values.size() != channels.front().size()) {
      throw Error(ErrorCode::LengthMismatch, "inline channels differ in length");
    }
    channels.push_back(std::move(values));
  }
  Matrix m(channels.front().size(), channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k)
    for (std::size_t i = 0; i < channels[k].size(); ++i) m(i, k) = channels[k][i];
  return m;
}

int cmd_certify(const RunFlags& flags) {
  const RunConfig cfg = flags.resolve(defaults_with_env());
  if (cfg.out.empty()) throw Error(ErrorCode::InvalidConfig, "--out is required");
  const auto data = load_run_data(cfg);
  const auto report = run_certify(cfg, data);
  write_outputs(cfg, report);
  std::cout << stats_csv(report);
  return 0;
}

int cmd_falsify(const RunFlags& flags, std::size_t probes) {
  RunConfig base = defaults_with_env();
  const fs::path out = flags.out ? fs::path(*flags.out) : fs::path();
  RunConfig probe_cfg = flags.resolve(base);
  const fs::path dir = out.empty() ? probe_cfg.out : out;
  if (dir.empty()) throw Error(ErrorCode::InvalidConfig, "--out is required");
  if (!fs::exists(dir / "results.csv") || !fs::exists(dir / "meta.txt")) {
    throw Error(ErrorCode::MissingResults, "no results.csv / meta.txt in " + dir.string());
  }

  // The run's own settings come from meta.txt; explicit flags still win.
  const std::string meta = read_file(dir / "meta.txt");
  for (auto line : split(meta, '\n')) {
    const auto body = trim(line.substr(0, line.find('#')));
    const auto eq = body.find('=');
    if (body.empty() || eq == std::string_view::npos) continue;
    try {
      base.set(body.substr(0, eq), body.substr(eq + 1));
    } catch (const Error&) {
      // run annotations such as gamma are not config keys
    }
  }
  const RunConfig cfg = flags.resolve(base);
  const double gamma = *parse_double(meta_value(meta, "gamma"));

  const auto data = load_run_data(cfg);
  const auto inputs = prepare_inputs(cfg, data);
  const auto stored = parse_results_csv(read_file(dir / "results.csv"));
  const auto detector = make_detector(cfg, inputs.bank);

  FalsifyOptions opts;
  opts.probes = probes;
  opts.warp_window = cfg.warp_window;
  opts.seed = cfg.smoothing.seed;
  opts.denoiser = cfg.denoiser;
  opts.workers = cfg.workers;
  const auto report = falsify(inputs.test, stored.results, *detector, cfg.smoothing, gamma, opts);
  std::cout << format_report(report);
  return report.failed() ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified DTW robustness for time-series anomaly detectors"};
  app.require_subcommand(1);

  RunFlags certify_flags;
  auto* certify = app.add_subcommand("certify", "certify every test window and write results");
  certify_flags.attach(*certify);

  RunFlags falsify_flags;
  std::size_t probes = 1000;
  auto* falsify_cmd = app.add_subcommand("falsify", "probe certified DTW balls of a finished run");
  falsify_flags.attach(*falsify_cmd);
  falsify_cmd->add_option("--probes", probes, "number of probes")->capture_default_str();

  std::string a, b, norm = "2";
  std::size_t w = 4;
  auto* dtw_cmd = app.add_subcommand("dtw", "banded DTW distance between two series");
  dtw_cmd->add_option("a", a, "CSV file or inline series")->required();
  dtw_cmd->add_option("b", b, "CSV file or inline series")->required();
  dtw_cmd->add_option("-w,--warp-window", w)->capture_default_str();
  dtw_cmd->add_option("-p,--norm", norm, "1 | 2 | inf")->capture_default_str();

  auto* lb_cmd = app.add_subcommand("lb", "Keogh lower bound of b against the envelope of a");
  lb_cmd->add_option("a", a, "reference series")->required();
  lb_cmd->add_option("b", b, "query series")->required();
  lb_cmd->add_option("-w,--warp-window", w)->capture_default_str();
  lb_cmd->add_option("-p,--norm", norm, "1 | 2 | inf")->capture_default_str();

  auto* env_cmd = app.add_subcommand("envelope", "Keogh envelope of a series as CSV");
  env_cmd->add_option("a", a, "CSV file or inline series")->required();
  env_cmd->add_option("-w,--warp-window", w)->capture_default_str();

  SynthConfig synth;
  std::string backbone = "sine", anomalies, synth_out;
  auto* synth_cmd = app.add_subcommand("gen-synth", "write a synthetic train/test dataset");
  synth_cmd->add_option("--kind", backbone, "sine | random-walk")->capture_default_str();
  synth_cmd->add_option("--train-length", synth.train_length)->capture_default_str();
  synth_cmd->add_option("--length", synth.test_length, "test length")->capture_default_str();
  synth_cmd->add_option("--channels", synth.channels)->capture_default_str();
  synth_cmd->add_option("--period", synth.period)->capture_default_str();
  synth_cmd->add_option("--amplitude", synth.amplitude)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise)->capture_default_str();
  synth_cmd->add_option("--anomalies", anomalies, "e.g. spike@120:5,level@200x60:2,shift@300x40:10");
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*certify) return cmd_certify(certify_flags);
    if (*falsify_cmd) return cmd_falsify(falsify_flags, probes);
    if (*dtw_cmd) {
      std::cout << format_double(dtw_distance(read_series_arg(a), read_series_arg(b), w, parse_norm(norm))) << '\n';
      return 0;
    }
    if (*lb_cmd) {
      const auto env = keogh_envelope(read_series_arg(a), w);
      std::cout << format_double(keogh_lower_bound(env, read_series_arg(b), parse_norm(norm))) << '\n';
      return 0;
    }
    if (*env_cmd) {
      const auto env = keogh_envelope(read_series_arg(a), w);
      std::cout << "i";
      for (std::size_t k = 0; k < env.upper.cols(); ++k) std::cout << ",lower_" << k << ",upper_" << k;
      std::cout << '\n';
      for (std::size_t i = 0; i < env.upper.rows(); ++i) {
        std::cout << i;
        for (std::size_t k = 0; k < env.upper.cols(); ++k) {
          std::cout << ',' << format_double(env.lower(i, k)) << ',' << format_double(env.upper(i, k));
        }
        std::cout << '\n';
      }
      return 0;
    }
    if (*synth_cmd) {
      synth.backbone = parse_backbone(backbone);
      synth.anomalies = parse_anomalies(anomalies);
      write_synth(synth_out, generate_synth(synth));
      return 0;
    }
    std::cout << "dtwcert " << kVersion << " (scorer protocol " << kProtocolVersion << ")\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
