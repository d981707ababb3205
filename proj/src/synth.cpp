#include "dtwcert/synth.hpp"

#include <cmath>
#include <fstream>

#include "dtwcert/error.hpp"
#include "dtwcert/format.hpp"
#include "dtwcert/rng.hpp"

namespace dtwcert {

namespace {

[[noreturn]] void bad_spec(std::string_view item, const std::string& what) {
  throw Error(ErrorCode::InvalidSpec, "'" + std::string(item) + "': " + what);
}

// Clean backbone for timesteps [0, total), every channel with its own phase or walk.
Matrix backbone(const SynthConfig& cfg, std::size_t total, Rng& rng) {
  Matrix out(total, cfg.channels);
  if (cfg.backbone == Backbone::Sine) {
    for (std::size_t k = 0; k < cfg.channels; ++k) {
      const double phase = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(cfg.channels + 1);
      for (std::size_t t = 0; t < total; ++t) {
        out(t, k) = cfg.amplitude * std::sin(2.0 * M_PI * static_cast<double>(t) / cfg.period + phase);
      }
    }
  } else {
    // steps scaled so a period-long stretch moves about one amplitude
    const double step = cfg.amplitude / std::sqrt(cfg.period);
    for (std::size_t k = 0; k < cfg.channels; ++k) {
      double level = 0.0;
      for (std::size_t t = 0; t < total; ++t) {
        level += step * rng.normal();
        out(t, k) = level;
      }
    }
  }
  return out;
}

std::vector<std::string> channel_names(std::size_t channels) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < channels; ++k) names.push_back("ch" + std::to_string(k));
  return names;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::FileMissing, "cannot write " + path.string());
}

}  // namespace

Backbone parse_backbone(std::string_view text) {
  if (text == "sine") return Backbone::Sine;
  if (text == "random-walk" || text == "randomwalk" || text == "walk") return Backbone::RandomWalk;
  throw Error(ErrorCode::InvalidSpec, "unknown backbone '" + std::string(text) + "'");
}

std::vector<Anomaly> parse_anomalies(std::string_view spec) {
  std::vector<Anomaly> out;
  if (trim(spec).empty()) return out;
  for (std::string_view item : split(spec, ',')) {
    item = trim(item);
    const auto at = item.find('@');
    const auto colon = item.find(':');
    if (at == std::string_view::npos || colon == std::string_view::npos || colon < at) {
      bad_spec(item, "expected kind@start[xlength]:magnitude");
    }
    Anomaly a;
    const std::string_view kind = item.substr(0, at);
    if (kind == "spike") a.kind = AnomalyKind::Spike;
    else if (kind == "level") a.kind = AnomalyKind::LevelShift;
    else if (kind == "shift") a.kind = AnomalyKind::TemporalShift;
    else bad_spec(item, "unknown kind");

    std::string_view where = item.substr(at + 1, colon - at - 1);
    const auto x = where.find('x');
    const auto start = parse_int(where.substr(0, x));
    if (!start || *start < 0) bad_spec(item, "bad start");
    a.start = static_cast<std::size_t>(*start);
    if (x != std::string_view::npos) {
      const auto length = parse_int(where.substr(x + 1));
      if (!length || *length < 1) bad_spec(item, "bad length");
      a.length = static_cast<std::size_t>(*length);
    } else if (a.kind != AnomalyKind::Spike) {
      bad_spec(item, "level and shift need a length");
    }
    if (a.kind == AnomalyKind::Spike && a.length != 1) bad_spec(item, "spikes have length 1");

    const auto magnitude = parse_double(item.substr(colon + 1));
    if (!magnitude || !std::isfinite(*magnitude)) bad_spec(item, "bad magnitude");
    a.magnitude = *magnitude;
    if (a.kind == AnomalyKind::TemporalShift &&
        (a.magnitude < 1.0 || a.magnitude != std::floor(a.magnitude))) {
      bad_spec(item, "shift lag must be a positive integer");
    }
    out.push_back(a);
  }
  return out;
}

SynthData generate_synth(const SynthConfig& cfg) {
  if (cfg.channels == 0 || cfg.train_length == 0 || cfg.test_length == 0) {
    throw Error(ErrorCode::InvalidSpec, "lengths and channels must be positive");
  }
  if (!(cfg.period > 0.0) || !(cfg.noise >= 0.0)) throw Error(ErrorCode::InvalidSpec, "bad period or noise");
  for (const auto& a : cfg.anomalies) {
    if (a.start + a.length > cfg.test_length) {
      throw Error(ErrorCode::InvalidSpec, "anomaly at " + std::to_string(a.start) + " runs past the test series");
    }
  }

  Rng rng(substream_seed(cfg.seed, 0));
  const std::size_t total = cfg.train_length + cfg.test_length;
  const Matrix clean = backbone(cfg, total, rng);

  SynthData data;
  data.train.values = Matrix(cfg.train_length, cfg.channels);
  data.clean_test.values = Matrix(cfg.test_length, cfg.channels);
  for (std::size_t t = 0; t < cfg.train_length; ++t)
    for (std::size_t k = 0; k < cfg.channels; ++k) data.train.values(t, k) = clean(t, k);
  for (std::size_t t = 0; t < cfg.test_length; ++t)
    for (std::size_t k = 0; k < cfg.channels; ++k) data.clean_test.values(t, k) = clean(cfg.train_length + t, k);

  data.test.values = data.clean_test.values;
  data.labels.assign(cfg.test_length, 0);
  for (const auto& a : cfg.anomalies) {
    for (std::size_t t = a.start; t < a.start + a.length; ++t) {
      data.labels[t] = 1;
      for (std::size_t k = 0; k < cfg.channels; ++k) {
        switch (a.kind) {
          case AnomalyKind::Spike:
          case AnomalyKind::LevelShift: data.test.values(t, k) += a.magnitude; break;
          case AnomalyKind::TemporalShift: {
            const auto lag = static_cast<std::size_t>(a.magnitude);
            const std::size_t src = cfg.train_length + t >= lag ? cfg.train_length + t - lag : 0;
            data.test.values(t, k) = clean(src, k);
            break;
          }
        }
      }
    }
  }

  Rng noise(substream_seed(cfg.seed, 1));
  for (double& v : data.train.values.flat()) v += cfg.noise * noise.normal();
  for (double& v : data.test.values.flat()) v += cfg.noise * noise.normal();

  data.train.channel_names = channel_names(cfg.channels);
  data.test.channel_names = data.train.channel_names;
  data.clean_test.channel_names = data.train.channel_names;
  return data;
}

std::string series_csv(const TimeSeries& series) {
  std::string out;
  for (std::size_t k = 0; k < series.channels(); ++k) {
    if (k > 0) out += ',';
    out += k < series.channel_names.size() ? series.channel_names[k] : "ch" + std::to_string(k);
  }
  out += '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t k = 0; k < series.channels(); ++k) {
      if (k > 0) out += ',';
      out += format_double(series.values(t, k));
    }
    out += '\n';
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  write_text(dir / "train.csv", series_csv(data.train));
  write_text(dir / "test.csv", series_csv(data.test));
  std::string labels;
  for (const int y : data.labels) labels += y ? "1\n" : "0\n";
  write_text(dir / "test_labels.csv", labels);
}

}  // namespace dtwcert
