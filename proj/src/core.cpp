#include "dtwcert/core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dtwcert/error.hpp"
#include "dtwcert/format.hpp"

namespace dtwcert {

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
  }
  // a trailing LF produces one empty tail entry
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string at(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", col " + std::to_string(col);
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TimeSeries parse_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty file (missing header)");

  TimeSeries series;
  for (auto name : split(lines[0], ',')) series.channel_names.emplace_back(trim(name));
  const std::size_t channels = series.channel_names.size();
  const std::size_t length = lines.size() - 1;
  if (length == 0) throw Error(ErrorCode::ParseError, "no data rows");

  std::vector<double> data;
  data.reserve(length * channels);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (cells.size() != channels) {
      throw Error(ErrorCode::ParseError, at(r + 1, std::min(cells.size(), channels) + 1) +
                                             ": expected " + std::to_string(channels) +
                                             " columns");
    }
    for (std::size_t k = 0; k < channels; ++k) {
      const auto value = parse_double(cells[k]);
      if (!value) throw Error(ErrorCode::ParseError, at(r + 1, k + 1));
      if (!std::isfinite(*value)) throw Error(ErrorCode::NonFiniteValue, at(r + 1, k + 1));
      data.push_back(*value);
    }
  }
  series.values = Matrix(length, channels, std::move(data));
  return series;
}

std::vector<int> parse_labels(std::string_view text) {
  std::vector<int> labels;
  const auto lines = lines_of(text);
  labels.reserve(lines.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto value = parse_int(lines[r]);
    if (!value || (*value != 0 && *value != 1)) {
      throw Error(ErrorCode::ParseError, at(r + 1, 1) + ": label must be 0 or 1");
    }
    labels.push_back(static_cast<int>(*value));
  }
  return labels;
}

LoadedSeries load_csv(const std::filesystem::path& data,
                      const std::optional<std::filesystem::path>& labels) {
  LoadedSeries out{parse_csv(read_file(data)), std::nullopt};
  if (labels) {
    auto parsed = parse_labels(read_file(*labels));
    if (parsed.size() != out.series.length()) {
      throw Error(ErrorCode::LengthMismatch, std::to_string(parsed.size()) + " labels vs " +
                                                 std::to_string(out.series.length()) +
                                                 " timesteps");
    }
    out.labels = std::move(parsed);
  }
  return out;
}

ChannelStats compute_stats(const TimeSeries& series) {
  const auto& x = series.values;
  ChannelStats stats{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 0.0)};
  const double n = static_cast<double>(x.rows());
  for (std::size_t k = 0; k < x.cols(); ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, k);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, k) - mean) * (x(i, k) - mean);
    stats.mean[k] = mean;
    stats.std[k] = std::max(std::sqrt(ss / n), kStdFloor);
  }
  return stats;
}

TimeSeries normalize(const TimeSeries& series, const ChannelStats& stats) {
  const auto& x = series.values;
  if (stats.mean.size() != x.cols() || stats.std.size() != x.cols()) {
    throw Error(ErrorCode::ChannelMismatch, std::to_string(stats.mean.size()) +
                                                " stats channels vs " + std::to_string(x.cols()));
  }
  TimeSeries out{Matrix(x.rows(), x.cols()), series.channel_names};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      out.values(i, k) = (x(i, k) - stats.mean[k]) / std::max(stats.std[k], kStdFloor);
    }
  }
  return out;
}

std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t length) {
  const std::size_t total = series.length();
  if (length == 0 || length > total) {
    throw Error(ErrorCode::WindowTooLarge, "window length " + std::to_string(length) +
                                               " for series of length " + std::to_string(total));
  }
  const std::size_t channels = series.channels();
  const auto& src = series.values.values();
  std::vector<Window> windows;
  windows.reserve(total - length + 1);
  for (std::size_t start = 0; start + length <= total; ++start) {
    std::vector<double> data(src.begin() + static_cast<std::ptrdiff_t>(start * channels),
                             src.begin() + static_cast<std::ptrdiff_t>((start + length) * channels));
    windows.push_back(Window{Matrix(length, channels, std::move(data)), start + length - 1});
  }
  return windows;
}

std::vector<int> window_labels(const std::vector<int>& labels, std::size_t length) {
  if (length == 0 || length > labels.size()) {
    throw Error(ErrorCode::WindowTooLarge, "window length " + std::to_string(length));
  }
  return {labels.begin() + static_cast<std::ptrdiff_t>(length - 1), labels.end()};
}

LabeledDataset load_dataset(const std::filesystem::path& train,
                            const std::filesystem::path& test,
                            const std::filesystem::path& test_labels) {
  auto train_raw = load_csv(train).series;
  auto test_raw = load_csv(test, test_labels);
  if (train_raw.channels() != test_raw.series.channels()) {
    throw Error(ErrorCode::ChannelMismatch, "train has " + std::to_string(train_raw.channels()) +
                                                " channels, test has " +
                                                std::to_string(test_raw.series.channels()));
  }
  LabeledDataset ds;
  ds.norm_stats = compute_stats(train_raw);
  ds.train = normalize(train_raw, ds.norm_stats);
  ds.test = normalize(test_raw.series, ds.norm_stats);
  ds.test_labels = std::move(*test_raw.labels);
  return ds;
}

}  // namespace dtwcert
