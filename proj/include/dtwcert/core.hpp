#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/matrix.hpp"

namespace dtwcert {

inline constexpr double kStdFloor = 1e-8;

/// Multichannel series, shape (length, channels). Values are finite.
struct TimeSeries {
  Matrix values;
  std::vector<std::string> channel_names;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
};

/// Fixed-length slice of a series; `origin_index` is the timestep of its last row.
struct Window {
  Matrix values;
  std::size_t origin_index = 0;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;  // population std, floored at kStdFloor
};

struct LoadedSeries {
  TimeSeries series;
  std::optional<std::vector<int>> labels;
};

struct LabeledDataset {
  TimeSeries train;
  TimeSeries test;
  std::vector<int> test_labels;
  ChannelStats norm_stats;
};

/// Parses a header + rows comma-separated table. Rows and columns in errors are 1-based
/// file coordinates (the header is row 1).
TimeSeries parse_csv(std::string_view text);
std::vector<int> parse_labels(std::string_view text);

LoadedSeries load_csv(const std::filesystem::path& data,
                      const std::optional<std::filesystem::path>& labels = std::nullopt);

ChannelStats compute_stats(const TimeSeries& series);
TimeSeries normalize(const TimeSeries& series, const ChannelStats& stats);

std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t length);

/// Label of each window = label of its final timestep.
std::vector<int> window_labels(const std::vector<int>& labels, std::size_t length);

/// Loads train/test/labels, fits normalization on train, and returns both sides normalized.
LabeledDataset load_dataset(const std::filesystem::path& train,
                            const std::filesystem::path& test,
                            const std::filesystem::path& test_labels);

std::string read_file(const std::filesystem::path& path);

}  // namespace dtwcert
