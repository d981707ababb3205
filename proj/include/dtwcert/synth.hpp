#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/core.hpp"

namespace dtwcert {

enum class Backbone { Sine, RandomWalk };

Backbone parse_backbone(std::string_view text);

enum class AnomalyKind { Spike, LevelShift, TemporalShift };

/// One injected anomaly. Spike: +magnitude at `start` (length 1). Level shift: +magnitude
/// on [start, start + length). Temporal shift: the backbone on [start, start + length) is
/// replaced by itself delayed by `magnitude` timesteps.
struct Anomaly {
  AnomalyKind kind = AnomalyKind::Spike;
  std::size_t start = 0;
  std::size_t length = 1;
  double magnitude = 0.0;
};

/// Comma-separated list of kind@start[xlength]:magnitude, kinds spike | level | shift,
/// e.g. "spike@120:5,level@200x60:2,shift@300x40:10". Raises InvalidSpec.
std::vector<Anomaly> parse_anomalies(std::string_view spec);

struct SynthConfig {
  Backbone backbone = Backbone::Sine;
  std::size_t train_length = 600;
  std::size_t test_length = 400;
  std::size_t channels = 1;
  double period = 400.0;
  double amplitude = 1.0;
  double noise = 0.01;  // std of additive Gaussian noise
  std::uint64_t seed = 0;
  std::vector<Anomaly> anomalies;  // positions index the test series
};

struct SynthData {
  TimeSeries train;
  TimeSeries test;
  TimeSeries clean_test;  // test series before anomaly injection, without noise
  std::vector<int> labels;
};

SynthData generate_synth(const SynthConfig& cfg);

/// train.csv, test.csv and test_labels.csv in `dir`.
void write_synth(const std::filesystem::path& dir, const SynthData& data);

std::string series_csv(const TimeSeries& series);

}  // namespace dtwcert
