#include <doctest.h>

#include "dtwcert/dtw.hpp"
#include "dtwcert/error.hpp"
#include "dtwcert/synth.hpp"
#include "../support/helpers.hpp"

using namespace dtwcert;
using testing::error_code_of;

TEST_CASE("anomaly spec parsing") {
  const auto a = parse_anomalies("spike@120:5,level@200x60:2,shift@300x40:10");
  REQUIRE(a.size() == 3);
  CHECK(a[0].kind == AnomalyKind::Spike);
  CHECK(a[0].start == 120);
  CHECK(a[0].magnitude == 5.0);
  CHECK(a[1].kind == AnomalyKind::LevelShift);
  CHECK(a[1].length == 60);
  CHECK(a[2].kind == AnomalyKind::TemporalShift);
  CHECK(a[2].magnitude == 10.0);
  CHECK(parse_anomalies("").empty());
  for (const char* bad : {"spike", "bump@3:1", "level@10:2", "shift@5x3:1.5", "spike@x:1", "spike@4x2:1", "level@1x0:1"}) {
    CHECK(error_code_of([&] { parse_anomalies(bad); }) == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("spike labels are exact") {
  SynthConfig cfg;
  cfg.test_length = 200;
  cfg.anomalies = parse_anomalies("spike@120:5");
  const auto d = generate_synth(cfg);
  for (std::size_t t = 0; t < d.labels.size(); ++t) CHECK(d.labels[t] == (t == 120 ? 1 : 0));
  CHECK(d.test.values(120, 0) - d.clean_test.values(120, 0) > 4.5);
  cfg.anomalies = parse_anomalies("spike@200:5");
  CHECK(error_code_of([&] { generate_synth(cfg); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("same seed gives identical data") {
  SynthConfig cfg;
  cfg.backbone = Backbone::RandomWalk;
  cfg.channels = 2;
  cfg.seed = 12;
  cfg.anomalies = parse_anomalies("level@50x20:1");
  const auto a = generate_synth(cfg);
  const auto b = generate_synth(cfg);
  CHECK(series_csv(a.test) == series_csv(b.test));
  CHECK(series_csv(a.train) == series_csv(b.train));
  cfg.seed = 13;
  CHECK(series_csv(generate_synth(cfg).test) != series_csv(a.test));

  const auto dir = testing::temp_dir("synth");
  write_synth(dir, a);
  CHECK(read_file(dir / "test.csv") == series_csv(a.test));
  const auto loaded = load_csv(dir / "test.csv", dir / "test_labels.csv");
  CHECK(loaded.series.values == a.test.values);
  CHECK(*loaded.labels == a.labels);
}

TEST_CASE("temporal shift is close in DTW and far in l2") {
  SynthConfig cfg;
  cfg.noise = 0.0;
  cfg.period = 60.0;
  cfg.anomalies = parse_anomalies("shift@100x40:6");
  const auto d = generate_synth(cfg);
  Matrix shifted(40, 1), clean(40, 1);
  for (std::size_t i = 0; i < 40; ++i) {
    shifted(i, 0) = d.test.values(100 + i, 0);
    clean(i, 0) = d.clean_test.values(100 + i, 0);
  }
  double l2 = 0.0;
  for (std::size_t i = 0; i < 40; ++i) l2 += (shifted(i, 0) - clean(i, 0)) * (shifted(i, 0) - clean(i, 0));
  l2 = std::sqrt(l2);
  const double dtw = dtw_distance(shifted, clean, 6, NormOrder::L2);
  CHECK(l2 > 2.0);
  CHECK(dtw < 0.35 * l2);
}
