#include <algorithm>
#include <random>

#include "doctest.h"
#include "ecgsynth/error.hpp"
#include "ecgsynth/features.hpp"
#include "ecgsynth/preprocess.hpp"
#include "ecgsynth/simgen.hpp"
#include "support.hpp"

using namespace ecgsynth;

namespace {

LeadAnalysis analyze_fixture(const SyntheticRecord& sim, std::size_t lead = 0) {
  return analyze_lead(sim.record.lead(lead), sim.record.fs(), sim.record.lead_at(lead),
                      PreprocessConfig{});
}

// First beat whose landmarks are all present.
std::size_t complete_beat(const LeadAnalysis& a) {
  for (std::size_t s = 0; s < a.features.size(); ++s) {
    if (a.features[s]) return s;
  }
  FAIL("no complete beat");
  return 0;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("R height of a 1.2 mV beat") {
  const auto sim = generate_synthetic_record(test::single_lead_config(10.0), 1);
  const auto a = analyze_fixture(sim);
  std::size_t seen = 0;
  for (const auto& f : a.features) {
    if (!f) continue;
    CHECK((*f)[Feature::RHeight] == doctest::Approx(1200.0).epsilon(50.0 / 1200.0));
    ++seen;
  }
  CHECK(seen >= a.features.size() - 1);
}

TEST_CASE("RR feature is the segment length in ms") {
  const auto sim = generate_synthetic_record(test::single_lead_config(10.0), 1);
  const auto a = analyze_fixture(sim);
  const auto s = complete_beat(a);
  const auto& fid = a.fiducials.beats[a.segmentation.segments[s].index];
  CHECK(extract_features(a.filtered, a.fs, fid, 0.8)[Feature::Rr] == doctest::Approx(800.0));
}

TEST_CASE("missing T landmark is reported") {
  const auto sim = generate_synthetic_record(test::single_lead_config(10.0), 1);
  const auto a = analyze_fixture(sim);
  auto fid = a.fiducials.beats[a.segmentation.segments[complete_beat(a)].index];
  fid.set(Landmark::Toff, std::nullopt);
  try {
    extract_features(a.filtered, a.fs, fid, 0.8);
    FAIL("expected MissingLandmark");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingLandmark);
  }
}

TEST_CASE("features are translation invariant and scale as expected") {
  const auto sim = generate_synthetic_record(test::single_lead_config(10.0), 7);
  const auto a = analyze_fixture(sim);
  std::mt19937_64 rng(7);
  for (std::size_t s = 0; s < a.features.size(); ++s) {
    if (!a.features[s]) continue;
    const auto& fid = a.fiducials.beats[a.segmentation.segments[s].index];
    const double rr = a.segmentation.segments[s].length_s;
    const auto base = extract_features(a.filtered, a.fs, fid, rr);

    const std::size_t offset = 1 + rng() % 500;
    std::vector<double> shifted(offset, a.filtered.front());
    shifted.insert(shifted.end(), a.filtered.begin(), a.filtered.end());
    BeatFiducials moved = fid;
    for (auto& p : moved.points) {
      if (p) *p += offset;
    }
    const auto translated = extract_features(shifted, a.fs, moved, rr);

    const double c = 0.25 + static_cast<double>(rng() % 300) / 100.0;
    std::vector<double> scaled(a.filtered);
    for (double& v : scaled) v *= c;
    const auto amplified = extract_features(scaled, a.fs, fid, rr);

    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      CHECK(translated.values[f] == doctest::Approx(base.values[f]).epsilon(1e-12));
      const bool amplitude = f <= static_cast<std::size_t>(Feature::QPeak);
      CHECK(amplified.values[f] == doctest::Approx(amplitude ? c * base.values[f] : base.values[f]).epsilon(1e-9));
    }
  }
}

TEST_CASE("R-peak pairing is greedy and tolerance-bound") {
  const std::vector<std::size_t> a = {1000, 1800, 2600, 4000};
  const std::vector<std::size_t> b = {1040, 1790, 2800, 3400, 4149};
  const auto pairs = pair_r_peaks(a, b, 1000.0, 0.150);
  const std::vector<std::pair<std::size_t, std::size_t>> expected = {{0, 0}, {1, 1}, {3, 4}};
  CHECK(pairs == expected);
}

TEST_CASE("constant increment lag is recovered on every beat") {
  SynthConfig config;
  config.duration_s = 16.0;
  config.leads = {single_lead_waves(LeadId::II), single_lead_waves(LeadId::III)};
  config.leads[1].waves[2].amplitude_mv = 0.9;
  config.rr.variability_ms = 10.0;
  config.sync_time_s = 8.0;
  LagSpec lag;
  lag.lead = LeadId::III;
  lag.kind = LagKind::Constant;
  lag.mode = LagMode::Increment;
  lag.value_ms = 12.0;
  config.lags = {lag};
  const auto sim = generate_synthetic_record(config, 9);
  const auto set = build_training_set(sim.record, LeadId::III, LeadId::II, 16.0);
  CHECK(set.size() >= 10);
  for (const auto& s : set.samples) CHECK(std::abs(s.lag_ms - 12.0) <= 2.0);
}

TEST_CASE("self-lag is zero and a minute yields about 73 samples") {
  auto config = test::single_lead_config(60.0);
  config.snr_db = 30.0;
  const auto sim = generate_synthetic_record(config, 10);
  const auto set = build_training_set(sim.record, LeadId::II, LeadId::II, 60.0);
  CHECK(set.size() >= 70);
  CHECK(set.size() <= 74);
  for (const auto& s : set.samples) CHECK(s.lag_ms == 0.0);
}

TEST_CASE("synchronous leads have small lags") {
  SynthConfig config;
  config.duration_s = 30.0;
  config.leads = dipole_twelve_lead_waves();
  config.snr_db = 30.0;
  const auto sim = generate_synthetic_record(config, 14);
  for (LeadId i : {LeadId::I, LeadId::V2, LeadId::aVF}) {
    const auto set = build_training_set(sim.record, i, LeadId::II, 30.0);
    double mean_abs = 0.0;
    for (const auto& s : set.samples) mean_abs += std::abs(s.lag_ms);
    CHECK(mean_abs / static_cast<double>(set.size()) < 60.0);
  }
}

TEST_CASE("training set errors") {
  const auto sim = generate_synthetic_record(test::single_lead_config(5.0), 1);
  try {
    build_training_set(sim.record, LeadId::II, LeadId::II, 60.0);
    FAIL("expected InsufficientBeats");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientBeats);
  }
  CHECK_THROWS_AS(build_training_set(sim.record, LeadId::V1, LeadId::II, 5.0), Error);
}

}
