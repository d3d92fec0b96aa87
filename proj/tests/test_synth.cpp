#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ecgsynth/error.hpp"
#include "ecgsynth/metrics.hpp"
#include "ecgsynth/record_io.hpp"
#include "ecgsynth/simgen.hpp"
#include "ecgsynth/synth.hpp"
#include "support.hpp"

using namespace ecgsynth;

namespace {

SynthConfig unlagged_config(double duration_s) {
  auto config = lagged_twelve_lead_config(duration_s, 0.0);
  config.lags.clear();
  return config;
}

struct Fixture {
  MultiLeadRecord historic;
  SynthesisConfig config;
  HistoricLibrary library;

  Fixture(MultiLeadRecord h, LeadId current, double window_s)
      : historic(std::move(h)), library(historic, config) {
    library.train_models(current, config.forest, window_s);
  }
};

// 60 s synchronous twelve-lead history with models for lead I.
const Fixture& twelve_lead() {
  static const Fixture f(generate_synthetic_record(unlagged_config(60.0), 5).record, LeadId::I, 60.0);
  return f;
}

// Lead III runs 12 ms longer than lead II on every beat.
SynthConfig constant_increment_config() {
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
  return config;
}

// Lead II beats whose P and T sizes change from beat to beat.
MultiLeadRecord varied_beats(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fs = 500.0;
  std::vector<double> r_times;
  for (double t = 0.5; t < 11.0; t += 0.75 + 0.1 * u(rng)) r_times.push_back(t);
  std::vector<double> x(static_cast<std::size_t>(12.0 * fs), 0.0);
  auto add = [&](double centre_s, double amp, double sigma_s) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = (static_cast<double>(k) / fs - centre_s) / sigma_s;
      if (std::abs(d) < 6.0) x[k] += amp * std::exp(-0.5 * d * d);
    }
  };
  for (double r : r_times) {
    add(r - 0.17, 0.05 + 0.3 * u(rng), 0.02);
    add(r, 1.2, 0.01);
    add(r + 0.04, -0.3, 0.009);
    add(r + 0.22 + 0.08 * u(rng), 0.1 + 0.5 * u(rng), 0.03 + 0.03 * u(rng));
  }
  return test::make_record({LeadId::II}, {x}, fs, "varied");
}

double rms_of(std::span<const double> x) { return test::rms(x); }

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("affine transform: identity, scaling, half-sine resampling") {
  std::mt19937_64 rng(1);
  const auto beat = test::gaussian_noise(rng, 120, 0.4);
  const auto same = affine_transform_beat(beat, beat.size(), 1.0);
  for (std::size_t k = 0; k < beat.size(); ++k) CHECK(same[k] == doctest::Approx(beat[k]).epsilon(1e-12));

  const auto doubled = affine_transform_beat(beat, beat.size(), 2.0);
  CHECK(rms_of(doubled) == doctest::Approx(2.0 * rms_of(beat)).epsilon(1e-12));

  std::vector<double> half(100);
  for (std::size_t k = 0; k < half.size(); ++k) half[k] = std::sin(std::numbers::pi * k / 99.0);
  const auto stretched = affine_transform_beat(half, 150, 1.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < stretched.size(); ++k) {
    worst = std::max(worst, std::abs(stretched[k] - std::sin(std::numbers::pi * k / 149.0)));
  }
  CHECK(worst < 0.01);
  CHECK(stretched.front() == half.front());
  CHECK(stretched.back() == doctest::Approx(half.back()));

  CHECK_THROWS_AS(affine_transform_beat(beat, 1, 1.0), Error);
  CHECK_THROWS_AS(affine_transform_beat(beat, 50, 0.0), Error);
}

TEST_CASE("beat matching") {
  const auto record = varied_beats(3);
  SynthesisConfig config;
  const HistoricLibrary library(record, config);
  const auto& segments = library.analysis(LeadId::II).segmentation.segments;
  REQUIRE(segments.size() > 6);
  CHECK(match_historic_beat(segments[5], library, config) == 5);

  auto warped = segments[2];
  const auto target = static_cast<std::size_t>(std::llround(1.1 * static_cast<double>(warped.samples.size() - 1))) + 1;
  warped.samples = affine_transform_beat(segments[2].samples, target, 1.0);
  warped.length_s = static_cast<double>(target - 1) / library.fs();
  CHECK(match_historic_beat(warped, library, config) == 2);
}

TEST_CASE("single-beat library") {
  auto config = test::single_lead_config(2.4);
  config.rr.explicit_r_times_s = {0.7, 1.5};
  const auto record = generate_synthetic_record(config, 1).record;
  SynthesisConfig sc;
  const HistoricLibrary library(record, sc);
  REQUIRE(library.analysis(LeadId::II).segmentation.segments.size() == 1);
  const auto other = generate_synthetic_record(test::single_lead_config(10.0), 2).record;
  const auto session = prepare_current(other.lead(0), other.fs(), LeadId::II, library, sc);
  for (const auto& seg : session.analysis.segmentation.segments) {
    CHECK(match_historic_beat(seg, library, sc) == 0);
  }
}

TEST_CASE("self-synthesis reproduces the current beat") {
  const auto& f = twelve_lead();
  const auto current = slice_record(f.historic, 10.0, 40.0, {LeadId::I});
  const auto session = prepare_current(current.lead(0), current.fs(), LeadId::I, f.library, f.config);
  const auto& segments = session.analysis.segmentation.segments;
  for (std::size_t s = 1; s + 1 < segments.size(); ++s) {
    const auto out = synthesize_beat(session, s, LeadId::I, f.library, f.config);
    CHECK(out.provenance.delta_hat_ms == 0.0);
    REQUIRE(out.samples.size() == segments[s].samples.size());
    CHECK(test::correlation(out.samples, segments[s].samples) > 0.995);
    CHECK(rms_of(out.samples) / rms_of(segments[s].samples) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("constant lag is applied to every beat") {
  const auto config = constant_increment_config();
  const Fixture f(generate_synthetic_record(config, 7).record, LeadId::II, 16.0);
  const auto later = generate_synthetic_record(config, 8).record;
  const auto session = prepare_current(later.lead(LeadId::II), later.fs(), LeadId::II, f.library, f.config);
  for (std::size_t s = 0; s < session.analysis.segmentation.segments.size(); ++s) {
    const auto out = synthesize_beat(session, s, LeadId::III, f.library, f.config);
    const auto& p = out.provenance;
    if (!p.flag.empty()) continue;
    CHECK(std::abs(p.delta_tilde_ms - p.delta_current_ms - 12.0) <= 3.0);
    CHECK(std::abs(p.delta_tilde_ms - (p.delta_current_ms + p.delta_hat_ms)) <= 1000.0 / later.fs());
  }
}

TEST_CASE("energy follows the current beat") {
  const auto& f = twelve_lead();
  auto doubled = slice_record(f.historic, 5.0, 35.0, {LeadId::I});
  std::vector<double> x(doubled.lead(0).begin(), doubled.lead(0).end());
  for (double& v : x) v *= 2.0;
  const auto session = prepare_current(x, doubled.fs(), LeadId::I, f.library, f.config);
  for (std::size_t s = 1; s + 1 < session.analysis.segmentation.segments.size(); ++s) {
    const auto out = synthesize_beat(session, s, LeadId::V3, f.library, f.config);
    CHECK(out.provenance.energy_scale == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("disabled correction keeps the current clock") {
  const auto& f = twelve_lead();
  auto config = f.config;
  config.lag_correction = false;
  const auto current = slice_record(f.historic, 0.0, 30.0, {LeadId::I});
  const auto session = prepare_current(current.lead(0), current.fs(), LeadId::I, f.library, config);
  const auto lead = synthesize_lead(session, LeadId::aVF, f.library, config);
  for (const auto& p : lead.beats) {
    if (p.flag == "gap") continue;
    CHECK(p.delta_hat_ms == 0.0);
    CHECK(p.delta_tilde_ms == doctest::Approx(p.delta_current_ms));
  }
}

TEST_CASE("replaying the historic session reproduces the missing lead") {
  const auto& f = twelve_lead();
  const auto current = slice_record(f.historic, 0.0, 60.0, {LeadId::I});
  const auto session = prepare_current(current.lead(0), current.fs(), LeadId::I, f.library, f.config);
  for (LeadId missing : {LeadId::II, LeadId::V2, LeadId::aVL}) {
    const auto lead = synthesize_lead(session, missing, f.library, f.config);
    const auto& truth = f.library.analysis(missing).filtered;
    CAPTURE(lead_name(missing));
    CHECK(r_squared(truth, lead.samples) >= 0.99);
  }
}

TEST_CASE("timing, continuity and rate contracts") {
  const auto& f = twelve_lead();
  const auto later = generate_synthetic_record(unlagged_config(30.0), 9).record;
  const auto session = prepare_current(later.lead(LeadId::I), later.fs(), LeadId::I, f.library, f.config);
  const double sample_ms = 1000.0 / later.fs();
  for (LeadId missing : {LeadId::III, LeadId::V5}) {
    const auto lead = synthesize_lead(session, missing, f.library, f.config);
    CHECK(lead.fs == later.fs());
    REQUIRE(lead.samples.size() == later.size());
    for (double v : lead.samples) REQUIRE(std::isfinite(v));
    for (const auto& p : lead.beats) {
      if (p.flag == "gap") continue;
      const double planned = p.delta_current_ms + p.delta_hat_ms - p.detrend_ms + p.clamp_adjust_ms;
      CHECK(std::abs(p.delta_tilde_ms - planned) <= sample_ms + 1e-9);
    }
  }
}

TEST_CASE("twelve-lead output with passthrough") {
  const auto& f = twelve_lead();
  const auto later = generate_synthetic_record(unlagged_config(20.0), 10).record;
  const auto signal = later.lead(LeadId::I);
  const auto result = synthesize_all(signal, later.fs(), LeadId::I, f.library, f.config);
  CHECK(result.record.lead_count() == 12);
  CHECK(result.leads.size() == 11);
  CHECK(result.record.fs() == later.fs());
  const auto pass = result.record.lead(LeadId::I);
  REQUIRE(pass.size() == signal.size());
  CHECK(std::equal(pass.begin(), pass.end(), signal.begin()));

  std::ostringstream jsonl;
  write_provenance_jsonl(result, jsonl);
  std::size_t beats = 0;
  for (const auto& l : result.leads) beats += l.beats.size();
  const auto text = jsonl.str();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == beats);
}

TEST_CASE("empty current signal") {
  const auto& f = twelve_lead();
  const std::vector<double> empty;
  try {
    synthesize_all(empty, 1000.0, LeadId::I, f.library, f.config);
    FAIL("expected NoBeatsFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoBeatsFound);
  }
}

TEST_CASE("untrained pair") {
  const auto historic = generate_synthetic_record(unlagged_config(30.0), 11).record;
  SynthesisConfig config;
  const HistoricLibrary library(historic, config);
  const auto session = prepare_current(historic.lead(LeadId::V1), historic.fs(), LeadId::V1, library, config);
  try {
    synthesize_beat(session, 0, LeadId::V2, library, config);
    FAIL("expected ModelMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ModelMissing);
  }
  config.lag_correction = false;
  CHECK_NOTHROW(synthesize_beat(session, 0, LeadId::V2, library, config));
}

}
