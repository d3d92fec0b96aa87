#include "ecgsynth/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "json.hpp"

#include "ecgsynth/delineate.hpp"
#include "ecgsynth/error.hpp"
#include "ecgsynth/preprocess.hpp"
#include "ecgsynth/record_io.hpp"
#include "ecgsynth/vcg.hpp"

namespace ecgsynth {

namespace {

struct Dipole {
  Wave wave;
  std::array<double, 3> xyz;  // mV along X (left), Y (feet), Z
  double center_ms;
  double width_ms;
};

constexpr std::array<Dipole, kWaveCount> kDipoles = {{
    {Wave::P, {0.1549, 0.0638, -0.1093}, -170.0, 20.0},
    {Wave::Q, {-0.0606, -0.0364, -0.0970}, -40.0, 8.0},
    {Wave::R, {1.3382, 0.7193, 0.5018}, 0.0, 10.0},
    {Wave::S, {-0.2010, -0.2814, 0.2010}, 40.0, 9.0},
    {Wave::T, {0.3711, 0.1310, -0.2183}, 260.0, 40.0},
}};

double lag_value(const LagSpec& lag, std::size_t beat, double rr_ms) {
  switch (lag.kind) {
    case LagKind::None: return 0.0;
    case LagKind::Constant: return lag.value_ms;
    case LagKind::LinearInRr: return lag.slope * (rr_ms - lag.rr_center_ms);
    case LagKind::Sinusoidal:
      return lag.amplitude_ms *
             std::sin(2.0 * std::numbers::pi * static_cast<double>(beat) / lag.period_beats +
                      lag.phase_rad);
  }
  return 0.0;
}

double template_value(const std::array<WaveParams, kWaveCount>& waves,
                      const std::array<double, kWaveCount>& scale, double t_ms) {
  double v = 0.0;
  for (std::size_t w = 0; w < kWaveCount; ++w) {
    const double d = (t_ms - waves[w].center_ms) / waves[w].width_ms;
    v += scale[w] * waves[w].amplitude_mv * std::exp(-0.5 * d * d);
  }
  return v;
}

// Exact extremum of the beat template near one wave's centre (0.01 ms grid).
double wave_extremum_ms(const std::array<WaveParams, kWaveCount>& waves,
                        const std::array<double, kWaveCount>& scale, std::size_t w) {
  const auto& wp = waves[w];
  const double sign = wp.amplitude_mv >= 0.0 ? 1.0 : -1.0;
  double best_t = wp.center_ms;
  double best_v = -std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::ceil(wp.width_ms * 100.0));
  for (int k = -steps; k <= steps; ++k) {
    const double t = wp.center_ms + 0.01 * k;
    const double v = sign * template_value(waves, scale, t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace

const LeadTruth& GroundTruth::lead(LeadId id) const {
  for (const auto& l : leads) {
    if (l.lead == id) return l;
  }
  throw Error(ErrorCode::LeadMissing, "no ground truth for lead " + std::string(lead_name(id)));
}

void validate_synth_config(const SynthConfig& config) {
  if (!(config.fs > 0.0) || !(config.duration_s > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "fs and duration must be positive");
  }
  if (config.leads.empty()) throw Error(ErrorCode::InvalidConfig, "no leads configured");
  for (const auto& l : config.leads) {
    for (const auto& w : l.waves) {
      if (!(w.width_ms > 0.0)) throw Error(ErrorCode::InvalidConfig, "wave widths must be > 0");
    }
  }
  for (std::size_t a = 0; a < config.leads.size(); ++a) {
    for (std::size_t b = a + 1; b < config.leads.size(); ++b) {
      if (config.leads[a].lead == config.leads[b].lead) {
        throw Error(ErrorCode::InvalidConfig, "duplicate lead in config");
      }
    }
  }
  const auto& rr = config.rr;
  if (rr.explicit_r_times_s.empty()) {
    const double worst = 2.0 * (rr.rsa_amplitude_ms + 4.0 * rr.variability_ms);
    if (rr.mean_ms - worst < 200.0 || rr.mean_ms + worst > 3000.0) {
      throw Error(ErrorCode::InvalidConfig, "RR schedule leaves the 200-3000 ms plausibility gate");
    }
    if (!(rr.rsa_period_beats > 0.0)) throw Error(ErrorCode::InvalidConfig, "bad RSA period");
  } else {
    for (std::size_t k = 1; k < rr.explicit_r_times_s.size(); ++k) {
      const double d = rr.explicit_r_times_s[k] - rr.explicit_r_times_s[k - 1];
      if (d < 0.2 || d > 3.0) {
        throw Error(ErrorCode::InvalidConfig, "explicit R times leave the plausibility gate");
      }
    }
  }
  for (const auto& lag : config.lags) {
    if (lag.kind == LagKind::Sinusoidal && !(lag.period_beats > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "bad lag period");
    }
    if (lag.mode == LagMode::Shift &&
        std::abs(lag.value_ms) + std::abs(lag.amplitude_ms) + 4.0 * lag.noise_ms > 100.0) {
      throw Error(ErrorCode::InvalidConfig, "lag functions must stay within +/-100 ms");
    }
  }
}

SyntheticRecord generate_synthetic_record(const SynthConfig& config, std::uint64_t seed) {
  validate_synth_config(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Reference beat times.
  std::vector<double> r_ref;
  if (!config.rr.explicit_r_times_s.empty()) {
    r_ref = config.rr.explicit_r_times_s;
  } else {
    const auto& rr = config.rr;
    for (std::size_t k = 0;; ++k) {
      const double grid = rr.first_beat_s + static_cast<double>(k) * rr.mean_ms / 1000.0;
      if (grid > config.duration_s + 1.0) break;
      const double rsa = rr.rsa_amplitude_ms *
                         std::sin(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  rr.rsa_period_beats);
      const double jitter = rr.variability_ms * gauss(rng);
      r_ref.push_back(grid + (rsa + jitter) / 1000.0);
    }
  }
  const std::size_t nbeats = r_ref.size();
  std::vector<double> rr_ms(nbeats, config.rr.mean_ms);
  for (std::size_t k = 1; k < nbeats; ++k) rr_ms[k] = (r_ref[k] - r_ref[k - 1]) * 1000.0;

  std::vector<double> amp_scale(nbeats, 1.0);
  for (std::size_t k = 0; k < nbeats; ++k) {
    amp_scale[k] = 1.0 + config.amplitude_modulation_depth *
                             std::sin(2.0 * std::numbers::pi * static_cast<double>(k) /
                                      config.amplitude_modulation_period_beats);
  }

  std::size_t sync_beat = 0;
  while (sync_beat + 1 < nbeats && r_ref[sync_beat] < config.sync_time_s) ++sync_beat;

  const auto n = static_cast<std::size_t>(std::llround(config.duration_s * config.fs));
  const double fs = config.fs;

  SyntheticRecord out;
  out.truth.reference_r_times_s = r_ref;
  out.truth.rr_ms = rr_ms;

  RecordHeader header;
  header.name = config.name;
  header.fs = fs;
  std::vector<std::vector<double>> clean;
  std::vector<std::vector<double>> noisy;

  for (const auto& lw : config.leads) {
    header.leads.push_back(LeadDescriptor{lw.lead, 1.0, 0, StorageFormat::Csv});
    const LagSpec* lag = nullptr;
    for (const auto& l : config.lags) {
      if (l.lead == lw.lead) lag = &l;
    }

    // Per-beat lag values and the resulting template offsets.
    std::vector<double> value(nbeats, 0.0);
    std::vector<double> jitter(nbeats, 0.0);
    if (lag) {
      for (std::size_t k = 0; k < nbeats; ++k) {
        value[k] = lag_value(*lag, k, rr_ms[k]);
        jitter[k] = lag->noise_ms * gauss(rng);
      }
    }
    std::vector<double> shift(nbeats, 0.0);
    std::vector<double> increment(nbeats, 0.0);
    if (lag && lag->mode == LagMode::Increment) {
      std::vector<double> cum(nbeats, 0.0);
      for (std::size_t k = 1; k < nbeats; ++k) cum[k] = cum[k - 1] + value[k];
      // Jitter lands on the offset itself so it does not accumulate.
      for (std::size_t k = 0; k < nbeats; ++k) shift[k] = cum[k] - cum[sync_beat] + jitter[k];
    } else if (lag) {
      for (std::size_t k = 0; k < nbeats; ++k) shift[k] = value[k] + jitter[k];
    }
    for (std::size_t k = 1; k < nbeats; ++k) increment[k] = shift[k] - shift[k - 1];

    LeadTruth truth;
    truth.lead = lw.lead;
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < nbeats; ++k) {
      const double r_time = r_ref[k] + shift[k] / 1000.0;
      std::array<double, kWaveCount> scale{};
      scale.fill(amp_scale[k]);
      const double twa = (k % 2 == 0) ? 1.0 + config.twa_fraction : 1.0 - config.twa_fraction;
      scale[static_cast<std::size_t>(Wave::T)] *= twa;

      for (std::size_t w = 0; w < kWaveCount; ++w) {
        const auto& wp = lw.waves[w];
        if (wp.amplitude_mv == 0.0) continue;
        const double center = r_time + wp.center_ms / 1000.0;
        const double sigma = wp.width_ms / 1000.0;
        const auto lo = static_cast<long long>(std::floor((center - 6.0 * sigma) * fs));
        const auto hi = static_cast<long long>(std::ceil((center + 6.0 * sigma) * fs));
        for (long long i = std::max<long long>(lo, 0);
             i <= std::min<long long>(hi, static_cast<long long>(n) - 1); ++i) {
          const double d = (static_cast<double>(i) / fs - center) / sigma;
          x[static_cast<std::size_t>(i)] += scale[w] * wp.amplitude_mv * std::exp(-0.5 * d * d);
        }
      }

      BeatTruth bt;
      bt.r_time_s = r_time;
      bt.amplitude_scale = amp_scale[k];
      bt.shift_ms = shift[k];
      bt.increment_ms = increment[k];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      auto peak = [&](Wave w) {
        const auto idx = static_cast<std::size_t>(w);
        if (lw.waves[idx].amplitude_mv == 0.0) return nan;
        return r_time + wave_extremum_ms(lw.waves, scale, idx) / 1000.0;
      };
      auto edge = [&](Wave w, double side) {
        const auto& wp = lw.waves[static_cast<std::size_t>(w)];
        if (wp.amplitude_mv == 0.0) return nan;
        return r_time + (wp.center_ms + side * 2.5 * wp.width_ms) / 1000.0;
      };
      bt.landmarks = {edge(Wave::P, -1.0), peak(Wave::P), edge(Wave::P, 1.0),
                      peak(Wave::Q),       peak(Wave::R), peak(Wave::S),
                      edge(Wave::T, -1.0), peak(Wave::T), edge(Wave::T, 1.0)};
      truth.beats.push_back(bt);
    }

    std::vector<double> y = x;
    if (std::isfinite(config.snr_db)) {
      double power = 0.0;
      for (double v : x) power += v * v;
      power /= static_cast<double>(std::max<std::size_t>(n, 1));
      const double sigma = std::sqrt(power / std::pow(10.0, config.snr_db / 10.0));
      for (double& v : y) v += sigma * gauss(rng);
    }
    const double drift_phase = 0.7 * static_cast<double>(lead_index(lw.lead));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      y[i] += config.drift_amplitude_mv *
                  std::sin(2.0 * std::numbers::pi * config.drift_frequency_hz * t + drift_phase) +
              config.powerline_amplitude_mv *
                  std::sin(2.0 * std::numbers::pi * config.powerline_frequency_hz * t);
    }
    clean.push_back(std::move(x));
    noisy.push_back(std::move(y));
    out.truth.leads.push_back(std::move(truth));
  }

  out.clean = MultiLeadRecord(header, std::move(clean));
  out.record = MultiLeadRecord(header, std::move(noisy));
  return out;
}

std::vector<LeadWaves> dipole_twelve_lead_waves() {
  std::vector<LeadWaves> out;
  for (LeadId lead : kStandardLeads) {
    LeadWaves lw;
    lw.lead = lead;
    for (std::size_t w = 0; w < kWaveCount; ++w) {
      const auto& d = kDipoles[w];
      const auto leads = forward_dower_sample(d.xyz);
      const double i = leads[6];
      const double ii = leads[7];
      double amp = 0.0;
      switch (lead) {
        case LeadId::I: amp = i; break;
        case LeadId::II: amp = ii; break;
        case LeadId::III: amp = ii - i; break;
        case LeadId::aVR: amp = -(i + ii) / 2.0; break;
        case LeadId::aVL: amp = i - ii / 2.0; break;
        case LeadId::aVF: amp = ii - i / 2.0; break;
        default: amp = leads[lead_index(lead) - lead_index(LeadId::V1)]; break;
      }
      lw.waves[w] = WaveParams{amp, d.center_ms, d.width_ms};
    }
    out.push_back(lw);
  }
  return out;
}

LeadWaves single_lead_waves(LeadId lead) {
  LeadWaves lw;
  lw.lead = lead;
  lw.waves = {WaveParams{0.15, -170.0, 20.0}, WaveParams{-0.1, -40.0, 8.0},
              WaveParams{1.2, 0.0, 10.0}, WaveParams{-0.3, 40.0, 9.0},
              WaveParams{0.3, 260.0, 40.0}};
  return lw;
}

SynthConfig lagged_twelve_lead_config(double duration_s, double sync_time_s) {
  SynthConfig config;
  config.fs = 1000.0;
  config.duration_s = duration_s;
  config.leads = dipole_twelve_lead_waves();
  config.rr.mean_ms = 800.0;
  config.rr.variability_ms = 15.0;
  config.rr.rsa_amplitude_ms = 40.0;
  config.rr.rsa_period_beats = 5.0;
  config.amplitude_modulation_depth = 0.1;
  config.amplitude_modulation_period_beats = 4.3;
  config.snr_db = 30.0;
  config.sync_time_s = sync_time_s;
  config.name = "simgen12";
  const std::array<std::pair<LeadId, double>, 11> slopes = {{{LeadId::I, 0.125},
                                                             {LeadId::III, 0.02},
                                                             {LeadId::aVR, -0.1},
                                                             {LeadId::aVL, 0.15},
                                                             {LeadId::aVF, -0.05},
                                                             {LeadId::V1, -0.15},
                                                             {LeadId::V2, 0.075},
                                                             {LeadId::V3, 0.175},
                                                             {LeadId::V4, -0.125},
                                                             {LeadId::V5, 0.05},
                                                             {LeadId::V6, 0.15}}};
  for (const auto& [lead, slope] : slopes) {
    LagSpec lag;
    lag.lead = lead;
    lag.kind = LagKind::LinearInRr;
    lag.mode = LagMode::Increment;
    lag.slope = slope;
    lag.rr_center_ms = config.rr.mean_ms;
    // Offset jitter of 1/sqrt(2) ms puts 1 ms of noise on each increment.
    lag.noise_ms = lead == LeadId::III ? std::numbers::sqrt2 / 2.0 : 0.0;
    config.lags.push_back(lag);
  }
  return config;
}

std::vector<RecordedSegment> simulate_handheld_session(const MultiLeadRecord& record,
                                                       const HandheldSession& session) {
  if (session.segments.empty()) throw Error(ErrorCode::ScheduleOutOfRange, "empty schedule");
  const double duration = record.duration();
  const double eps = 1e-9 * std::max(1.0, duration);
  for (std::size_t k = 0; k < session.segments.size(); ++k) {
    const auto& s = session.segments[k];
    if (!(s.t_start_s >= -eps) || !(s.t_end_s > s.t_start_s) || s.t_end_s > duration + eps) {
      throw Error(ErrorCode::ScheduleOutOfRange,
                  "segment " + std::to_string(k) + " outside the record");
    }
    if (!record.has_lead(s.lead)) {
      throw Error(ErrorCode::ScheduleOutOfRange,
                  "record has no lead " + std::string(lead_name(s.lead)));
    }
    if (k > 0) {
      const auto& prev = session.segments[k - 1];
      if (s.t_start_s < prev.t_end_s + session.switch_gap_s - eps) {
        throw Error(ErrorCode::ScheduleOutOfRange,
                    "segment " + std::to_string(k) + " overlaps the previous one");
      }
    }
  }
  std::vector<RecordedSegment> out;
  for (const auto& s : session.segments) {
    RecordedSegment seg{s, slice_record(record, s.t_start_s, s.t_end_s, {s.lead}), 0};
    try {
      const auto filtered = preprocess_signal(seg.signal.lead(0), seg.signal.fs(), PreprocessConfig{});
      seg.beat_count = detect_r_peaks(filtered, seg.signal.fs()).size();
    } catch (const Error&) {
      seg.beat_count = 0;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::string truth_json(const GroundTruth& truth) {
  using ojson = nlohmann::ordered_json;
  auto number = [](double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); };
  ojson j;
  j["reference_r_times_s"] = truth.reference_r_times_s;
  j["rr_ms"] = truth.rr_ms;
  ojson leads = ojson::array();
  for (const auto& lt : truth.leads) {
    ojson beats = ojson::array();
    for (const auto& b : lt.beats) {
      ojson beat;
      beat["r_time_s"] = b.r_time_s;
      beat["shift_ms"] = b.shift_ms;
      beat["increment_ms"] = b.increment_ms;
      beat["amplitude_scale"] = b.amplitude_scale;
      ojson marks;
      for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        marks[std::string(landmark_name(static_cast<Landmark>(k)))] = number(b.landmarks[k]);
      }
      beat["landmarks"] = marks;
      beats.push_back(beat);
    }
    ojson entry;
    entry["lead"] = lead_name(lt.lead);
    entry["beats"] = beats;
    leads.push_back(entry);
  }
  j["leads"] = leads;
  return j.dump(2) + "\n";
}

MultiLeadRecord naive_reassembly(const std::vector<RecordedSegment>& segments) {
  if (segments.empty()) throw Error(ErrorCode::ScheduleOutOfRange, "no segments to reassemble");
  RecordHeader header;
  header.name = segments.front().signal.header().name + "_naive";
  header.fs = segments.front().signal.fs();
  std::size_t n = segments.front().signal.size();
  for (const auto& s : segments) {
    if (s.signal.fs() != header.fs) throw Error(ErrorCode::ScheduleOutOfRange, "segments differ in sampling rate");
    if (header.find(s.segment.lead)) {
      throw Error(ErrorCode::ScheduleOutOfRange, "lead " + std::string(lead_name(s.segment.lead)) + " recorded twice");
    }
    header.leads.push_back(LeadDescriptor{s.segment.lead, 1.0, 0, StorageFormat::Csv});
    n = std::min(n, s.signal.size());
  }
  std::vector<std::vector<double>> samples;
  for (const auto& s : segments) {
    const auto lead = s.signal.lead(std::size_t{0});
    samples.emplace_back(lead.begin(), lead.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return MultiLeadRecord(std::move(header), std::move(samples), segments.front().signal.start_time());
}

}  // namespace ecgsynth
