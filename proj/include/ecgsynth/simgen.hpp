#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecgsynth/delineate.hpp"
#include "ecgsynth/record.hpp"

namespace ecgsynth {

enum class Wave : std::uint8_t { P, Q, R, S, T };
inline constexpr std::size_t kWaveCount = 5;

// One Gaussian component of the beat template, timed relative to the R peak.
struct WaveParams {
  double amplitude_mv{0.0};
  double center_ms{0.0};
  double width_ms{10.0};  // Gaussian sigma
};

struct LeadWaves {
  LeadId lead{LeadId::II};
  std::array<WaveParams, kWaveCount> waves{};
};

enum class LagKind { None, Constant, LinearInRr, Sinusoidal };

// Shift: the lag value is the time offset of beat k's template.
// Increment: the lag value is added to beat k's RR length, i.e. it is the
// per-beat RR difference against the schedule; offsets accumulate and are
// zero at the first beat at or after SynthConfig::sync_time_s.
enum class LagMode { Shift, Increment };

struct LagSpec {
  LeadId lead{LeadId::II};
  LagKind kind{LagKind::None};
  LagMode mode{LagMode::Shift};
  double value_ms{0.0};         // Constant
  double slope{0.0};            // LinearInRr: slope * (RR - rr_center_ms)
  double rr_center_ms{800.0};
  double amplitude_ms{0.0};     // Sinusoidal in beat index
  double period_beats{10.0};
  double phase_rad{0.0};
  double noise_ms{0.0};         // iid Gaussian added to every beat's offset
};

struct RrSchedule {
  double mean_ms{800.0};
  double variability_ms{0.0};      // iid jitter of beat times around the grid
  double rsa_amplitude_ms{0.0};    // sinusoidal beat-time modulation
  double rsa_period_beats{5.0};
  double first_beat_s{0.4};
  // When non-empty, these reference R times (s) replace the generated grid.
  std::vector<double> explicit_r_times_s;
};

struct SynthConfig {
  double fs{1000.0};
  double duration_s{10.0};
  std::vector<LeadWaves> leads;
  RrSchedule rr;
  std::vector<LagSpec> lags;
  double snr_db{std::numeric_limits<double>::infinity()};
  double drift_amplitude_mv{0.0};
  double drift_frequency_hz{0.3};
  double powerline_amplitude_mv{0.0};
  double powerline_frequency_hz{60.0};
  double amplitude_modulation_depth{0.0};  // every wave scaled by 1 + depth*sin(2*pi*k/period)
  double amplitude_modulation_period_beats{4.0};
  double twa_fraction{0.0};  // T amplitude times (1 +/- fraction) on even/odd beats
  double sync_time_s{0.0};
  std::string name{"simgen"};
};

// Throws InvalidConfig.
void validate_synth_config(const SynthConfig& config);

struct BeatTruth {
  double r_time_s{0.0};
  // Seconds; NaN where the wave has zero amplitude. Peaks are the exact
  // extrema of the constructed beat; onsets/offsets are centre -/+ 2.5 sigma.
  std::array<double, kLandmarkCount> landmarks{};
  double amplitude_scale{1.0};
  double shift_ms{0.0};
  double increment_ms{0.0};  // RR length of this lead minus the reference RR
};

struct LeadTruth {
  LeadId lead{LeadId::II};
  std::vector<BeatTruth> beats;
};

struct GroundTruth {
  std::vector<double> reference_r_times_s;
  std::vector<double> rr_ms;  // rr_ms[k] = R(k) - R(k-1); rr_ms[0] = schedule mean
  std::vector<LeadTruth> leads;

  const LeadTruth& lead(LeadId id) const;
};

struct SyntheticRecord {
  MultiLeadRecord record;  // with drift and noise
  MultiLeadRecord clean;   // beats only
  GroundTruth truth;
};

SyntheticRecord generate_synthetic_record(const SynthConfig& config, std::uint64_t seed);

// Ground truth as JSON; NaN landmarks become null.
std::string truth_json(const GroundTruth& truth);

// Beat template of one lead: per-wave amplitudes projected from fixed 3-D
// dipole directions through the Dower matrix, so the 8 independent leads are
// consistent with one vectorcardiogram.
std::vector<LeadWaves> dipole_twelve_lead_waves();
LeadWaves single_lead_waves(LeadId lead = LeadId::II);

// Twelve-lead configuration with RR variability, respiratory amplitude
// modulation and linear-in-RR increment lags on most leads (lead II is the
// unlagged reference).
SynthConfig lagged_twelve_lead_config(double duration_s, double sync_time_s);

struct SessionSegment {
  LeadId lead{LeadId::I};
  double t_start_s{0.0};
  double t_end_s{0.0};
};

struct HandheldSession {
  std::vector<SessionSegment> segments;
  double switch_gap_s{0.0};
};

struct RecordedSegment {
  SessionSegment segment;
  MultiLeadRecord signal;  // single lead
  std::size_t beat_count{0};  // kappa: R peaks detected in the segment
};

// Throws ScheduleOutOfRange for empty, overlapping, unordered, or
// out-of-record segments, or gaps shorter than switch_gap_s.
std::vector<RecordedSegment> simulate_handheld_session(const MultiLeadRecord& record,
                                                       const HandheldSession& session);

// Stacks sequentially recorded single-lead segments as if they were
// synchronous, cut to the shortest segment, on the first segment's clock.
// Throws ScheduleOutOfRange when segments repeat a lead or differ in fs.
MultiLeadRecord naive_reassembly(const std::vector<RecordedSegment>& segments);

}  // namespace ecgsynth
