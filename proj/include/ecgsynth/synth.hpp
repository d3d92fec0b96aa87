#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecgsynth/dtw.hpp"
#include "ecgsynth/features.hpp"
#include "ecgsynth/forest.hpp"
#include "ecgsynth/preprocess.hpp"
#include "ecgsynth/record.hpp"

namespace ecgsynth {

struct SynthesisConfig {
  PreprocessConfig preprocess;
  DtwConfig dtw;
  ForestConfig forest;
  double train_window_s{60.0};
  double drift_clamp_ms{100.0};
  bool lag_correction{true};
  // Remove the least-squares linear trend from the running lag before
  // clamping; a steady trend is prediction bias, not a physiological lag.
  bool detrend_lag{true};
  // Beats are compared at this rate (after z-normalization) when matching.
  double match_rate_hz{100.0};
};

// Historic synchronous record analysed once: per-lead beats and fiducials,
// per-pair beat alignment and per-pair lag models.
class HistoricLibrary {
 public:
  // Analyses every lead of `historic`. Throws NoBeatsFound / SignalTooShort
  // from lead analysis.
  HistoricLibrary(const MultiLeadRecord& historic, const SynthesisConfig& config);

  double fs() const { return fs_; }
  const std::string& name() const { return name_; }
  std::vector<LeadId> leads() const;
  bool has_lead(LeadId lead) const { return analyses_.count(lead) > 0; }
  // Throws LeadMissing.
  const LeadAnalysis& analysis(LeadId lead) const;
  // z-normalized, downsampled beat shapes of a lead, one per segment.
  const std::vector<std::vector<double>>& match_templates(LeadId lead) const;

  // For segment s of `current`, the synchronous segment of `missing`, if any.
  // Throws LeadMissing.
  const std::vector<std::optional<std::size_t>>& pairing(LeadId missing, LeadId current) const;
  // Median of R(missing) - R(current) over paired historic beats, in samples.
  double median_offset(LeadId missing, LeadId current) const;

  // Trains lag models for every other lead against `current`. Pairs without
  // enough usable beats are recorded as failed and fall back to zero lag.
  void train_models(LeadId current, const ForestConfig& forest, double window_s);
  void set_model(LagModel model);
  const LagModel* model(LeadId missing, LeadId current) const;
  // True when training was attempted for the pair (successfully or not).
  bool model_attempted(LeadId missing, LeadId current) const;
  const std::map<std::pair<LeadId, LeadId>, std::string>& failed_models() const { return failed_; }

 private:
  double fs_{0.0};
  std::string name_;
  double match_rate_hz_{100.0};
  std::map<LeadId, LeadAnalysis> analyses_;
  std::map<LeadId, std::vector<std::vector<double>>> templates_;
  std::map<std::pair<LeadId, LeadId>, std::vector<std::optional<std::size_t>>> pairings_;
  std::map<std::pair<LeadId, LeadId>, double> offsets_;
  std::map<std::pair<LeadId, LeadId>, LagModel> models_;
  std::map<std::pair<LeadId, LeadId>, std::string> failed_;
};

// Downsampled, z-normalized shape used for beat matching.
std::vector<double> match_template(std::span<const double> beat, double fs, double rate_hz);

// Current lead analysed against the library: its beats, features, and DTW
// costs against every historic beat of the same lead.
struct CurrentSession {
  LeadId lead{LeadId::I};
  double fs{0.0};
  std::vector<double> raw;
  LeadAnalysis analysis;
  std::vector<std::vector<double>> match_costs;  // [segment][historic segment]
};

// Throws NoBeatsFound for signals without two detectable beats.
CurrentSession prepare_current(std::span<const double> signal, double fs, LeadId lead,
                               const HistoricLibrary& library, const SynthesisConfig& config);

// Historic beat index of the current lead with the lowest matching cost.
// Throws EmptyLibrary.
std::size_t match_historic_beat(const BeatSegment& current, const HistoricLibrary& library,
                                const SynthesisConfig& config);

// Monotone cubic resampling of `source` onto `target_length` samples, then
// scaling. Endpoints are preserved. Throws DegenerateTarget.
std::vector<double> affine_transform_beat(std::span<const double> source, std::size_t target_length,
                                          double scale);

struct BeatProvenance {
  std::size_t beat{0};  // segment index in the current lead
  std::size_t current_start{0};
  std::size_t current_end{0};
  std::optional<std::size_t> historic_beat;  // segment index in the historic current lead
  double delta_current_ms{0.0};
  double delta_hat_ms{0.0};
  double delta_tilde_ms{0.0};
  double energy_scale{1.0};
  double detrend_ms{0.0};  // subtracted from delta_hat by lag detrending
  double clamp_adjust_ms{0.0};
  std::string flag;  // empty, "no_features", "no_model", "gap"
};

struct SynthesizedBeat {
  std::vector<double> samples;
  BeatProvenance provenance;
};

// One beat on its own: length round((delta_j + lag) * fs) + 1 samples.
// Throws ModelMissing when lag correction is on and the pair was never trained.
SynthesizedBeat synthesize_beat(const CurrentSession& current, std::size_t segment, LeadId missing,
                                const HistoricLibrary& library, const SynthesisConfig& config);

struct SynthesizedLead {
  LeadId lead{LeadId::II};
  double fs{0.0};
  double start_time_s{0.0};
  std::vector<double> samples;  // same length as the current signal
  std::vector<BeatProvenance> beats;
};

SynthesizedLead synthesize_lead(const CurrentSession& current, LeadId missing,
                                const HistoricLibrary& library, const SynthesisConfig& config);

struct SynthesisResult {
  LeadId current{LeadId::I};
  MultiLeadRecord record;  // 12 leads; the current lead is the raw input
  std::vector<SynthesizedLead> leads;  // the 11 synthesized leads
};

SynthesisResult synthesize_all(std::span<const double> signal, double fs, LeadId current,
                               const HistoricLibrary& library, const SynthesisConfig& config,
                               double start_time_s = 0.0);

// One JSON object per beat and lead.
void write_provenance_jsonl(const SynthesisResult& result, std::ostream& out);

}  // namespace ecgsynth
