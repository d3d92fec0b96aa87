#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgsynth/delineate.hpp"
#include "ecgsynth/preprocess.hpp"
#include "ecgsynth/record.hpp"

namespace ecgsynth {

// Predictor order is part of the model file format; do not reorder.
enum class Feature : std::uint8_t {
  RHeight,  // uV
  PHeight,  // uV
  THeight,  // uV
  SPeak,    // uV
  QPeak,    // uV
  Rr,       // ms
  Qrs,      // ms, Qpeak -> Speak
  St,       // ms, Speak -> Ton
  Pr,       // ms, Pon -> Qpeak
  TWave,    // ms, Ton -> Toff
};
inline constexpr std::size_t kFeatureCount = 10;

std::string_view feature_name(Feature f);

struct BeatFeatures {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
};

// Features of the beat whose R peak is `beat.at(Rpeak)`. Amplitudes are read
// from `signal` (the whole lead, since P precedes R) relative to the median of
// the 40 ms window ending 20 ms before Qpeak. Throws MissingLandmark.
BeatFeatures extract_features(std::span<const double> signal, double fs, const BeatFiducials& beat,
                              double rr_s);
BeatFeatures extract_features(const BeatSegment& segment, const BeatFiducials& beat,
                              std::span<const double> signal, double fs);

// Preprocessed lead with its detection, delineation and segmentation.
struct LeadAnalysis {
  LeadId lead{LeadId::II};
  double fs{0.0};
  std::vector<double> filtered;
  QrsDetection qrs;
  FiducialSet fiducials;
  Segmentation segmentation;
  // Per segment: features, or nullopt when a landmark is missing.
  std::vector<std::optional<BeatFeatures>> features;
};

LeadAnalysis analyze_lead(std::span<const double> signal, double fs, LeadId lead,
                          const PreprocessConfig& config,
                          std::optional<int> polarity = std::nullopt);

// Greedy nearest pairing of R peaks within `tolerance_s`; returns index pairs
// (into a, into b) in increasing order.
std::vector<std::pair<std::size_t, std::size_t>> pair_r_peaks(std::span<const std::size_t> a,
                                                             std::span<const std::size_t> b,
                                                             double fs, double tolerance_s = 0.150);

struct LagSample {
  BeatFeatures features;  // from the current lead j
  double lag_ms{0.0};     // delta_i - delta_j
  std::size_t beat{0};    // segment index in the current lead
};

struct TrainingSet {
  LeadId missing{LeadId::II};  // i
  LeadId current{LeadId::I};   // j
  std::string source;
  std::vector<LagSample> samples;
  std::size_t outliers{0};
  std::size_t size() const { return samples.size(); }
};

inline constexpr double kLagGateMs = 200.0;
inline constexpr std::size_t kMinTrainingBeats = 10;

// Segment pairs (index into missing.segments, index into current.segments)
// covering the same RR interval, restricted to segments starting before
// `window_s`.
std::vector<std::pair<std::size_t, std::size_t>> align_segments(const LeadAnalysis& missing,
                                                                const LeadAnalysis& current,
                                                                double window_s);

// Throws InsufficientBeats when fewer than 10 samples survive.
TrainingSet build_training_set(const LeadAnalysis& missing, const LeadAnalysis& current,
                               double window_s, const std::string& source = "");
// Throws LeadMissing, InsufficientBeats.
TrainingSet build_training_set(const MultiLeadRecord& historic, LeadId missing, LeadId current,
                               double window_s, const PreprocessConfig& config = {});

void write_training_set_csv(const TrainingSet& set, std::ostream& out);

}  // namespace ecgsynth
