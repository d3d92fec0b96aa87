#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ecgsynth/leads.hpp"

namespace ecgsynth {

enum class Landmark : std::uint8_t { Pon, Ppeak, Poff, Qpeak, Rpeak, Speak, Ton, Tpeak, Toff };
inline constexpr std::size_t kLandmarkCount = 9;

std::string_view landmark_name(Landmark landmark);

struct BeatFiducials {
  std::array<std::optional<std::size_t>, kLandmarkCount> points{};

  bool has(Landmark l) const { return points[static_cast<std::size_t>(l)].has_value(); }
  std::optional<std::size_t> get(Landmark l) const { return points[static_cast<std::size_t>(l)]; }
  // Throws MissingLandmark.
  std::size_t at(Landmark l) const;
  void set(Landmark l, std::optional<std::size_t> v) { points[static_cast<std::size_t>(l)] = v; }
};

struct FiducialSet {
  LeadId lead{LeadId::II};
  double fs{0.0};
  std::vector<BeatFiducials> beats;  // one per R peak, in order
};

// One RR interval: samples from R peak k to R peak k+1 inclusive.
struct BeatSegment {
  LeadId lead{LeadId::II};
  std::size_t index{0};         // index of the starting R peak
  std::size_t start_sample{0};  // sample index of the starting R peak
  double start_time_s{0.0};
  double length_s{0.0};  // (samples.size() - 1) / fs
  std::vector<double> samples;

  std::size_t end_sample() const { return start_sample + samples.size() - 1; }
};

struct QrsDetection {
  std::vector<std::size_t> r_peaks;
  // Peak of the integrated QRS energy for each detected beat.
  std::vector<std::size_t> energy_peaks;
  int polarity{1};  // +1 when R peaks are maxima, -1 when minima
};

// Pan-Tompkins style detector. Expects a preprocessed signal of at least 2 s.
// Throws SignalTooShort or NoBeatsFound (fewer than 2 peaks). A given
// polarity overrides the per-signal choice, so two recordings of one lead
// can be made to mark the same deflection.
QrsDetection detect_qrs(std::span<const double> signal, double fs,
                        std::optional<int> polarity = std::nullopt);
std::vector<std::size_t> detect_r_peaks(std::span<const double> signal, double fs);

FiducialSet delineate_beats(std::span<const double> signal, double fs,
                            std::span<const std::size_t> r_peaks, LeadId lead = LeadId::II);

struct Segmentation {
  std::vector<BeatSegment> segments;
  std::vector<std::size_t> skipped;  // starting R-peak indices of implausible intervals
};

inline constexpr double kMinBeatSeconds = 0.2;
inline constexpr double kMaxBeatSeconds = 3.0;

// Intervals outside [0.2, 3.0] s are skipped and reported. Throws
// ImplausibleBeat when nothing survives, NoBeatsFound with fewer than 2 peaks.
Segmentation segment_beats(std::span<const double> signal, double fs,
                           std::span<const std::size_t> r_peaks, LeadId lead);

// Noise level estimate from the median absolute first difference.
double estimate_noise_sigma(std::span<const double> signal);

// One row per beat, one column per landmark (sample index); absent is empty.
void write_fiducials_csv(const FiducialSet& set, std::ostream& out);

}  // namespace ecgsynth
