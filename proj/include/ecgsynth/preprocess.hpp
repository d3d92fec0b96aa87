#pragma once

#include <array>
#include <span>
#include <vector>

#include "ecgsynth/record.hpp"

namespace ecgsynth {

struct PreprocessConfig {
  double low_hz{0.5};
  double high_hz{40.0};
  double baseline_window1_s{0.2};
  double baseline_window2_s{0.6};
  bool remove_baseline{true};
  bool bandpass{true};
};

// Throws InvalidCutoffs / InvalidConfig when the config cannot be applied at fs.
void validate_preprocess_config(const PreprocessConfig& config, double fs);

// Subtracts a two-stage median baseline (window 1 then window 2). The medians
// run twice: on the signal, then on the signal minus a 1 s moving average of
// the first estimate. Throws SignalTooShort when the signal is not longer than
// the second window.
std::vector<double> remove_baseline(std::span<const double> signal, double fs,
                                    const PreprocessConfig& config);

// Zero-phase 4th-order Butterworth band-pass (forward-backward).
std::vector<double> bandpass(std::span<const double> signal, double fs,
                             const PreprocessConfig& config);

// remove_baseline then bandpass, honouring the per-stage enable flags.
std::vector<double> preprocess_signal(std::span<const double> signal, double fs,
                                      const PreprocessConfig& config);

MultiLeadRecord preprocess_record(const MultiLeadRecord& record, const PreprocessConfig& config);

// Direct-form II transposed second-order section.
struct Biquad {
  double b0{1.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

Biquad butterworth_lowpass_section(double cutoff_hz, double fs, double q);
Biquad butterworth_highpass_section(double cutoff_hz, double fs, double q);

// Zero-phase application of a biquad cascade with odd-reflection padding of
// `pad` samples on each side.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal,
                             std::size_t pad);

// Sliding median with mirrored edges; `window` is forced odd.
std::vector<double> median_filter(std::span<const double> signal, std::size_t window);

}  // namespace ecgsynth
