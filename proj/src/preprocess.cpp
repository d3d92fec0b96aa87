#include "ecgsynth/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

namespace {

// Q factors of the two sections of a 4th-order Butterworth prototype.
constexpr std::array<double, 2> kButterworth4Q = {1.3065629648763766, 0.5411961001461971};

std::size_t odd_window(double seconds, double fs) {
  auto w = static_cast<std::size_t>(std::llround(seconds * fs));
  if (w % 2 == 0) ++w;
  return std::max<std::size_t>(w, 1);
}

// Centred moving average; the window shrinks at the edges.
std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + x[k];
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k >= half ? k - half : 0;
    const std::size_t b = std::min(n - 1, k + half);
    out[k] = (prefix[b + 1] - prefix[a]) / static_cast<double>(b - a + 1);
  }
  return out;
}

constexpr double kTrendSmoothingS = 1.0;

void run_cascade(std::span<const Biquad> sections, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& s : sections) {
    // Start every section in the steady state for a constant input equal to
    // the first sample, which removes the start-up step.
    const double y0 = s.dc_gain() * level;
    double z2 = s.b2 * level - s.a2 * y0;
    double z1 = y0 - s.b0 * level;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    level = y0;
  }
}

}  // namespace

void validate_preprocess_config(const PreprocessConfig& config, double fs) {
  if (config.bandpass) {
    if (!(config.low_hz > 0.0) || !(config.high_hz > config.low_hz) ||
        !(config.high_hz < fs / 2.0)) {
      throw Error(ErrorCode::InvalidCutoffs,
                  "need 0 < low < high < fs/2, got low=" + format_double(config.low_hz) +
                      " high=" + format_double(config.high_hz) + " fs=" + format_double(fs));
    }
  }
  if (config.remove_baseline) {
    if (!(config.baseline_window1_s > 0.0) ||
        !(config.baseline_window2_s > config.baseline_window1_s)) {
      throw Error(ErrorCode::InvalidConfig, "baseline windows must satisfy 0 < w1 < w2");
    }
  }
}

Biquad butterworth_lowpass_section(double cutoff_hz, double fs, double q) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  return Biquad{(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0,
                (1.0 - alpha) / a0};
}

Biquad butterworth_highpass_section(double cutoff_hz, double fs, double q) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  return Biquad{(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0,
                (1.0 - alpha) / a0};
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal,
                             std::size_t pad) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> x;
  x.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) x.push_back(2.0 * signal.front() - signal[k]);
  x.insert(x.end(), signal.begin(), signal.end());
  for (std::size_t k = 1; k <= pad; ++k) x.push_back(2.0 * signal.back() - signal[n - 1 - k]);

  run_cascade(sections, x);
  std::reverse(x.begin(), x.end());
  run_cascade(sections, x);
  std::reverse(x.begin(), x.end());
  return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(pad),
                             x.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> median_filter(std::span<const double> signal, std::size_t window) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  if (window % 2 == 0) ++window;
  const auto half = static_cast<long long>(window / 2);
  const auto sn = static_cast<long long>(n);
  auto at = [&](long long k) {
    // Mirror about the end samples; fold repeatedly for windows longer than n.
    while (k < 0 || k >= sn) {
      if (k < 0) k = -k;
      if (k >= sn) k = 2 * (sn - 1) - k;
      if (sn == 1) k = 0;
    }
    return signal[static_cast<std::size_t>(k)];
  };

  std::vector<double> sorted;
  sorted.reserve(window);
  for (long long k = -half; k <= half; ++k) sorted.push_back(at(k));
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> out(n);
  for (long long t = 0; t < sn; ++t) {
    out[static_cast<std::size_t>(t)] = sorted[window / 2];
    if (t + 1 == sn) break;
    const double leaving = at(t - half);
    const double entering = at(t + half + 1);
    sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), leaving));
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), entering), entering);
  }
  return out;
}

std::vector<double> remove_baseline(std::span<const double> signal, double fs,
                                    const PreprocessConfig& config) {
  if (!(config.baseline_window1_s > 0.0) ||
      !(config.baseline_window2_s > config.baseline_window1_s)) {
    throw Error(ErrorCode::InvalidConfig, "baseline windows must satisfy 0 < w1 < w2");
  }
  if (static_cast<double>(signal.size()) <= config.baseline_window2_s * fs) {
    throw Error(ErrorCode::SignalTooShort,
                std::to_string(signal.size()) + " samples do not exceed the " +
                    format_double(config.baseline_window2_s) + " s baseline window");
  }
  const auto w1 = odd_window(config.baseline_window1_s, fs);
  const auto w2 = odd_window(config.baseline_window2_s, fs);
  auto median_baseline = [&](std::span<const double> x) {
    return median_filter(median_filter(x, w1), w2);
  };
  // Second pass on what is left after the smoothed first estimate.
  const auto trend = moving_average(median_baseline(signal), odd_window(kTrendSmoothingS, fs));
  std::vector<double> out(signal.size());
  for (std::size_t k = 0; k < signal.size(); ++k) out[k] = signal[k] - trend[k];
  const auto residual = median_baseline(out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= residual[k];
  return out;
}

std::vector<double> bandpass(std::span<const double> signal, double fs,
                             const PreprocessConfig& config) {
  PreprocessConfig check = config;
  check.bandpass = true;
  check.remove_baseline = false;
  validate_preprocess_config(check, fs);
  std::array<Biquad, 4> sections{};
  for (std::size_t k = 0; k < 2; ++k) {
    sections[k] = butterworth_highpass_section(config.low_hz, fs, kButterworth4Q[k]);
    sections[k + 2] = butterworth_lowpass_section(config.high_hz, fs, kButterworth4Q[k]);
  }
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * fs / config.low_hz));
  return filtfilt(sections, signal, pad);
}

std::vector<double> preprocess_signal(std::span<const double> signal, double fs,
                                      const PreprocessConfig& config) {
  validate_preprocess_config(config, fs);
  std::vector<double> out(signal.begin(), signal.end());
  if (config.remove_baseline) out = remove_baseline(out, fs, config);
  if (config.bandpass) out = bandpass(out, fs, config);
  return out;
}

MultiLeadRecord preprocess_record(const MultiLeadRecord& record, const PreprocessConfig& config) {
  if (record.size() == 0) throw Error(ErrorCode::SignalTooShort, "empty record");
  if (!config.remove_baseline && !config.bandpass) return record;
  std::vector<std::vector<double>> samples;
  samples.reserve(record.lead_count());
  for (std::size_t k = 0; k < record.lead_count(); ++k) {
    samples.push_back(preprocess_signal(record.lead(k), record.fs(), config));
  }
  RecordHeader header = record.header();
  header.range_mv.reset();
  return MultiLeadRecord(std::move(header), std::move(samples), record.start_time());
}

}  // namespace ecgsynth
