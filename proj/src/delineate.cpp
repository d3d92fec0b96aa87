#include "ecgsynth/delineate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ecgsynth/error.hpp"
#include "ecgsynth/preprocess.hpp"

namespace ecgsynth {

namespace {

std::size_t samples_for(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Centred moving average with a window shrunk at the edges.
std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

// Smoothed central-difference derivative (mV per sample).
std::vector<double> smooth_derivative(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = 0.5 * (x[i + 1] - x[i - 1]);
  if (n > 1) {
    d[0] = x[1] - x[0];
    d[n - 1] = x[n - 1] - x[n - 2];
  }
  return moving_average(d, std::max<std::size_t>(1, samples_for(0.010, fs)) | 1U);
}

struct Candidate {
  std::size_t index;
  double value;
};

}  // namespace

std::string_view landmark_name(Landmark landmark) {
  static constexpr std::array<std::string_view, kLandmarkCount> names = {
      "Pon", "Ppeak", "Poff", "Qpeak", "Rpeak", "Speak", "Ton", "Tpeak", "Toff"};
  return names[static_cast<std::size_t>(landmark)];
}

std::size_t BeatFiducials::at(Landmark l) const {
  const auto v = get(l);
  if (!v) throw Error(ErrorCode::MissingLandmark, std::string(landmark_name(l)) + " is absent");
  return *v;
}

double estimate_noise_sigma(std::span<const double> signal) {
  if (signal.size() < 2) return 0.0;
  std::vector<double> diffs(signal.size() - 1);
  for (std::size_t i = 0; i + 1 < signal.size(); ++i) {
    diffs[i] = std::abs(signal[i + 1] - signal[i]);
  }
  return median_of(std::move(diffs)) / (0.6745 * std::sqrt(2.0));
}

QrsDetection detect_qrs(std::span<const double> signal, double fs, std::optional<int> polarity) {
  const std::size_t n = signal.size();
  if (!(fs > 0.0) || n < samples_for(2.0, fs)) {
    throw Error(ErrorCode::SignalTooShort, "QRS detection needs at least 2 s of signal");
  }

  // QRS-energy band, derivative, squaring, integration.
  const double q = std::sqrt(0.5);
  const std::array<Biquad, 2> band = {butterworth_highpass_section(5.0, fs, q),
                                      butterworth_lowpass_section(std::min(15.0, 0.45 * fs), fs, q)};
  const auto bp = filtfilt(band, signal, std::min(n - 1, samples_for(1.0, fs)));
  std::vector<double> deriv(n, 0.0);
  auto at = [&](std::ptrdiff_t i) {
    return bp[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1))];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    deriv[i] = (2.0 * at(k + 2) + at(k + 1) - at(k - 1) - 2.0 * at(k - 2)) * fs / 8.0;
  }
  std::vector<double> squared(n);
  for (std::size_t i = 0; i < n; ++i) squared[i] = deriv[i] * deriv[i];
  const auto mwi = moving_average(squared, samples_for(0.150, fs) | 1U);

  const double peak_energy = *std::max_element(mwi.begin(), mwi.end());
  if (!(peak_energy > 1e-18)) throw Error(ErrorCode::NoBeatsFound, "signal carries no QRS energy");

  // Candidate peaks: local maxima that dominate +/-100 ms.
  const std::size_t guard = samples_for(0.100, fs);
  std::vector<Candidate> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])) continue;
    const std::size_t lo = i >= guard ? i - guard : 0;
    const std::size_t hi = std::min(n - 1, i + guard);
    bool dominant = true;
    for (std::size_t k = lo; k <= hi && dominant; ++k) {
      if (mwi[k] > mwi[i] || (k < i && mwi[k] == mwi[i])) dominant = false;
    }
    if (dominant) candidates.push_back({i, mwi[i]});
  }

  const std::size_t learn = std::min(n, samples_for(2.0, fs));
  double spki = 0.25 * *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn));
  double npki = 0.5 * std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                static_cast<double>(learn);

  const std::size_t refractory = samples_for(0.200, fs);
  const std::size_t t_wave_window = samples_for(0.360, fs);
  const std::size_t slope_window = samples_for(0.075, fs);
  auto slope_of = [&](std::size_t c) {
    const std::size_t lo = c >= slope_window ? c - slope_window : 0;
    double s = 0.0;
    for (std::size_t k = lo; k <= c; ++k) s = std::max(s, std::abs(deriv[k]));
    return s;
  };

  std::vector<Candidate> accepted;
  std::vector<double> slopes;
  std::vector<Candidate> noise_peaks;
  auto rr_average = [&]() {
    const std::size_t m = accepted.size();
    if (m < 2) return 0.0;
    const std::size_t first = m > 9 ? m - 9 : 0;
    return static_cast<double>(accepted[m - 1].index - accepted[first].index) /
           static_cast<double>(m - 1 - first);
  };
  auto search_back = [&](std::size_t until) {
    const double rr = rr_average();
    if (accepted.empty() || rr <= 0.0) return;
    if (static_cast<double>(until - accepted.back().index) <= 1.66 * rr) return;
    const double thr2 = 0.5 * (npki + 0.25 * (spki - npki));
    const Candidate* best = nullptr;
    for (const auto& c : noise_peaks) {
      if (c.index <= accepted.back().index + refractory || c.index >= until) continue;
      if (c.value > thr2 && (!best || c.value > best->value)) best = &c;
    }
    if (best) {
      const Candidate found = *best;
      accepted.push_back(found);
      slopes.push_back(slope_of(found.index));
      spki = 0.25 * found.value + 0.75 * spki;
    }
  };

  for (const auto& c : candidates) {
    search_back(c.index);
    if (!accepted.empty() && c.index - accepted.back().index < refractory) continue;
    const double thr1 = npki + 0.25 * (spki - npki);
    if (c.value > thr1) {
      const double slope = slope_of(c.index);
      if (!accepted.empty() && c.index - accepted.back().index < t_wave_window &&
          slope < 0.5 * slopes.back()) {
        npki = 0.125 * c.value + 0.875 * npki;
        noise_peaks.push_back(c);
        continue;
      }
      accepted.push_back(c);
      slopes.push_back(slope);
      spki = 0.125 * c.value + 0.875 * spki;
    } else {
      npki = 0.125 * c.value + 0.875 * npki;
      noise_peaks.push_back(c);
    }
  }
  search_back(n);

  // Locate R on the input signal with a polarity shared by the whole signal.
  const std::size_t half = samples_for(0.075, fs);
  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& c : accepted) {
    const std::size_t lo = c.index >= half ? c.index - half : 0;
    const std::size_t hi = std::min(n - 1, c.index + half);
    const auto [mn, mx] = std::minmax_element(signal.begin() + static_cast<std::ptrdiff_t>(lo),
                                              signal.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    pos.push_back(*mx);
    neg.push_back(-*mn);
  }
  QrsDetection out;
  out.polarity = polarity ? (*polarity >= 0 ? 1 : -1) : (median_of(pos) >= median_of(neg) ? 1 : -1);
  const double pol = out.polarity;
  for (const auto& c : accepted) {
    const std::size_t lo = c.index >= half ? c.index - half : 0;
    const std::size_t hi = std::min(n - 1, c.index + half);
    std::size_t r = lo;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (pol * signal[k] > pol * signal[r]) r = k;
    }
    if (!out.r_peaks.empty() && r < out.r_peaks.back() + refractory) {
      if (pol * signal[r] > pol * signal[out.r_peaks.back()]) {
        out.r_peaks.back() = r;
        out.energy_peaks.back() = c.index;
      }
      continue;
    }
    out.r_peaks.push_back(r);
    out.energy_peaks.push_back(c.index);
  }
  if (out.r_peaks.size() < 2) throw Error(ErrorCode::NoBeatsFound, "fewer than 2 R peaks detected");
  return out;
}

std::vector<std::size_t> detect_r_peaks(std::span<const double> signal, double fs) {
  return detect_qrs(signal, fs).r_peaks;
}

FiducialSet delineate_beats(std::span<const double> signal, double fs,
                            std::span<const std::size_t> r_peaks, LeadId lead) {
  FiducialSet out;
  out.lead = lead;
  out.fs = fs;
  const std::size_t n = signal.size();
  if (n == 0 || r_peaks.empty()) return out;

  const double presence = std::max(0.01, 3.0 * estimate_noise_sigma(signal));
  std::vector<double> r_values;
  for (std::size_t r : r_peaks) r_values.push_back(signal[std::min(r, n - 1)]);
  const double pol = median_of(r_values) >= 0.0 ? 1.0 : -1.0;
  const auto d = smooth_derivative(signal, fs);
  const auto ms = [&](double v) { return static_cast<std::ptrdiff_t>(std::llround(v * fs / 1000.0)); };
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  const auto clampi = [&](std::ptrdiff_t i) { return std::clamp<std::ptrdiff_t>(i, 0, last); };
  constexpr double kEdgeFraction = 0.18;  // derivative level at 2.5 sigma of a Gaussian

  // Walks from the steepest point between `from` and `peak` outward until the
  // derivative falls below kEdgeFraction of that slope; stops at `limit`.
  auto find_edge = [&](std::ptrdiff_t peak, std::ptrdiff_t limit, double sign) {
    const std::ptrdiff_t step = limit < peak ? -1 : 1;
    // Rising edge before a peak has slope sign `sign`; falling edge after has -sign.
    const double s = step < 0 ? sign : -sign;
    std::ptrdiff_t steep = peak;
    for (std::ptrdiff_t i = peak; i != limit; i += step) {
      if (s * d[static_cast<std::size_t>(i)] > s * d[static_cast<std::size_t>(steep)]) steep = i;
    }
    const double level = kEdgeFraction * s * d[static_cast<std::size_t>(steep)];
    if (!(level > 0.0)) return peak;
    std::ptrdiff_t i = steep;
    while (i != limit && s * d[static_cast<std::size_t>(i)] > level) i += step;
    return i;
  };

  struct Wave {
    std::optional<std::size_t> on, peak, off;
  };
  auto find_wave = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) -> Wave {
    lo = clampi(lo);
    hi = clampi(hi);
    const std::ptrdiff_t edge = std::max<std::ptrdiff_t>(2, ms(10.0));
    if (hi - lo < 4 * edge) return {};
    auto mean_at = [&](std::ptrdiff_t a, std::ptrdiff_t b) {
      double s = 0.0;
      for (std::ptrdiff_t i = a; i <= b; ++i) s += signal[static_cast<std::size_t>(i)];
      return s / static_cast<double>(b - a + 1);
    };
    const double y0 = mean_at(lo, lo + edge);
    const double y1 = mean_at(hi - edge, hi);
    std::ptrdiff_t best = lo;
    double best_dev = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double line = y0 + (y1 - y0) * static_cast<double>(i - lo) / static_cast<double>(hi - lo);
      const double dev = signal[static_cast<std::size_t>(i)] - line;
      if (std::abs(dev) > std::abs(best_dev)) {
        best_dev = dev;
        best = i;
      }
    }
    if (std::abs(best_dev) < presence || best - lo < edge || hi - best < edge) return {};
    const double sign = best_dev > 0.0 ? 1.0 : -1.0;
    Wave w;
    w.peak = static_cast<std::size_t>(best);
    w.on = static_cast<std::size_t>(find_edge(best, lo, sign));
    w.off = static_cast<std::size_t>(find_edge(best, hi, sign));
    return w;
  };

  const std::size_t count = r_peaks.size();
  for (std::size_t k = 0; k < count; ++k) {
    const auto r = static_cast<std::ptrdiff_t>(std::min(r_peaks[k], n - 1));
    const std::ptrdiff_t rr_prev =
        k > 0 ? r - static_cast<std::ptrdiff_t>(r_peaks[k - 1])
              : (k + 1 < count ? static_cast<std::ptrdiff_t>(r_peaks[k + 1]) - r : ms(800.0));
    const std::ptrdiff_t rr_next =
        k + 1 < count ? static_cast<std::ptrdiff_t>(r_peaks[k + 1]) - r : rr_prev;
    const double scale_prev = std::clamp(static_cast<double>(rr_prev) / ms(800.0), 0.5, 1.5);
    const double scale_next = std::clamp(static_cast<double>(rr_next) / ms(800.0), 0.5, 1.5);

    BeatFiducials b;
    b.set(Landmark::Rpeak, static_cast<std::size_t>(r));

    // Q and S: opposite-polarity extremum next to R, else the QRS edge.
    {
      const std::ptrdiff_t lo = clampi(r - ms(80.0));
      std::ptrdiff_t qpk = r;
      for (std::ptrdiff_t i = r - 1; i >= lo; --i) {
        if (pol * signal[static_cast<std::size_t>(i)] < pol * signal[static_cast<std::size_t>(qpk)]) qpk = i;
      }
      if (qpk == lo || qpk == r) qpk = find_edge(r, lo, pol);
      if (qpk < r) b.set(Landmark::Qpeak, static_cast<std::size_t>(qpk));
    }
    {
      const std::ptrdiff_t hi = clampi(r + ms(80.0));
      std::ptrdiff_t spk = r;
      for (std::ptrdiff_t i = r + 1; i <= hi; ++i) {
        if (pol * signal[static_cast<std::size_t>(i)] < pol * signal[static_cast<std::size_t>(spk)]) spk = i;
      }
      if (spk == hi || spk == r) spk = find_edge(r, hi, pol);
      if (spk > r) b.set(Landmark::Speak, static_cast<std::size_t>(spk));
    }

    std::ptrdiff_t p_lo = r - ms(300.0 * scale_prev);
    if (k > 0) p_lo = std::max(p_lo, static_cast<std::ptrdiff_t>(r_peaks[k - 1]) + (6 * rr_prev) / 10);
    const Wave p = find_wave(p_lo, r - ms(80.0));
    std::ptrdiff_t t_hi = r + ms(500.0 * scale_next);
    if (k + 1 < count) t_hi = std::min(t_hi, static_cast<std::ptrdiff_t>(r_peaks[k + 1]) - (3 * rr_next) / 10);
    const Wave t = find_wave(r + ms(80.0), t_hi);

    b.set(Landmark::Pon, p.on);
    b.set(Landmark::Ppeak, p.peak);
    b.set(Landmark::Poff, p.off);
    b.set(Landmark::Ton, t.on);
    b.set(Landmark::Tpeak, t.peak);
    b.set(Landmark::Toff, t.off);

    auto ordered = [&](std::initializer_list<Landmark> seq) {
      std::optional<std::size_t> prev;
      for (Landmark l : seq) {
        const auto v = b.get(l);
        if (!v) continue;
        if (prev && *v < *prev) return false;
        prev = v;
      }
      return true;
    };
    using L = Landmark;
    if (!ordered({L::Pon, L::Ppeak, L::Poff, L::Qpeak, L::Rpeak})) {
      b.set(L::Pon, std::nullopt);
      b.set(L::Ppeak, std::nullopt);
      b.set(L::Poff, std::nullopt);
    }
    if (!ordered({L::Rpeak, L::Speak, L::Ton, L::Tpeak, L::Toff})) {
      b.set(L::Ton, std::nullopt);
      b.set(L::Tpeak, std::nullopt);
      b.set(L::Toff, std::nullopt);
    }
    out.beats.push_back(b);
  }
  return out;
}

Segmentation segment_beats(std::span<const double> signal, double fs,
                           std::span<const std::size_t> r_peaks, LeadId lead) {
  if (r_peaks.size() < 2) throw Error(ErrorCode::NoBeatsFound, "segmentation needs 2 R peaks");
  Segmentation out;
  for (std::size_t k = 0; k + 1 < r_peaks.size(); ++k) {
    const std::size_t a = r_peaks[k];
    const std::size_t b = r_peaks[k + 1];
    if (b <= a || b >= signal.size()) {
      throw Error(ErrorCode::OutOfRange, "R peaks must be increasing and inside the signal");
    }
    const double length = static_cast<double>(b - a) / fs;
    if (length < kMinBeatSeconds || length > kMaxBeatSeconds) {
      out.skipped.push_back(k);
      continue;
    }
    BeatSegment seg;
    seg.lead = lead;
    seg.index = k;
    seg.start_sample = a;
    seg.start_time_s = static_cast<double>(a) / fs;
    seg.length_s = length;
    seg.samples.assign(signal.begin() + static_cast<std::ptrdiff_t>(a),
                       signal.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    out.segments.push_back(std::move(seg));
  }
  if (out.segments.empty()) {
    throw Error(ErrorCode::ImplausibleBeat, "no RR interval inside the 0.2-3.0 s gate");
  }
  return out;
}

void write_fiducials_csv(const FiducialSet& set, std::ostream& out) {
  out << "beat";
  for (std::size_t l = 0; l < kLandmarkCount; ++l) out << ',' << landmark_name(static_cast<Landmark>(l));
  out << '\n';
  for (std::size_t k = 0; k < set.beats.size(); ++k) {
    out << k;
    for (const auto& p : set.beats[k].points) {
      out << ',';
      if (p) out << *p;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing fiducial CSV");
}

}  // namespace ecgsynth
