#include "ecgsynth/features.hpp"

#include <algorithm>
#include <cmath>

#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return 0.5 * (*std::max_element(v.begin(), mid) + hi);
}

}  // namespace

std::string_view feature_name(Feature f) {
  static constexpr std::array<std::string_view, kFeatureCount> names = {
      "r_height_uv", "p_height_uv", "t_height_uv", "s_peak_uv", "q_peak_uv",
      "rr_ms",       "qrs_ms",      "st_ms",       "pr_ms",     "t_wave_ms"};
  return names[static_cast<std::size_t>(f)];
}

BeatFeatures extract_features(std::span<const double> signal, double fs, const BeatFiducials& beat,
                              double rr_s) {
  const std::size_t r = beat.at(Landmark::Rpeak);
  const std::size_t pon = beat.at(Landmark::Pon);
  const std::size_t p = beat.at(Landmark::Ppeak);
  const std::size_t q = beat.at(Landmark::Qpeak);
  const std::size_t s = beat.at(Landmark::Speak);
  const std::size_t ton = beat.at(Landmark::Ton);
  const std::size_t t = beat.at(Landmark::Tpeak);
  const std::size_t toff = beat.at(Landmark::Toff);
  if (toff >= signal.size()) throw Error(ErrorCode::OutOfRange, "landmark beyond the signal");

  const auto gap = static_cast<std::size_t>(std::llround(0.020 * fs));
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.040 * fs)));
  double baseline = 0.0;
  if (q >= gap + width) {
    const std::size_t end = q - gap;
    baseline = median_of({signal.begin() + static_cast<std::ptrdiff_t>(end - width),
                          signal.begin() + static_cast<std::ptrdiff_t>(end)});
  } else {
    baseline = median_of({signal.begin() + static_cast<std::ptrdiff_t>(pon),
                          signal.begin() + static_cast<std::ptrdiff_t>(toff) + 1});
  }
  const auto uv = [&](std::size_t i) { return (signal[i] - baseline) * 1000.0; };
  const auto ms = [&](std::size_t a, std::size_t b) {
    return (static_cast<double>(b) - static_cast<double>(a)) * 1000.0 / fs;
  };

  BeatFeatures f;
  f[Feature::RHeight] = uv(r);
  f[Feature::PHeight] = uv(p);
  f[Feature::THeight] = uv(t);
  f[Feature::SPeak] = uv(s);
  f[Feature::QPeak] = uv(q);
  f[Feature::Rr] = rr_s * 1000.0;
  f[Feature::Qrs] = ms(q, s);
  f[Feature::St] = ms(s, ton);
  f[Feature::Pr] = ms(pon, q);
  f[Feature::TWave] = ms(ton, toff);
  return f;
}

BeatFeatures extract_features(const BeatSegment& segment, const BeatFiducials& beat,
                              std::span<const double> signal, double fs) {
  return extract_features(signal, fs, beat, segment.length_s);
}

LeadAnalysis analyze_lead(std::span<const double> signal, double fs, LeadId lead,
                          const PreprocessConfig& config, std::optional<int> polarity) {
  LeadAnalysis a;
  a.lead = lead;
  a.fs = fs;
  a.filtered = preprocess_signal(signal, fs, config);
  a.qrs = detect_qrs(a.filtered, fs, polarity);
  a.fiducials = delineate_beats(a.filtered, fs, a.qrs.r_peaks, lead);
  a.segmentation = segment_beats(a.filtered, fs, a.qrs.r_peaks, lead);
  for (const auto& seg : a.segmentation.segments) {
    try {
      a.features.emplace_back(extract_features(seg, a.fiducials.beats[seg.index], a.filtered, fs));
    } catch (const Error&) {
      a.features.emplace_back(std::nullopt);
    }
  }
  return a;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_r_peaks(std::span<const std::size_t> a,
                                                             std::span<const std::size_t> b,
                                                             double fs, double tolerance_s) {
  const double tol = tolerance_s * fs;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = static_cast<double>(a[i]);
    while (j < b.size() && static_cast<double>(b[j]) < ai - tol) ++j;
    if (j >= b.size()) break;
    // Take the closest b within tolerance, unless the next a is closer to it.
    std::size_t best = j;
    while (best + 1 < b.size() &&
           std::abs(static_cast<double>(b[best + 1]) - ai) < std::abs(static_cast<double>(b[best]) - ai)) {
      ++best;
    }
    const double d = std::abs(static_cast<double>(b[best]) - ai);
    if (d > tol) continue;
    if (i + 1 < a.size() &&
        std::abs(static_cast<double>(a[i + 1]) - static_cast<double>(b[best])) < d) {
      continue;
    }
    out.emplace_back(i, best);
    j = best + 1;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> align_segments(const LeadAnalysis& missing,
                                                                const LeadAnalysis& current,
                                                                double window_s) {
  const auto pairs = pair_r_peaks(missing.qrs.r_peaks, current.qrs.r_peaks, current.fs);
  // R-peak index -> segment index, per lead.
  auto index_segments = [](const LeadAnalysis& a) {
    std::vector<std::ptrdiff_t> map(a.qrs.r_peaks.size(), -1);
    for (std::size_t s = 0; s < a.segmentation.segments.size(); ++s) {
      map[a.segmentation.segments[s].index] = static_cast<std::ptrdiff_t>(s);
    }
    return map;
  };
  const auto seg_i = index_segments(missing);
  const auto seg_j = index_segments(current);
  const auto limit = static_cast<std::size_t>(std::llround(window_s * current.fs));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k + 1 < pairs.size(); ++k) {
    const auto [bi, bj] = pairs[k];
    const auto [ni, nj] = pairs[k + 1];
    if (ni != bi + 1 || nj != bj + 1) continue;
    if (seg_i[bi] < 0 || seg_j[bj] < 0) continue;
    if (current.qrs.r_peaks[nj] > limit) continue;
    out.emplace_back(static_cast<std::size_t>(seg_i[bi]), static_cast<std::size_t>(seg_j[bj]));
  }
  return out;
}

TrainingSet build_training_set(const LeadAnalysis& missing, const LeadAnalysis& current,
                               double window_s, const std::string& source) {
  TrainingSet set;
  set.missing = missing.lead;
  set.current = current.lead;
  set.source = source;
  for (const auto& [si, sj] : align_segments(missing, current, window_s)) {
    const auto& features = current.features[sj];
    if (!features) continue;
    const double lag = (missing.segmentation.segments[si].length_s -
                        current.segmentation.segments[sj].length_s) * 1000.0;
    if (std::abs(lag) > kLagGateMs) {
      ++set.outliers;
      continue;
    }
    set.samples.push_back(LagSample{*features, lag, sj});
  }
  if (set.size() < kMinTrainingBeats) {
    throw Error(ErrorCode::InsufficientBeats,
                "only " + std::to_string(set.size()) + " usable beats for " +
                    std::string(lead_name(missing.lead)) + " from " +
                    std::string(lead_name(current.lead)));
  }
  return set;
}

TrainingSet build_training_set(const MultiLeadRecord& historic, LeadId missing, LeadId current,
                               double window_s, const PreprocessConfig& config) {
  const auto si = historic.lead(missing);
  const auto sj = historic.lead(current);
  if (historic.duration() + 1e-9 < window_s) {
    throw Error(ErrorCode::InsufficientBeats, "record shorter than the training window");
  }
  const auto aj = analyze_lead(sj, historic.fs(), current, config);
  if (missing == current) return build_training_set(aj, aj, window_s, historic.header().name);
  const auto ai = analyze_lead(si, historic.fs(), missing, config);
  return build_training_set(ai, aj, window_s, historic.header().name);
}

void write_training_set_csv(const TrainingSet& set, std::ostream& out) {
  for (std::size_t f = 0; f < kFeatureCount; ++f) out << feature_name(static_cast<Feature>(f)) << ',';
  out << "lag_ms\n";
  for (const auto& s : set.samples) {
    for (double v : s.features.values) out << format_double(v) << ',';
    out << format_double(s.lag_ms) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing training set CSV");
}

}  // namespace ecgsynth
