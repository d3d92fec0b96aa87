#include "ecgsynth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "ecgsynth/error.hpp"

namespace ecgsynth {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return 0.5 * (*std::max_element(v.begin(), mid) + hi);
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::uint64_t pair_seed(std::uint64_t seed, LeadId missing, LeadId current) {
  return seed + 131ULL * (16ULL * lead_index(missing) + lead_index(current));
}

struct BeatPlan {
  BeatProvenance provenance;
  const BeatSegment* source{nullptr};  // historic segment of the missing lead
};

double predicted_lag(const CurrentSession& current, std::size_t segment, LeadId missing,
                     const HistoricLibrary& library, const SynthesisConfig& config, std::string& flag) {
  if (missing == current.lead || !config.lag_correction) return 0.0;
  const auto& features = current.analysis.features[segment];
  if (!features) {
    flag = "no_features";
    return 0.0;
  }
  const LagModel* model = library.model(missing, current.lead);
  if (!model) {
    if (!library.model_attempted(missing, current.lead)) {
      throw Error(ErrorCode::ModelMissing, "no lag model for " + std::string(lead_name(missing)) +
                                               " from " + std::string(lead_name(current.lead)));
    }
    flag = "no_model";
    return 0.0;
  }
  return predict(*model, *features);
}

BeatPlan plan_beat(const CurrentSession& current, std::size_t segment, LeadId missing,
                   const HistoricLibrary& library, const SynthesisConfig& config) {
  const auto& seg = current.analysis.segmentation.segments.at(segment);
  const auto& pairing = library.pairing(missing, current.lead);
  const auto& historic_j = library.analysis(current.lead).segmentation.segments;
  const auto& historic_i = library.analysis(missing).segmentation.segments;

  BeatPlan plan;
  auto& p = plan.provenance;
  p.beat = segment;
  p.current_start = seg.start_sample;
  p.current_end = seg.end_sample();
  p.delta_current_ms = seg.length_s * 1000.0;
  p.delta_hat_ms = predicted_lag(current, segment, missing, library, config, p.flag);

  std::optional<std::size_t> best;
  double best_cost = std::numeric_limits<double>::infinity();
  const bool by_length = !current.analysis.features[segment].has_value();
  for (std::size_t h = 0; h < pairing.size(); ++h) {
    if (!pairing[h]) continue;
    const double cost = by_length ? std::abs(historic_j[h].length_s - seg.length_s)
                                  : current.match_costs[segment][h];
    if (cost < best_cost) {
      best_cost = cost;
      best = h;
    }
  }
  if (!best) throw Error(ErrorCode::EmptyLibrary, "no historic beat pairs for this lead pair");
  p.historic_beat = *best;
  plan.source = &historic_i[*pairing[*best]];
  const double denom = rms(historic_j[*best].samples);
  const double scale = denom > 0.0 ? rms(seg.samples) / denom : 1.0;
  p.energy_scale = std::isfinite(scale) && scale > 0.0 ? scale : 1.0;
  return plan;
}

// Fritsch-Carlson slopes on a unit grid.
std::vector<double> pchip_slopes(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 2) return m;
  std::vector<double> d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) d[k] = y[k + 1] - y[k];
  if (n == 2) {
    m[0] = m[1] = d[0];
    return m;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (d[k - 1] * d[k] <= 0.0) {
      m[k] = 0.0;
    } else {
      m[k] = 2.0 / (1.0 / d[k - 1] + 1.0 / d[k]);
    }
  }
  auto end_slope = [](double d0, double d1) {
    double s = (3.0 * d0 - d1) / 2.0;
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) s = 3.0 * d0;
    return s;
  };
  m[0] = end_slope(d[0], d[1]);
  m[n - 1] = end_slope(d[n - 2], d[n - 3]);
  return m;
}

}  // namespace

std::vector<double> match_template(std::span<const double> beat, double fs, double rate_hz) {
  if (beat.empty()) return {};
  const double span_s = static_cast<double>(beat.size() - 1) / fs;
  const auto m = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(span_s * rate_hz)) + 1);
  std::vector<double> out(m);
  const double step = static_cast<double>(beat.size() - 1) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double u = static_cast<double>(k) * step;
    const auto i = std::min(static_cast<std::size_t>(u), beat.size() - 1);
    const double frac = u - static_cast<double>(i);
    out[k] = i + 1 < beat.size() ? beat[i] + frac * (beat[i + 1] - beat[i]) : beat[i];
  }
  return z_normalize(out);
}

HistoricLibrary::HistoricLibrary(const MultiLeadRecord& historic, const SynthesisConfig& config)
    : fs_(historic.fs()), name_(historic.header().name), match_rate_hz_(config.match_rate_hz) {
  for (std::size_t k = 0; k < historic.lead_count(); ++k) {
    const LeadId lead = historic.lead_at(k);
    auto analysis = analyze_lead(historic.lead(k), fs_, lead, config.preprocess);
    std::vector<std::vector<double>> shapes;
    for (const auto& seg : analysis.segmentation.segments) {
      shapes.push_back(match_template(seg.samples, fs_, match_rate_hz_));
    }
    templates_.emplace(lead, std::move(shapes));
    analyses_.emplace(lead, std::move(analysis));
  }
  for (const auto& [current, aj] : analyses_) {
    for (const auto& [missing, ai] : analyses_) {
      std::vector<std::optional<std::size_t>> map(aj.segmentation.segments.size());
      std::vector<double> offsets;
      for (const auto& [bi, bj] : pair_r_peaks(ai.qrs.r_peaks, aj.qrs.r_peaks, fs_)) {
        offsets.push_back(static_cast<double>(ai.qrs.r_peaks[bi]) - static_cast<double>(aj.qrs.r_peaks[bj]));
      }
      offsets_.emplace(std::make_pair(missing, current), median_of(std::move(offsets)));
      if (missing == current) {
        for (std::size_t s = 0; s < map.size(); ++s) map[s] = s;
      } else {
        for (const auto& [si, sj] : align_segments(ai, aj, std::numeric_limits<double>::infinity())) {
          map[sj] = si;
        }
      }
      pairings_.emplace(std::make_pair(missing, current), std::move(map));
    }
  }
}

std::vector<LeadId> HistoricLibrary::leads() const {
  std::vector<LeadId> out;
  for (const auto& [lead, a] : analyses_) out.push_back(lead);
  return out;
}

const LeadAnalysis& HistoricLibrary::analysis(LeadId lead) const {
  const auto it = analyses_.find(lead);
  if (it == analyses_.end()) {
    throw Error(ErrorCode::LeadMissing, "historic record has no lead " + std::string(lead_name(lead)));
  }
  return it->second;
}

const std::vector<std::vector<double>>& HistoricLibrary::match_templates(LeadId lead) const {
  analysis(lead);
  return templates_.at(lead);
}

const std::vector<std::optional<std::size_t>>& HistoricLibrary::pairing(LeadId missing,
                                                                        LeadId current) const {
  analysis(missing);
  analysis(current);
  return pairings_.at({missing, current});
}

double HistoricLibrary::median_offset(LeadId missing, LeadId current) const {
  analysis(missing);
  analysis(current);
  return offsets_.at({missing, current});
}

void HistoricLibrary::train_models(LeadId current, const ForestConfig& forest, double window_s) {
  const auto& aj = analysis(current);
  for (const auto& [missing, ai] : analyses_) {
    if (missing == current) continue;
    const auto key = std::make_pair(missing, current);
    models_.erase(key);
    failed_.erase(key);
    try {
      const auto data = build_training_set(ai, aj, window_s, name_);
      ForestConfig cfg = forest;
      cfg.seed = pair_seed(forest.seed, missing, current);
      models_.emplace(key, train_forest(data, cfg));
    } catch (const Error& e) {
      failed_.emplace(key, e.what());
    }
  }
}

void HistoricLibrary::set_model(LagModel model) {
  const auto key = std::make_pair(model.missing, model.current);
  failed_.erase(key);
  models_.insert_or_assign(key, std::move(model));
}

const LagModel* HistoricLibrary::model(LeadId missing, LeadId current) const {
  const auto it = models_.find({missing, current});
  return it == models_.end() ? nullptr : &it->second;
}

bool HistoricLibrary::model_attempted(LeadId missing, LeadId current) const {
  return models_.count({missing, current}) > 0 || failed_.count({missing, current}) > 0;
}

CurrentSession prepare_current(std::span<const double> signal, double fs, LeadId lead,
                               const HistoricLibrary& library, const SynthesisConfig& config) {
  if (std::abs(fs - library.fs()) > 1e-9 * fs) {
    throw Error(ErrorCode::InvalidConfig, "current signal and historic record differ in sampling rate");
  }
  CurrentSession s;
  s.lead = lead;
  s.fs = fs;
  s.raw.assign(signal.begin(), signal.end());
  try {
    s.analysis = analyze_lead(signal, fs, lead, config.preprocess, library.analysis(lead).qrs.polarity);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SignalTooShort || e.code() == ErrorCode::ImplausibleBeat) {
      throw Error(ErrorCode::NoBeatsFound, std::string("current signal: ") + e.what());
    }
    throw;
  }
  const auto& library_shapes = library.match_templates(lead);
  for (const auto& seg : s.analysis.segmentation.segments) {
    const auto shape = match_template(seg.samples, fs, config.match_rate_hz);
    std::vector<double> costs;
    costs.reserve(library_shapes.size());
    for (const auto& h : library_shapes) costs.push_back(dtw_distance(shape, h, config.dtw));
    s.match_costs.push_back(std::move(costs));
  }
  return s;
}

std::size_t match_historic_beat(const BeatSegment& current, const HistoricLibrary& library,
                                const SynthesisConfig& config) {
  const auto shape = match_template(current.samples, library.fs(), config.match_rate_hz);
  return nearest_sequence(shape, library.match_templates(current.lead), config.dtw).index;
}

std::vector<double> affine_transform_beat(std::span<const double> source, std::size_t target_length,
                                          double scale) {
  if (target_length < 2 || source.size() < 2) {
    throw Error(ErrorCode::DegenerateTarget, "beat transform needs at least 2 samples");
  }
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw Error(ErrorCode::DegenerateTarget, "energy scale must be finite and positive");
  }
  const std::size_t n = source.size();
  const auto slopes = pchip_slopes(source);
  std::vector<double> out(target_length);
  const double step = static_cast<double>(n - 1) / static_cast<double>(target_length - 1);
  for (std::size_t k = 0; k < target_length; ++k) {
    const double u = static_cast<double>(k) * step;
    auto i = static_cast<std::size_t>(u);
    if (i >= n - 1) {
      out[k] = source[n - 1] * scale;
      continue;
    }
    const double t = u - static_cast<double>(i);
    if (t == 0.0) {
      out[k] = source[i] * scale;
      continue;
    }
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    out[k] = (h00 * source[i] + h10 * slopes[i] + h01 * source[i + 1] + h11 * slopes[i + 1]) * scale;
  }
  return out;
}

SynthesizedBeat synthesize_beat(const CurrentSession& current, std::size_t segment, LeadId missing,
                                const HistoricLibrary& library, const SynthesisConfig& config) {
  auto plan = plan_beat(current, segment, missing, library, config);
  auto& p = plan.provenance;
  const double target_ms = p.delta_current_ms + p.delta_hat_ms;
  const auto length = std::max<long long>(2, std::llround(target_ms * current.fs / 1000.0) + 1);
  SynthesizedBeat out;
  out.samples = affine_transform_beat(plan.source->samples, static_cast<std::size_t>(length),
                                      p.energy_scale);
  p.delta_tilde_ms = static_cast<double>(length - 1) * 1000.0 / current.fs;
  out.provenance = p;
  return out;
}

namespace {

// Least-squares slope (ms per beat) of the running lag against beat number.
double lag_trend_ms(const std::vector<BeatPlan>& plans) {
  const std::size_t n = plans.size() + 1;
  if (n < 3) return 0.0;
  std::vector<double> cum(n, 0.0);
  for (std::size_t k = 0; k < plans.size(); ++k) cum[k + 1] = cum[k] + plans[k].provenance.delta_hat_ms;
  const double xm = static_cast<double>(n - 1) / 2.0;
  double ym = 0.0;
  for (double c : cum) ym += c;
  ym /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = static_cast<double>(k) - xm;
    sxy += dx * (cum[k] - ym);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace

SynthesizedLead synthesize_lead(const CurrentSession& current, LeadId missing,
                                const HistoricLibrary& library, const SynthesisConfig& config) {
  SynthesizedLead out;
  out.lead = missing;
  out.fs = current.fs;
  const auto n = static_cast<long long>(current.raw.size());
  out.samples.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  const auto& segments = current.analysis.segmentation.segments;
  if (segments.empty()) throw Error(ErrorCode::NoBeatsFound, "current lead has no beats");
  const double fs = current.fs;
  const auto& r_peaks = current.analysis.qrs.r_peaks;

  // Pass 1: sources, lags and the clamped running lag at each beat boundary.
  std::vector<BeatPlan> plans;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    plans.push_back(plan_beat(current, s, missing, library, config));
  }
  const double trend = config.detrend_lag ? lag_trend_ms(plans) : 0.0;
  std::vector<double> cum_start;
  std::vector<double> cum_end;
  double cum_ms = 0.0;
  for (auto& plan : plans) {
    auto& p = plan.provenance;
    p.detrend_ms = trend;
    const double wanted = cum_ms + p.delta_hat_ms - trend;
    const double clamped = std::clamp(wanted, -config.drift_clamp_ms, config.drift_clamp_ms);
    p.clamp_adjust_ms = clamped - wanted;
    cum_start.push_back(cum_ms);
    cum_end.push_back(clamped);
    cum_ms = clamped;
  }

  // The lead keeps, on average, the inter-lead offset seen in the historic
  // record; the running lag moves it beat by beat around that level.
  double mean_cum = 0.0;
  for (double c : cum_start) mean_cum += c;
  mean_cum /= static_cast<double>(cum_start.size());
  const double anchor_ms =
      missing == current.lead ? 0.0 : library.median_offset(missing, current.lead) * 1000.0 / fs - mean_cum;
  auto position = [&](std::size_t r_index, double cum) {
    return static_cast<long long>(r_peaks[r_index]) + std::llround((anchor_ms + cum) * fs / 1000.0);
  };

  auto put = [&](long long pos, double v) {
    if (pos >= 0 && pos < n) out.samples[static_cast<std::size_t>(pos)] = v;
  };
  auto get = [&](long long pos) {
    return pos >= 0 && pos < n ? out.samples[static_cast<std::size_t>(pos)]
                               : std::numeric_limits<double>::quiet_NaN();
  };

  // Pass 2: place the beats.
  long long prev_end = 0;
  double prev_end_value = 0.0;
  std::optional<std::size_t> prev_index;
  long long first_start = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    auto& plan = plans[s];
    auto& p = plan.provenance;
    const long long start = position(seg.index, cum_start[s]);
    const bool contiguous = prev_index && *prev_index + 1 == seg.index;

    if (prev_index && !contiguous) {
      // Skipped intervals between two synthesized beats: straight line.
      BeatProvenance gap;
      gap.beat = s;
      gap.current_start = r_peaks[*prev_index + 1];
      gap.current_end = seg.start_sample;
      gap.delta_current_ms = static_cast<double>(gap.current_end - gap.current_start) * 1000.0 / fs;
      gap.delta_tilde_ms = static_cast<double>(start - prev_end) * 1000.0 / fs;
      gap.flag = "gap";
      const double v1 = plan.source->samples.front() * p.energy_scale;
      for (long long t = prev_end + 1; t < start; ++t) {
        const double a = static_cast<double>(t - prev_end) / static_cast<double>(start - prev_end);
        put(t, prev_end_value + a * (v1 - prev_end_value));
      }
      out.beats.push_back(gap);
    }

    long long end = position(seg.index + 1, cum_end[s]);
    if (end < start + 1) {
      p.clamp_adjust_ms += static_cast<double>(start + 1 - end) * 1000.0 / fs;
      end = start + 1;
    }
    const auto beat = affine_transform_beat(plan.source->samples,
                                            static_cast<std::size_t>(end - start + 1), p.energy_scale);
    for (long long t = start; t <= end; ++t) {
      const double v = beat[static_cast<std::size_t>(t - start)];
      put(t, t == start && contiguous ? 0.5 * (get(t) + v) : v);
    }
    p.delta_tilde_ms = static_cast<double>(end - start) * 1000.0 / fs;
    if (s == 0) first_start = start;
    prev_end = end;
    prev_end_value = beat.back();
    prev_index = seg.index;
    out.beats.push_back(p);
  }

  // Flanks: the historic missing-lead signal around the first/last source beats.
  const auto& hist = library.analysis(missing).filtered;
  const auto hn = static_cast<long long>(hist.size());
  auto hist_at = [&](long long i) { return hist[static_cast<std::size_t>(std::clamp(i, 0LL, hn - 1))]; };
  const auto& first = plans.front();
  const auto& last = plans.back();
  const auto s0 = static_cast<long long>(first.source->start_sample);
  for (long long t = 0; t < std::min(first_start, n); ++t) {
    put(t, hist_at(s0 - (first_start - t)) * first.provenance.energy_scale);
  }
  const auto s1 = static_cast<long long>(last.source->end_sample());
  for (long long t = std::max(prev_end + 1, 0LL); t < n; ++t) {
    put(t, hist_at(s1 + (t - prev_end)) * last.provenance.energy_scale);
  }
  for (double& v : out.samples) {
    if (!std::isfinite(v)) v = 0.0;
  }
  return out;
}

SynthesisResult synthesize_all(std::span<const double> signal, double fs, LeadId current,
                               const HistoricLibrary& library, const SynthesisConfig& config,
                               double start_time_s) {
  const auto session = prepare_current(signal, fs, current, library, config);
  SynthesisResult result;
  result.current = current;
  RecordHeader header;
  header.name = library.name() + "_from_" + std::string(lead_name(current));
  header.fs = fs;
  std::vector<std::vector<double>> samples;
  for (LeadId lead : kStandardLeads) {
    if (lead == current) {
      header.leads.push_back(LeadDescriptor{lead, 1.0, 0, StorageFormat::Csv});
      samples.emplace_back(signal.begin(), signal.end());
      continue;
    }
    if (!library.has_lead(lead)) continue;
    auto synthesized = synthesize_lead(session, lead, library, config);
    synthesized.start_time_s = start_time_s;
    header.leads.push_back(LeadDescriptor{lead, 1.0, 0, StorageFormat::Csv});
    samples.push_back(synthesized.samples);
    result.leads.push_back(std::move(synthesized));
  }
  result.record = MultiLeadRecord(header, std::move(samples), start_time_s);
  return result;
}

void write_provenance_jsonl(const SynthesisResult& result, std::ostream& out) {
  for (const auto& lead : result.leads) {
    for (const auto& b : lead.beats) {
      nlohmann::ordered_json j;
      j["lead"] = lead_name(lead.lead);
      j["current_lead"] = lead_name(result.current);
      j["beat"] = b.beat;
      j["current_start"] = b.current_start;
      j["current_end"] = b.current_end;
      j["historic_beat"] = b.historic_beat ? nlohmann::ordered_json(*b.historic_beat) : nullptr;
      j["delta_current_ms"] = b.delta_current_ms;
      j["delta_hat_ms"] = b.delta_hat_ms;
      j["delta_tilde_ms"] = b.delta_tilde_ms;
      j["energy_scale"] = b.energy_scale;
      j["detrend_ms"] = b.detrend_ms;
      j["clamp_adjust_ms"] = b.clamp_adjust_ms;
      j["flag"] = b.flag;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing provenance");
}

}  // namespace ecgsynth
