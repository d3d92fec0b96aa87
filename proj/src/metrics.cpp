#include "ecgsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "ecgsynth/error.hpp"
#include "ecgsynth/preprocess.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

namespace {

using ojson = nlohmann::ordered_json;

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "sequences differ in length");
  if (a.size() < 2) throw Error(ErrorCode::LengthMismatch, "need at least 2 samples");
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

std::string fixed3(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Scores every requested column; fills `corrected` and/or `uncorrected`.
void run_protocol(const MultiLeadRecord& record, const ProtocolConfig& config,
                  AccuracyMatrix* corrected, AccuracyMatrix* uncorrected) {
  const double train = config.synthesis.train_window_s;
  const double duration = record.duration();
  const double end = config.eval_window_s > 0.0 ? train + config.eval_window_s : duration;
  if (!(train > 0.0) || end > duration + 1e-9 || end - train < 2.0) {
    throw Error(ErrorCode::RecordTooShort,
                "record of " + format_double(duration) + " s cannot hold the training window plus an evaluation span");
  }
  for (LeadId lead : config.current_leads) require_standard_lead(lead);

  const auto historic = slice_record(record, 0.0, train);
  HistoricLibrary library(historic, config.synthesis);
  const auto evaluated = slice_record(record, train, std::min(end, duration));

  std::array<std::vector<double>, kStandardLeadCount> measured;
  for (std::size_t k = 0; k < evaluated.lead_count(); ++k) {
    const LeadId lead = evaluated.lead_at(k);
    if (!is_standard_lead(lead)) continue;
    measured[lead_index(lead)] = preprocess_signal(evaluated.lead(k), evaluated.fs(), config.synthesis.preprocess);
  }

  for (auto* m : {corrected, uncorrected}) {
    if (m) m->record = record.header().name;
  }
  for (LeadId current : config.current_leads) {
    const auto raw = evaluated.lead(current);
    library.train_models(current, config.synthesis.forest, train);
    for (int pass = 0; pass < 2; ++pass) {
      AccuracyMatrix* target = pass == 0 ? corrected : uncorrected;
      if (!target) continue;
      SynthesisConfig cfg = config.synthesis;
      cfg.lag_correction = pass == 0;
      const auto result = synthesize_all(raw, evaluated.fs(), current, library, cfg, evaluated.start_time());
      target->at(current, current) = CellScore{1.0, 1.0, raw.size(), true};
      for (const auto& lead : result.leads) {
        const auto& ref = measured[lead_index(lead.lead)];
        if (ref.empty()) continue;
        CellScore cell;
        cell.samples = ref.size();
        try {
          cell.r2 = r_squared(ref, lead.samples);
          cell.rho = pearson(ref, lead.samples);
          cell.computed = true;
        } catch (const Error&) {
          cell.computed = false;
        }
        target->at(lead.lead, current) = cell;
      }
    }
  }
}

ojson aggregate_json(const Aggregate& a) {
  ojson j;
  j["mean_r2"] = a.mean_r2;
  j["std_r2"] = a.std_r2;
  j["mean_rho"] = a.mean_rho;
  j["std_rho"] = a.std_rho;
  j["cells"] = a.cells;
  return j;
}

ojson matrix_object(const AccuracyMatrix& m) {
  ojson j;
  j["record"] = m.record;
  ojson leads = ojson::array();
  for (LeadId l : kStandardLeads) leads.push_back(lead_name(l));
  j["leads"] = leads;
  j["layout"] = "rows: synthesized lead, columns: current lead";
  ojson r2 = ojson::array();
  ojson rho = ojson::array();
  ojson samples = ojson::array();
  for (std::size_t r = 0; r < kStandardLeadCount; ++r) {
    ojson rr = ojson::array(), pr = ojson::array(), sr = ojson::array();
    for (std::size_t c = 0; c < kStandardLeadCount; ++c) {
      const auto& cell = m.cells[r][c];
      rr.push_back(cell.computed ? ojson(cell.r2) : ojson(nullptr));
      pr.push_back(cell.computed ? ojson(cell.rho) : ojson(nullptr));
      sr.push_back(cell.samples);
    }
    r2.push_back(rr);
    rho.push_back(pr);
    samples.push_back(sr);
  }
  j["r2"] = r2;
  j["rho"] = rho;
  j["samples"] = samples;
  j["aggregate"] = aggregate_json(aggregate(m));
  return j;
}

}  // namespace

double r_squared(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate);
  const double mean = mean_of(reference);
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    ss_tot += (reference[k] - mean) * (reference[k] - mean);
    ss_res += (reference[k] - estimate[k]) * (reference[k] - estimate[k]);
  }
  if (!(ss_tot > 0.0)) throw Error(ErrorCode::ZeroVariance, "reference has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate);
  const double ma = mean_of(reference);
  const double mb = mean_of(estimate);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double a = reference[k] - ma;
    const double b = estimate[k] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorCode::ZeroVariance, "zero-variance input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Aggregate aggregate(const std::vector<CellScore>& cells) {
  Aggregate a;
  for (const auto& c : cells) {
    if (!c.computed) continue;
    a.mean_r2 += c.r2;
    a.mean_rho += c.rho;
    ++a.cells;
  }
  if (a.cells == 0) {
    a.mean_r2 = a.mean_rho = std::numeric_limits<double>::quiet_NaN();
    a.std_r2 = a.std_rho = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  const double n = static_cast<double>(a.cells);
  a.mean_r2 /= n;
  a.mean_rho /= n;
  for (const auto& c : cells) {
    if (!c.computed) continue;
    a.std_r2 += (c.r2 - a.mean_r2) * (c.r2 - a.mean_r2);
    a.std_rho += (c.rho - a.mean_rho) * (c.rho - a.mean_rho);
  }
  a.std_r2 = std::sqrt(a.std_r2 / n);
  a.std_rho = std::sqrt(a.std_rho / n);
  return a;
}

Aggregate aggregate(const AccuracyMatrix& matrix) {
  std::vector<CellScore> cells;
  for (std::size_t r = 0; r < kStandardLeadCount; ++r) {
    for (std::size_t c = 0; c < kStandardLeadCount; ++c) {
      if (r != c) cells.push_back(matrix.cells[r][c]);
    }
  }
  return aggregate(cells);
}

AccuracyMatrix accuracy_matrix(const MultiLeadRecord& record, const ProtocolConfig& config) {
  AccuracyMatrix m;
  run_protocol(record, config, &m, nullptr);
  return m;
}

EvaluationReport improvement_report(const MultiLeadRecord& record, const ProtocolConfig& config) {
  EvaluationReport r;
  r.record = record.header().name;
  run_protocol(record, config, &r.corrected, &r.uncorrected);
  r.with_correction = aggregate(r.corrected);
  r.without_correction = aggregate(r.uncorrected);
  r.delta_r2 = r.with_correction.mean_r2 - r.without_correction.mean_r2;
  r.delta_rho = r.with_correction.mean_rho - r.without_correction.mean_rho;
  for (LeadId row : kStandardLeads) {
    for (LeadId col : kStandardLeads) {
      if (row == col) continue;
      const auto& a = r.uncorrected.at(row, col);
      const auto& b = r.corrected.at(row, col);
      if (!a.computed || !b.computed) continue;
      if (!r.worst_pair || a.rho < r.worst_pair->rho_without) {
        r.worst_pair = PairImprovement{row, col, a.rho, b.rho, a.r2, b.r2};
      }
    }
  }
  return r;
}

std::string matrix_json(const AccuracyMatrix& matrix) { return matrix_object(matrix).dump(2) + "\n"; }

AccuracyMatrix parse_matrix_json(std::string_view text) {
  AccuracyMatrix m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.record = j.at("record").get<std::string>();
    const auto& r2 = j.at("r2");
    const auto& rho = j.at("rho");
    const auto& samples = j.at("samples");
    if (r2.size() != kStandardLeadCount || rho.size() != kStandardLeadCount) {
      throw Error(ErrorCode::MalformedHeader, "matrix must be 12x12");
    }
    for (std::size_t r = 0; r < kStandardLeadCount; ++r) {
      for (std::size_t c = 0; c < kStandardLeadCount; ++c) {
        auto& cell = m.cells[r][c];
        const auto& a = r2.at(r).at(c);
        const auto& b = rho.at(r).at(c);
        cell.samples = samples.at(r).at(c).get<std::size_t>();
        cell.computed = !a.is_null() && !b.is_null();
        if (cell.computed) {
          cell.r2 = a.get<double>();
          cell.rho = b.get<double>();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("bad matrix JSON: ") + e.what());
  }
  return m;
}

std::string matrix_markdown(const AccuracyMatrix& m) {
  std::ostringstream out;
  out << "# Accuracy matrix: " << m.record << "\n\n";
  out << "Cells show rho / R2. Rows: synthesized lead. Columns: current lead.\n\n";
  out << "| synthesized |";
  for (LeadId l : kStandardLeads) out << ' ' << lead_name(l) << " |";
  out << "\n|---|";
  for (std::size_t k = 0; k < kStandardLeadCount; ++k) out << "---|";
  out << '\n';
  for (LeadId row : kStandardLeads) {
    out << "| " << lead_name(row) << " |";
    for (LeadId col : kStandardLeads) {
      const auto& c = m.at(row, col);
      out << ' ' << (c.computed ? fixed3(c.rho) + " / " + fixed3(c.r2) : std::string("-")) << " |";
    }
    out << '\n';
  }
  const auto a = aggregate(m);
  out << "\n| metric | mean | std |\n|---|---|---|\n";
  out << "| R2 | " << fixed3(a.mean_r2) << " | " << fixed3(a.std_r2) << " |\n";
  out << "| rho | " << fixed3(a.mean_rho) << " | " << fixed3(a.std_rho) << " |\n";
  return out.str();
}

std::string report_json(const EvaluationReport& r) {
  ojson j;
  j["record"] = r.record;
  j["with_correction"] = aggregate_json(r.with_correction);
  j["without_correction"] = aggregate_json(r.without_correction);
  j["delta_r2"] = r.delta_r2;
  j["delta_rho"] = r.delta_rho;
  if (r.worst_pair) {
    const auto& w = *r.worst_pair;
    ojson p;
    p["synthesized"] = lead_name(w.synthesized);
    p["current"] = lead_name(w.current);
    p["rho_without"] = w.rho_without;
    p["rho_with"] = w.rho_with;
    p["r2_without"] = w.r2_without;
    p["r2_with"] = w.r2_with;
    j["worst_pair"] = p;
  } else {
    j["worst_pair"] = nullptr;
  }
  j["corrected"] = matrix_object(r.corrected);
  j["uncorrected"] = matrix_object(r.uncorrected);
  return j.dump(2) + "\n";
}

std::string report_markdown(const EvaluationReport& r) {
  std::ostringstream out;
  out << "# Lag correction: " << r.record << "\n\n";
  out << "| variant | mean R2 | std R2 | mean rho | std rho |\n|---|---|---|---|---|\n";
  out << "| with correction | " << fixed3(r.with_correction.mean_r2) << " | " << fixed3(r.with_correction.std_r2)
      << " | " << fixed3(r.with_correction.mean_rho) << " | " << fixed3(r.with_correction.std_rho) << " |\n";
  out << "| without correction | " << fixed3(r.without_correction.mean_r2) << " | "
      << fixed3(r.without_correction.std_r2) << " | " << fixed3(r.without_correction.mean_rho) << " | "
      << fixed3(r.without_correction.std_rho) << " |\n";
  out << "| delta | " << fixed3(r.delta_r2) << " | | " << fixed3(r.delta_rho) << " | |\n";
  if (r.worst_pair) {
    const auto& w = *r.worst_pair;
    out << "\nWorst uncorrected pair: " << lead_name(w.synthesized) << " from " << lead_name(w.current)
        << ", rho " << fixed3(w.rho_without) << " -> " << fixed3(w.rho_with) << ".\n";
  }
  return out.str();
}

}  // namespace ecgsynth
