#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgsynth/record.hpp"
#include "ecgsynth/synth.hpp"

namespace ecgsynth {

// Coefficient of determination with `reference` as the measured signal.
// Throws LengthMismatch, ZeroVariance.
double r_squared(std::span<const double> reference, std::span<const double> estimate);
double pearson(std::span<const double> reference, std::span<const double> estimate);

struct CellScore {
  double r2{0.0};
  double rho{0.0};
  std::size_t samples{0};
  bool computed{false};
};

// Rows are synthesized leads, columns current leads, both in kStandardLeads order.
struct AccuracyMatrix {
  std::string record;
  std::array<std::array<CellScore, kStandardLeadCount>, kStandardLeadCount> cells{};

  CellScore& at(LeadId synthesized, LeadId current) {
    return cells[lead_index(synthesized)][lead_index(current)];
  }
  const CellScore& at(LeadId synthesized, LeadId current) const {
    return cells[lead_index(synthesized)][lead_index(current)];
  }
};

struct Aggregate {
  double mean_r2{0.0};
  double std_r2{0.0};
  double mean_rho{0.0};
  double std_rho{0.0};
  std::size_t cells{0};
};

// Mean and population std over computed off-diagonal cells.
Aggregate aggregate(const AccuracyMatrix& matrix);
Aggregate aggregate(const std::vector<CellScore>& cells);

struct ProtocolConfig {
  SynthesisConfig synthesis;
  double eval_window_s{0.0};  // 0: everything after the training window
  std::vector<LeadId> current_leads{kStandardLeads.begin(), kStandardLeads.end()};
};

// Historic part = first train_window_s, evaluated part = what follows.
// Throws RecordTooShort.
AccuracyMatrix accuracy_matrix(const MultiLeadRecord& record, const ProtocolConfig& config);

struct PairImprovement {
  LeadId synthesized{LeadId::II};
  LeadId current{LeadId::I};
  double rho_without{0.0};
  double rho_with{0.0};
  double r2_without{0.0};
  double r2_with{0.0};
};

struct EvaluationReport {
  std::string record;
  AccuracyMatrix corrected;
  AccuracyMatrix uncorrected;
  Aggregate with_correction;
  Aggregate without_correction;
  double delta_r2{0.0};
  double delta_rho{0.0};
  // The pair with the lowest uncorrected rho.
  std::optional<PairImprovement> worst_pair;
};

EvaluationReport improvement_report(const MultiLeadRecord& record, const ProtocolConfig& config);

std::string matrix_json(const AccuracyMatrix& matrix);
std::string matrix_markdown(const AccuracyMatrix& matrix);
// Reads back matrix_json output. Throws MalformedHeader.
AccuracyMatrix parse_matrix_json(std::string_view text);
std::string report_json(const EvaluationReport& report);
std::string report_markdown(const EvaluationReport& report);

}  // namespace ecgsynth
