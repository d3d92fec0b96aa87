#include "ecgsynth/record.hpp"

#include <cmath>
#include <string>

#include "ecgsynth/error.hpp"

namespace ecgsynth {

std::optional<std::size_t> RecordHeader::find(LeadId id) const {
  for (std::size_t k = 0; k < leads.size(); ++k) {
    if (leads[k].lead == id) return k;
  }
  return std::nullopt;
}

void validate_header(const RecordHeader& header) {
  if (!(header.fs > 0.0) || !std::isfinite(header.fs)) {
    throw Error(ErrorCode::MalformedHeader, "sampling rate must be positive");
  }
  if (header.leads.empty()) {
    throw Error(ErrorCode::MalformedHeader, "record declares no leads");
  }
  for (std::size_t a = 0; a < header.leads.size(); ++a) {
    for (std::size_t b = a + 1; b < header.leads.size(); ++b) {
      if (header.leads[a].lead == header.leads[b].lead) {
        throw Error(ErrorCode::MalformedHeader,
                    "duplicate lead " + std::string(lead_name(header.leads[a].lead)));
      }
    }
  }
}

MultiLeadRecord::MultiLeadRecord(RecordHeader header, std::vector<std::vector<double>> samples,
                                 double start_time_s)
    : header_(std::move(header)), samples_(std::move(samples)), start_time_(start_time_s) {
  validate_header(header_);
  if (samples_.size() != header_.leads.size()) {
    throw Error(ErrorCode::MalformedHeader, "lead count does not match sample arrays");
  }
  const std::size_t n = samples_.front().size();
  for (const auto& lead : samples_) {
    if (lead.size() != n) throw Error(ErrorCode::LengthMismatch, "leads differ in length");
    for (double v : lead) {
      if (!std::isfinite(v)) throw Error(ErrorCode::OutOfRange, "non-finite sample value");
      if (header_.range_mv && std::abs(v) > *header_.range_mv + 1e-9) {
        throw Error(ErrorCode::OutOfRange, "sample exceeds declared range");
      }
    }
  }
  header_.samples_per_lead = n;
}

std::vector<LeadId> MultiLeadRecord::leads() const {
  std::vector<LeadId> out;
  out.reserve(header_.leads.size());
  for (const auto& d : header_.leads) out.push_back(d.lead);
  return out;
}

std::span<const double> MultiLeadRecord::lead(LeadId id) const {
  if (auto k = header_.find(id)) return samples_[*k];
  throw Error(ErrorCode::LeadMissing, "record has no lead " + std::string(lead_name(id)));
}

}  // namespace ecgsynth
