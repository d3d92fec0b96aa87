#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgsynth/leads.hpp"

namespace ecgsynth {

enum class StorageFormat { Format16, Csv };

struct LeadDescriptor {
  LeadId lead{LeadId::I};
  double gain{200.0};  // ADC units per mV
  int baseline{0};     // ADC units
  StorageFormat format{StorageFormat::Format16};

  bool operator==(const LeadDescriptor&) const = default;
};

struct RecordHeader {
  std::string name;
  double fs{0.0};
  std::size_t samples_per_lead{0};
  std::vector<LeadDescriptor> leads;
  // Symmetric amplitude bound in mV, when the source declares one.
  std::optional<double> range_mv;

  std::size_t lead_count() const { return leads.size(); }
  std::optional<std::size_t> find(LeadId id) const;

  bool operator==(const RecordHeader&) const = default;
};

// Checks fs > 0, lead count >= 1 and unique lead ids. Throws MalformedHeader.
void validate_header(const RecordHeader& header);

// Multi-lead signal in mV. Immutable once constructed.
class MultiLeadRecord {
 public:
  MultiLeadRecord() = default;
  // samples[k] belongs to header.leads[k]; header.samples_per_lead is overwritten
  // with the actual length. Throws on unequal lengths, non-finite values, or
  // values beyond the declared range.
  MultiLeadRecord(RecordHeader header, std::vector<std::vector<double>> samples,
                  double start_time_s = 0.0);

  const RecordHeader& header() const { return header_; }
  double fs() const { return header_.fs; }
  double start_time() const { return start_time_; }
  std::size_t lead_count() const { return samples_.size(); }
  std::size_t size() const { return header_.samples_per_lead; }
  double duration() const { return static_cast<double>(size()) / fs(); }

  LeadId lead_at(std::size_t k) const { return header_.leads.at(k).lead; }
  std::vector<LeadId> leads() const;
  bool has_lead(LeadId id) const { return header_.find(id).has_value(); }

  std::span<const double> lead(std::size_t k) const { return samples_.at(k); }
  // Throws LeadMissing when the lead is not part of the record.
  std::span<const double> lead(LeadId id) const;

  const std::vector<std::vector<double>>& samples() const { return samples_; }

 private:
  RecordHeader header_;
  std::vector<std::vector<double>> samples_;
  double start_time_{0.0};
};

}  // namespace ecgsynth
