#include "ecgsynth/leads.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "ecgsynth/error.hpp"

namespace ecgsynth {

namespace {

constexpr std::array<std::string_view, kLeadIdCount> kNames = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6", "X", "Y", "Z"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view lead_name(LeadId id) { return kNames[lead_index(id)]; }

std::optional<LeadId> parse_lead(std::string_view name) {
  const std::string key = lower(name);
  for (std::size_t k = 0; k < kLeadIdCount; ++k) {
    if (lower(kNames[k]) == key) return static_cast<LeadId>(k);
  }
  if (key == "vx") return LeadId::X;
  if (key == "vy") return LeadId::Y;
  if (key == "vz") return LeadId::Z;
  return std::nullopt;
}

LeadId lead_from_name(std::string_view name) {
  if (auto id = parse_lead(name)) return *id;
  throw Error(ErrorCode::UnknownLead, "unknown lead name '" + std::string(name) + "'");
}

void require_standard_lead(LeadId id) {
  if (!is_standard_lead(id)) {
    throw Error(ErrorCode::UnknownLead,
                "lead " + std::string(lead_name(id)) + " is not one of the 12 standard leads");
  }
}

}  // namespace ecgsynth
