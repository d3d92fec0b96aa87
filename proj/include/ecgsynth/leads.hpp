#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ecgsynth {

// The 12 standard leads followed by the Frank orthogonal leads.
enum class LeadId : std::uint8_t {
  I, II, III, aVR, aVL, aVF, V1, V2, V3, V4, V5, V6, X, Y, Z
};

inline constexpr std::size_t kLeadIdCount = 15;
inline constexpr std::size_t kStandardLeadCount = 12;

inline constexpr std::array<LeadId, kStandardLeadCount> kStandardLeads = {
    LeadId::I,  LeadId::II, LeadId::III, LeadId::aVR, LeadId::aVL, LeadId::aVF,
    LeadId::V1, LeadId::V2, LeadId::V3,  LeadId::V4,  LeadId::V5,  LeadId::V6};

constexpr std::size_t lead_index(LeadId id) { return static_cast<std::size_t>(id); }

constexpr bool is_standard_lead(LeadId id) { return lead_index(id) < kStandardLeadCount; }

std::string_view lead_name(LeadId id);

// Accepts canonical names ("aVR", "V1") case-insensitively plus the PhysioNet
// spellings used by PTB headers ("vx" for X and so on).
std::optional<LeadId> parse_lead(std::string_view name);

// Throws Error(UnknownLead) for unknown names.
LeadId lead_from_name(std::string_view name);

// Throws Error(UnknownLead) when a Frank lead is passed to a 12-lead operation.
void require_standard_lead(LeadId id);

}  // namespace ecgsynth
