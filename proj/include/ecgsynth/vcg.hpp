#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ecgsynth/record.hpp"

namespace ecgsynth {

// Order of the 8 independent leads used by both transforms.
inline constexpr std::array<LeadId, 8> kDowerLeads = {LeadId::V1, LeadId::V2, LeadId::V3,
                                                      LeadId::V4, LeadId::V5, LeadId::V6,
                                                      LeadId::I,  LeadId::II};

// Dower et al. (1980): lead = D * [X, Y, Z]. Rows follow kDowerLeads.
inline constexpr std::array<std::array<double, 3>, 8> kDowerMatrix = {{
    {-0.515, 0.157, -0.917},
    {0.044, 0.164, -1.387},
    {0.882, 0.098, -1.277},
    {1.213, 0.127, -0.601},
    {1.125, 0.127, -0.086},
    {0.831, 0.076, 0.230},
    {0.632, -0.235, 0.059},
    {0.235, 1.066, -0.132},
}};

// Edenbrandt & Pahlm (1988) inverse Dower: [X, Y, Z] = E * leads. Columns
// follow kDowerLeads.
inline constexpr std::array<std::array<double, 8>, 3> kInverseDowerMatrix = {{
    {-0.172, -0.074, 0.122, 0.231, 0.239, 0.194, 0.156, -0.010},
    {0.057, -0.019, -0.106, -0.022, 0.041, 0.048, -0.227, 0.887},
    {-0.229, -0.310, -0.246, -0.063, 0.055, 0.108, 0.022, 0.102},
}};

struct VcgSignal {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  double fs{0.0};

  std::size_t size() const { return x.size(); }
};

using DowerLeads = std::array<std::vector<double>, 8>;

// Throws LengthMismatch.
VcgSignal inverse_dower(const DowerLeads& leads, double fs);
// Picks I, II, V1..V6 out of a record. Throws MissingLead.
VcgSignal inverse_dower(const MultiLeadRecord& record);

DowerLeads forward_dower(const VcgSignal& vcg);
std::array<double, 8> forward_dower_sample(const std::array<double, 3>& xyz);

// Full 12-lead record (limb leads derived from I and II) from a VCG.
MultiLeadRecord forward_dower_record(const VcgSignal& vcg, const std::string& name = "dower");

// III, aVR, aVL, aVF from I and II (Einthoven/Goldberger).
std::array<double, 4> derive_limb_leads(double lead_i, double lead_ii);

// Frontal-plane angle (degrees, in (-180, 180]) of the largest X-Y vector over
// samples [begin, end). +X is leftward, +Y is toward the feet. Throws
// WindowOutOfRange.
double qrs_axis(const VcgSignal& vcg, std::size_t begin, std::size_t end);

// Smallest absolute difference between two angles, in [0, 180].
double angle_difference(double a_deg, double b_deg);

void write_vcg_csv(const VcgSignal& vcg, std::ostream& out);

}  // namespace ecgsynth
