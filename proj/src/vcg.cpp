#include "ecgsynth/vcg.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

VcgSignal inverse_dower(const DowerLeads& leads, double fs) {
  const std::size_t n = leads[0].size();
  for (const auto& l : leads) {
    if (l.size() != n) throw Error(ErrorCode::LengthMismatch, "leads differ in length");
  }
  VcgSignal out;
  out.fs = fs;
  out.x.assign(n, 0.0);
  out.y.assign(n, 0.0);
  out.z.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < 8; ++k) {
      const double v = leads[k][t];
      out.x[t] += kInverseDowerMatrix[0][k] * v;
      out.y[t] += kInverseDowerMatrix[1][k] * v;
      out.z[t] += kInverseDowerMatrix[2][k] * v;
    }
  }
  return out;
}

VcgSignal inverse_dower(const MultiLeadRecord& record) {
  DowerLeads leads;
  for (std::size_t k = 0; k < 8; ++k) {
    if (!record.has_lead(kDowerLeads[k])) {
      throw Error(ErrorCode::MissingLead,
                  "inverse Dower needs lead " + std::string(lead_name(kDowerLeads[k])));
    }
    const auto s = record.lead(kDowerLeads[k]);
    leads[k].assign(s.begin(), s.end());
  }
  return inverse_dower(leads, record.fs());
}

std::array<double, 8> forward_dower_sample(const std::array<double, 3>& xyz) {
  std::array<double, 8> out{};
  for (std::size_t k = 0; k < 8; ++k) {
    out[k] = kDowerMatrix[k][0] * xyz[0] + kDowerMatrix[k][1] * xyz[1] +
             kDowerMatrix[k][2] * xyz[2];
  }
  return out;
}

DowerLeads forward_dower(const VcgSignal& vcg) {
  DowerLeads out;
  for (auto& l : out) l.resize(vcg.size());
  for (std::size_t t = 0; t < vcg.size(); ++t) {
    const auto v = forward_dower_sample({vcg.x[t], vcg.y[t], vcg.z[t]});
    for (std::size_t k = 0; k < 8; ++k) out[k][t] = v[k];
  }
  return out;
}

std::array<double, 4> derive_limb_leads(double lead_i, double lead_ii) {
  return {lead_ii - lead_i, -(lead_i + lead_ii) / 2.0, lead_i - lead_ii / 2.0,
          lead_ii - lead_i / 2.0};
}

MultiLeadRecord forward_dower_record(const VcgSignal& vcg, const std::string& name) {
  const auto eight = forward_dower(vcg);
  const auto& i = eight[6];
  const auto& ii = eight[7];
  std::vector<std::vector<double>> samples(kStandardLeadCount);
  samples[lead_index(LeadId::I)] = i;
  samples[lead_index(LeadId::II)] = ii;
  for (std::size_t k = 0; k < 6; ++k) samples[lead_index(LeadId::V1) + k] = eight[k];
  for (std::size_t k = 2; k < 6; ++k) samples[k].resize(vcg.size());
  for (std::size_t t = 0; t < vcg.size(); ++t) {
    const auto limb = derive_limb_leads(i[t], ii[t]);
    for (std::size_t k = 0; k < 4; ++k) samples[2 + k][t] = limb[k];
  }
  RecordHeader header;
  header.name = name;
  header.fs = vcg.fs;
  for (LeadId lead : kStandardLeads) {
    header.leads.push_back(LeadDescriptor{lead, 1.0, 0, StorageFormat::Csv});
  }
  return MultiLeadRecord(header, std::move(samples));
}

double qrs_axis(const VcgSignal& vcg, std::size_t begin, std::size_t end) {
  if (begin >= end || end > vcg.size()) {
    throw Error(ErrorCode::WindowOutOfRange, "QRS window outside the VCG");
  }
  std::size_t best = begin;
  double best_mag = -1.0;
  for (std::size_t t = begin; t < end; ++t) {
    const double mag = vcg.x[t] * vcg.x[t] + vcg.y[t] * vcg.y[t];
    if (mag > best_mag) {
      best_mag = mag;
      best = t;
    }
  }
  double angle = std::atan2(vcg.y[best], vcg.x[best]) * 180.0 / std::numbers::pi;
  if (angle <= -180.0) angle += 360.0;
  return angle;
}

double angle_difference(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

void write_vcg_csv(const VcgSignal& vcg, std::ostream& out) {
  out << "time_s,X,Y,Z\n";
  for (std::size_t t = 0; t < vcg.size(); ++t) {
    out << format_double(static_cast<double>(t) / vcg.fs) << ',' << format_double(vcg.x[t])
        << ',' << format_double(vcg.y[t]) << ',' << format_double(vcg.z[t]) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing VCG CSV");
}

}  // namespace ecgsynth
