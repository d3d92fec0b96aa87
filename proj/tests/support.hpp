#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "ecgsynth/record.hpp"
#include "ecgsynth/simgen.hpp"

namespace ecgsynth::test {

inline MultiLeadRecord make_record(const std::vector<LeadId>& leads,
                                   std::vector<std::vector<double>> samples, double fs,
                                   const std::string& name = "fixture") {
  RecordHeader header;
  header.name = name;
  header.fs = fs;
  for (LeadId id : leads) header.leads.push_back(LeadDescriptor{id, 1.0, 0, StorageFormat::Csv});
  return MultiLeadRecord(std::move(header), std::move(samples));
}

inline std::vector<double> sine(std::size_t n, double fs, double hz, double amplitude = 1.0,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(k) / fs + phase);
  }
  return x;
}

inline std::vector<double> gaussian_noise(std::mt19937_64& rng, std::size_t n, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  return x;
}

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

inline double correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Noise-free single-lead beat train on lead II.
inline SynthConfig single_lead_config(double duration_s, double fs = 1000.0) {
  SynthConfig config;
  config.fs = fs;
  config.duration_s = duration_s;
  config.leads = {single_lead_waves(LeadId::II)};
  return config;
}

inline std::size_t truth_sample(double t_s, double fs) {
  return static_cast<std::size_t>(std::llround(t_s * fs));
}

}  // namespace ecgsynth::test
