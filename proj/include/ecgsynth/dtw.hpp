#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecgsynth/delineate.hpp"

namespace ecgsynth {

struct DtwConfig {
  // Sakoe-Chiba band half-width as a fraction of the longer sequence.
  double window_fraction{0.15};
  // Divide the accumulated cost by len(a) + len(b), the longest possible
  // warping path, so costs compare across lengths.
  bool normalize{true};
};

// Throws InvalidConfig.
void validate_dtw_config(const DtwConfig& config);

// Squared-difference DTW. The band is widened to |len(a) - len(b)| + 1 when
// needed. Throws EmptySequence.
double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwConfig& config);

std::vector<double> z_normalize(std::span<const double> x);

struct NearestMatch {
  std::size_t index{0};
  double cost{0.0};
};

// Plain argmin of dtw_distance over `library`; ties go to the smallest index.
// Throws EmptyLibrary.
NearestMatch nearest_sequence(std::span<const double> query,
                              const std::vector<std::vector<double>>& library,
                              const DtwConfig& config);

// As above on z-normalized beat samples.
NearestMatch nearest_beat(const BeatSegment& query, const std::vector<BeatSegment>& library,
                          const DtwConfig& config);

}  // namespace ecgsynth
