#include "ecgsynth/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecgsynth/error.hpp"

namespace ecgsynth {

void validate_dtw_config(const DtwConfig& config) {
  if (!(config.window_fraction > 0.0 && config.window_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "DTW window fraction must be in (0, 1]");
  }
}

double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwConfig& config) {
  validate_dtw_config(config);
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySequence, "DTW needs non-empty inputs");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t diff = n > m ? n - m : m - n;
  const auto radius = std::max(
      static_cast<std::size_t>(std::ceil(config.window_fraction * static_cast<double>(std::max(n, m)))),
      diff + 1);

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf);
  std::vector<double> cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const std::size_t lo = i > radius ? i - radius : 1;
    const std::size_t hi = std::min(m, i + radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double d = a[i - 1] - b[j - 1];
      cur[j] = d * d + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  const double cost = prev[m];
  return config.normalize ? cost / static_cast<double>(n + m) : cost;
}

std::vector<double> z_normalize(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) return out;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
  return out;
}

NearestMatch nearest_sequence(std::span<const double> query,
                              const std::vector<std::vector<double>>& library,
                              const DtwConfig& config) {
  if (library.empty()) throw Error(ErrorCode::EmptyLibrary, "no candidates to match against");
  NearestMatch best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < library.size(); ++k) {
    const double c = dtw_distance(query, library[k], config);
    if (c < best.cost) best = {k, c};
  }
  return best;
}

NearestMatch nearest_beat(const BeatSegment& query, const std::vector<BeatSegment>& library,
                          const DtwConfig& config) {
  if (library.empty()) throw Error(ErrorCode::EmptyLibrary, "no historic beats");
  std::vector<std::vector<double>> normalized;
  normalized.reserve(library.size());
  for (const auto& beat : library) normalized.push_back(z_normalize(beat.samples));
  return nearest_sequence(z_normalize(query.samples), normalized, config);
}

}  // namespace ecgsynth
