#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecgsynth/metrics.hpp"
#include "ecgsynth/vcg.hpp"

namespace ecgsynth {

// All plots have fixed dimensions and print coordinates with two decimals,
// so identical inputs give identical bytes.
inline constexpr int kPlotWidth = 900;
inline constexpr int kPlotHeight = 320;

struct PlotSeries {
  std::string label;
  std::vector<double> y;
  std::string color;  // empty: taken from the default palette
};

// Time-series overlay (e.g. measured vs synthesized), one polyline per series
// sharing a sample axis at `fs` that starts at `t0_s`, with a legend.
std::string overlay_svg(const std::string& title, std::span<const PlotSeries> series, double fs,
                        double t0_s = 0.0);

// Frontal (X-Y) VCG loop over [first, last) samples; everything when last is 0.
// A loop with no extent is drawn as a single point at the origin.
std::string vcg_loop_svg(const std::string& title, const VcgSignal& vcg, std::size_t first = 0,
                         std::size_t last = 0);

// 12x12 heatmap of rho (or R2) per cell, rows synthesized, columns current.
std::string heatmap_svg(const AccuracyMatrix& matrix, bool use_rho = true);

std::string xml_escape(const std::string& text);

}  // namespace ecgsynth
