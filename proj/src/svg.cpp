#include "ecgsynth/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ecgsynth/leads.hpp"

namespace ecgsynth {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f4e9c", "#c0392b", "#2e8b57",
                                                 "#8e44ad", "#d35400", "#555555"};

std::string num(double v) {
  if (std::abs(v) < 0.005) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void open_svg(std::ostringstream& out, int width, int height) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s, const char* anchor = "start") {
  out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\">"
      << xml_escape(s) << "</text>\n";
}

// Nice tick step for a span covered by roughly `target` ticks.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string overlay_svg(const std::string& title, std::span<const PlotSeries> series, double fs,
                        double t0_s) {
  constexpr double left = 60, right = 20, top = 30, bottom = 40;
  const double pw = kPlotWidth - left - right;
  const double ph = kPlotHeight - top - bottom;

  std::size_t n = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo < hi)) {
    const double c = std::isfinite(lo) ? lo : 0.0;
    lo = c - 1.0;
    hi = c + 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double duration = n > 1 ? static_cast<double>(n - 1) / fs : 1.0;
  auto px = [&](double t) { return left + pw * t / duration; };
  auto py = [&](double v) { return top + ph * (hi - v) / (hi - lo); };

  std::ostringstream out;
  open_svg(out, kPlotWidth, kPlotHeight);
  text(out, kPlotWidth / 2.0, 18, title, "middle");
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"#999\"/>\n";

  const double ystep = tick_step(hi - lo, 5);
  for (double v = std::ceil(lo / ystep) * ystep; v <= hi; v += ystep) {
    out << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(py(v)) << "\" stroke=\"#999\"/>\n";
    text(out, left - 6, py(v) + 4, num(v), "end");
  }
  const double xstep = tick_step(duration, 8);
  for (double t = std::ceil(t0_s / xstep) * xstep; t <= t0_s + duration + 1e-9; t += xstep) {
    out << "<line x1=\"" << num(px(t - t0_s)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t - t0_s))
        << "\" y2=\"" << num(top + ph + 4) << "\" stroke=\"#999\"/>\n";
    text(out, px(t - t0_s), top + ph + 16, num(t), "middle");
  }
  text(out, left + pw / 2, kPlotHeight - 6, "time (s)", "middle");
  text(out, 14, top + ph / 2, "mV", "middle");

  // Long traces keep their min and max per pixel column.
  const auto columns = static_cast<std::size_t>(pw);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = s.color.empty() ? kPalette[k % kPalette.size()] : s.color;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
    const std::size_t m = s.y.size();
    bool first = true;
    auto point = [&](std::size_t i) {
      if (!std::isfinite(s.y[i])) return;
      if (!first) out << ' ';
      out << num(px(static_cast<double>(i) / fs)) << ',' << num(py(s.y[i]));
      first = false;
    };
    if (m <= 4 * columns) {
      for (std::size_t i = 0; i < m; ++i) point(i);
    } else {
      for (std::size_t c = 0; c < columns; ++c) {
        const std::size_t a = c * m / columns;
        const std::size_t b = std::max(a + 1, (c + 1) * m / columns);
        std::size_t imin = a, imax = a;
        for (std::size_t i = a; i < b; ++i) {
          if (s.y[i] < s.y[imin]) imin = i;
          if (s.y[i] > s.y[imax]) imax = i;
        }
        point(std::min(imin, imax));
        if (imin != imax) point(std::max(imin, imax));
      }
    }
    out << "\"/>\n";
    const double ly = top + 12 + 14 * static_cast<double>(k);
    out << "<line x1=\"" << num(left + pw - 110) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(left + pw - 90) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    text(out, left + pw - 86, ly, s.label);
  }
  out << "</svg>\n";
  return out.str();
}

std::string vcg_loop_svg(const std::string& title, const VcgSignal& vcg, std::size_t first,
                         std::size_t last) {
  const int size = kPlotHeight;
  constexpr double margin = 30;
  const double half = (size - 2 * margin) / 2.0;
  const double cx = size / 2.0;
  const double cy = size / 2.0 + 8;
  if (last == 0 || last > vcg.size()) last = vcg.size();
  first = std::min(first, last);

  double extent = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    extent = std::max({extent, std::abs(vcg.x[i]), std::abs(vcg.y[i])});
  }

  std::ostringstream out;
  open_svg(out, size, size + 16);
  text(out, cx, 18, title, "middle");
  out << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(cx + half)
      << "\" y2=\"" << num(cy) << "\" stroke=\"#bbb\"/>\n";
  out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(cy - half) << "\" x2=\"" << num(cx) << "\" y2=\""
      << num(cy + half) << "\" stroke=\"#bbb\"/>\n";
  text(out, cx + half, cy - 4, "X", "end");
  text(out, cx + 4, cy + half, "Y");

  if (!(extent > 0.0)) {
    out << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"2\" fill=\"" << kPalette[0]
        << "\"/>\n";
  } else {
    // Frontal plane with +Y pointing down (inferior), as on a standard display.
    const double k = half / extent;
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[0] << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = first; i < last; ++i) {
      if (i > first) out << ' ';
      out << num(cx + k * vcg.x[i]) << ',' << num(cy + k * vcg.y[i]);
    }
    out << "\"/>\n";
    text(out, cx - half, size + 10, "full scale " + num(extent) + " mV");
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_svg(const AccuracyMatrix& matrix, bool use_rho) {
  constexpr double cell = 44, left = 60, top = 50;
  const auto count = static_cast<double>(kStandardLeadCount);
  const int width = static_cast<int>(left + cell * count + 20);
  const int height = static_cast<int>(top + cell * count + 40);

  std::ostringstream out;
  open_svg(out, width, height);
  text(out, width / 2.0, 18,
       matrix.record + (use_rho ? " rho" : " R2") + " (rows: synthesized, columns: current)", "middle");
  for (std::size_t c = 0; c < kStandardLeadCount; ++c) {
    text(out, left + cell * (static_cast<double>(c) + 0.5), top - 8, std::string(lead_name(kStandardLeads[c])),
         "middle");
  }
  for (std::size_t r = 0; r < kStandardLeadCount; ++r) {
    const double y = top + cell * static_cast<double>(r);
    text(out, left - 8, y + cell / 2 + 4, std::string(lead_name(kStandardLeads[r])), "end");
    for (std::size_t c = 0; c < kStandardLeadCount; ++c) {
      const double x = left + cell * static_cast<double>(c);
      const auto& s = matrix.cells[r][c];
      std::string fill = "#dddddd";
      std::string ink = "black";
      std::string label = "-";
      if (s.computed) {
        const double v = use_rho ? s.rho : s.r2;
        // Colour spans [0.5, 1], where the cells of interest differ.
        const double t = std::clamp((v - 0.5) / 0.5, 0.0, 1.0);
        auto mix = [t](int from, int to) { return static_cast<int>(std::lround(from + (to - from) * t)); };
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 8), mix(255, 48), mix(255, 107));
        fill = buf;
        if (t > 0.55) ink = "white";
        label = num(v);
      }
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\""
          << num(cell) << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      out << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 4)
          << "\" text-anchor=\"middle\" fill=\"" << ink << "\">" << label << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ecgsynth
