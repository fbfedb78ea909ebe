#pragma once

#include <cstdio>
#include <span>
#include <string>

#include "beliefmap/env.hpp"

namespace beliefmap {

namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// White at the minimum to a deep blue at the maximum, linear in value.
inline std::string heat_color(double t) {
  const int r = static_cast<int>(255 + t * (33 - 255) + 0.5);
  const int g = static_cast<int>(255 + t * (102 - 255) + 0.5);
  const int b = static_cast<int>(255 + t * (172 - 255) + 0.5);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

struct SvgMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string title;
};

// Deterministic grid heatmap of per-state values, laid out by the
// environment's geometry (states sharing a cell are summed). Linear colour
// scale with a min/max legend; identical inputs produce identical bytes.
inline std::string render_heatmap_svg(const GridGeometry& geo, std::span<const double> per_state,
                                      const SvgMetadata& meta) {
  if (per_state.size() != geo.cell_of_state.size())
    throw std::invalid_argument("render_heatmap_svg: value count does not match geometry");
  std::vector<double> cells(static_cast<std::size_t>(geo.rows) * geo.cols, 0.0);
  for (std::size_t s = 0; s < per_state.size(); ++s) {
    const int cell = geo.cell_of_state[s];
    if (cell >= 0) cells[cell] += per_state[s];
  }
  double lo = cells.empty() ? 0.0 : cells[0];
  double hi = lo;
  for (double v : cells) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  const int cell_px = 28;
  const int pad = 4;
  const int legend_h = 22;
  const int width = geo.cols * cell_px + 2 * pad;
  const int height = geo.rows * cell_px + 2 * pad + legend_h;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width)
         + "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<!-- config_hash=" + meta.config_hash + " seed=" + std::to_string(meta.seed) + " -->\n";
  if (!meta.title.empty()) svg += "<title>" + meta.title + "</title>\n";
  svg += "<desc>" + geo.description + "</desc>\n";
  for (int r = 0; r < geo.rows; ++r) {
    for (int c = 0; c < geo.cols; ++c) {
      const double v = cells[static_cast<std::size_t>(r) * geo.cols + c];
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      svg += "<rect x=\"" + std::to_string(pad + c * cell_px) + "\" y=\""
             + std::to_string(pad + r * cell_px) + "\" width=\"" + std::to_string(cell_px)
             + "\" height=\"" + std::to_string(cell_px) + "\" fill=\"" + detail::heat_color(t)
             + "\" stroke=\"#cccccc\" stroke-width=\"1\"><title>" + detail::fmt(v)
             + "</title></rect>\n";
    }
  }
  svg += "<text x=\"" + std::to_string(pad) + "\" y=\""
         + std::to_string(geo.rows * cell_px + pad + 16)
         + "\" font-family=\"monospace\" font-size=\"12\">min=" + detail::fmt(lo)
         + " max=" + detail::fmt(hi) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace beliefmap
