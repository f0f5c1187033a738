#include "compass/svg.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace compass {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
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

}  // namespace

std::string render_compass_svg(const std::vector<std::pair<std::string, CompassPoint>>& points,
                               const SvgOptions& options) {
  if (points.empty()) throw ValidationError("BadConfig", "need at least one point");
  std::set<std::string> labels;
  for (const auto& [label, point] : points) {
    if (!labels.insert(label).second)
      throw ValidationError("DuplicateLabel", "label '" + label + "' appears twice");
    if (std::abs(point.social) > 10.0 || std::abs(point.economic) > 10.0)
      throw ValidationError("OutOfRange", "point for '" + label + "' outside [-10, 10]^2");
  }

  const double plot_w = options.width - 2.0 * options.margin;
  const double plot_h = options.height - 2.0 * options.margin;
  if (plot_w <= 0 || plot_h <= 0) throw ValidationError("BadConfig", "margin exceeds viewport");
  auto px = [&](double economic) { return options.margin + (economic + 10.0) / 20.0 * plot_w; };
  auto py = [&](double social) { return options.margin + (10.0 - social) / 20.0 * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) +
         "\" height=\"" + std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) + "\">\n";
  if (!options.timestamp.empty())
    svg += "  <desc>generated " + escape_xml(options.timestamp) + "</desc>\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!options.title.empty())
    svg += "  <text x=\"" + fmt(options.width / 2.0) + "\" y=\"" + fmt(options.margin / 2.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           escape_xml(options.title) + "</text>\n";

  // plot frame and quadrant gridlines at 0
  svg += "  <rect x=\"" + fmt(px(-10)) + "\" y=\"" + fmt(py(10)) + "\" width=\"" + fmt(plot_w) +
         "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  svg += "  <line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(-10)) + "\" x2=\"" + fmt(px(0)) +
         "\" y2=\"" + fmt(py(10)) + "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
  svg += "  <line x1=\"" + fmt(px(-10)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(10)) +
         "\" y2=\"" + fmt(py(0)) + "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";

  for (int tick = -10; tick <= 10; tick += 5) {
    svg += "  <text x=\"" + fmt(px(tick)) + "\" y=\"" + fmt(py(-10) + 16.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           std::to_string(tick) + "</text>\n";
    svg += "  <text x=\"" + fmt(px(-10) - 6.0) + "\" y=\"" + fmt(py(tick) + 3.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           std::to_string(tick) + "</text>\n";
  }
  svg += "  <text x=\"" + fmt(px(0)) + "\" y=\"" + fmt(py(-10) + 30.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">economic (left to right)"
         "</text>\n";
  svg += "  <text x=\"" + fmt(px(-10) - 28.0) + "\" y=\"" + fmt(py(0)) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 " +
         fmt(px(-10) - 28.0) + " " + fmt(py(0)) +
         ")\">social (libertarian to authoritarian)</text>\n";

  std::size_t palette_index = 0;
  for (const auto& [label, point] : points) {
    std::string color;
    auto it = options.colors.find(label);
    if (it != options.colors.end()) {
      color = it->second;
    } else {
      color = kPalette[palette_index % (sizeof(kPalette) / sizeof(kPalette[0]))];
      ++palette_index;
    }
    const double x = px(point.economic);
    const double y = py(point.social);
    svg += "  <circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) + "\" r=\"4\" fill=\"" + color +
           "\"/>\n";
    svg += "  <text x=\"" + fmt(x + 6.0) + "\" y=\"" + fmt(y - 6.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace compass
