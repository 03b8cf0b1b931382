#include "sevridge/svg_chart.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "sevridge/error.hpp"

namespace sevridge {

namespace {

std::string escape_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string short_number(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 4);
  return std::string(buf.data(), end);
}

std::string px(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::fixed, 2);
  return std::string(buf.data(), end);
}

}  // namespace

std::string render_bar_chart(const BarChart& chart) {
  if (chart.categories.size() != chart.values.size()) {
    throw ValidationError("bar chart needs one category per value");
  }
  const double w = chart.width;
  const double h = chart.height;
  const double left = 80, right = 20, top = 50, bottom = 60;
  const double plot_w = w - left - right;
  const double plot_h = h - top - bottom;
  const double base_y = top + plot_h;

  double peak = 0.0;
  for (double v : chart.values) {
    if (std::isfinite(v)) peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) peak = 1.0;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) +
         "\" height=\"" + px(h) + "\" viewBox=\"0 0 " + px(w) + " " + px(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "  <title>" + escape_xml(chart.title) + "</title>\n";
  svg += "  <text x=\"" + px(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         escape_xml(chart.title) + "</text>\n";

  // Axes and y ticks.
  svg += "  <line x1=\"" + px(left) + "\" y1=\"" + px(top) + "\" x2=\"" + px(left) +
         "\" y2=\"" + px(base_y) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + px(left) + "\" y1=\"" + px(base_y) + "\" x2=\"" +
         px(left + plot_w) + "\" y2=\"" + px(base_y) + "\" stroke=\"black\"/>\n";
  constexpr int kTicks = 4;
  for (int t = 0; t <= kTicks; ++t) {
    const double value = peak * t / kTicks;
    const double y = base_y - plot_h * t / kTicks;
    svg += "  <line x1=\"" + px(left - 4) + "\" y1=\"" + px(y) + "\" x2=\"" + px(left) +
           "\" y2=\"" + px(y) + "\" stroke=\"black\"/>\n";
    svg += "  <text x=\"" + px(left - 6) + "\" y=\"" + px(y + 4) +
           "\" text-anchor=\"end\">" + escape_xml(short_number(value)) + "</text>\n";
  }

  const std::size_t n = chart.values.size();
  const double slot = n > 0 ? plot_w / static_cast<double>(n) : plot_w;
  const double bar_w = slot * 0.7;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = chart.values[i];
    const double clipped = std::isfinite(v) ? std::max(v, 0.0) : 0.0;
    const double bar_h = plot_h * clipped / peak;
    const double x = left + slot * static_cast<double>(i) + (slot - bar_w) / 2;
    const double y = base_y - bar_h;
    svg += "  <rect class=\"bar\" x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" +
           px(bar_w) + "\" height=\"" + px(bar_h) + "\" fill=\"#4C72B0\"/>\n";
    svg += "  <text x=\"" + px(x + bar_w / 2) + "\" y=\"" + px(y - 4) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + escape_xml(short_number(v)) +
           "</text>\n";
    svg += "  <text x=\"" + px(x + bar_w / 2) + "\" y=\"" + px(base_y + 16) +
           "\" text-anchor=\"middle\">" + escape_xml(chart.categories[i]) + "</text>\n";
  }

  svg += "  <text x=\"" + px(left + plot_w / 2) + "\" y=\"" + px(h - 14) +
         "\" text-anchor=\"middle\">" + escape_xml(chart.x_label) + "</text>\n";
  svg += "  <text x=\"20\" y=\"" + px(top + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + px(top + plot_h / 2) +
         ")\">" + escape_xml(chart.y_label) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace sevridge
