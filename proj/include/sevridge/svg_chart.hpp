#pragma once

#include <string>
#include <vector>

namespace sevridge {

struct BarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<double> values;
  int width = 720;
  int height = 420;
};

// Static SVG: one <rect class="bar"> per value, heights scaled linearly to
// the largest value, a value label above each bar and labeled axes.
std::string render_bar_chart(const BarChart& chart);

}  // namespace sevridge
