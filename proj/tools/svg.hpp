#pragma once

#include <string>
#include <vector>

namespace infomorph::cli {

struct Series {
  std::string name;
  std::vector<double> values;  // x = index
  std::string color;
};

// Minimal self-contained SVG emitters; the CSV artifacts next to them carry
// the authoritative numbers.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace infomorph::cli
