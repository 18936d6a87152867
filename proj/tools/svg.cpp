#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace infomorph::cli {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  std::ostringstream out;
  header(out, title);
  double lo = 0.0, hi = 1.0;
  std::size_t n = 1;
  bool any = false;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      if (!any) {
        lo = hi = v;
        any = true;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n = std::max(n, s.values.size());
  }
  if (!any || lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto x_at = [&](std::size_t i) {
    return kMarginLeft + (n <= 1 ? 0.0 : plot_w * static_cast<double>(i) / (n - 1));
  };
  auto y_at = [&](double v) {
    return kMarginTop + plot_h * (1.0 - (v - lo) / (hi - lo));
  };
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    const double y = y_at(v);
    out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << y << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << y << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(v) << "</text>\n";
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const std::size_t i = (n - 1) * tick / 4;
    const double x = x_at(i);
    out << "<text x=\"" << x << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << i
        << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << y_label
      << "</text>\n";
  int legend_y = kMarginTop + 10;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (std::isnan(s.values[i])) continue;
      out << x_at(i) << "," << y_at(s.values[i]) << " ";
    }
    out << "\"/>\n";
    out << "<line x1=\"" << kWidth - kMarginRight - 130 << "\" y1=\"" << legend_y
        << "\" x2=\"" << kWidth - kMarginRight - 110 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight - 104 << "\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  std::ostringstream out;
  header(out, title);
  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) hi = lo + 1.0;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto y_at = [&](double v) {
    return kMarginTop + plot_h * (1.0 - (v - lo) / (hi - lo));
  };
  const double zero_y = y_at(0.0);
  const std::size_t n = std::max<std::size_t>(values.size(), 1);
  const double slot = plot_w / n;
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << zero_y << "\" x2=\""
      << kMarginLeft + plot_w << "\" y2=\"" << zero_y << "\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = kMarginLeft + slot * i + slot * 0.15;
    const double w = slot * 0.7;
    const double y = y_at(std::max(values[i], 0.0));
    const double h = std::abs(y_at(values[i]) - zero_y);
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
        << h << "\" fill=\"" << (values[i] >= 0 ? "#4a7fb5" : "#b5524a") << "\"/>\n";
    if (i < labels.size()) {
      const double cx = x + w / 2;
      out << "<text x=\"" << cx << "\" y=\"" << kHeight - kMarginBottom + 12
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\" "
          << "transform=\"rotate(-60 " << cx << " " << kHeight - kMarginBottom + 12
          << ")\">" << labels[i] << "</text>\n";
    }
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    const double y = y_at(v);
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(v) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace infomorph::cli
