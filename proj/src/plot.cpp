#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "diging/experiment.hpp"

namespace diging {

namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 560.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

double log10_clamped(double v) {
  return std::log10(std::max(v, 1e-300));
}

}  // namespace

void emit_plot(std::span<const RunTrace> traces,
               std::span<const std::string> names, std::ostream& out) {
  if (traces.empty()) throw Error("plot needs at least one trace");
  if (names.size() != traces.size()) {
    throw Error("plot needs one name per trace");
  }

  long max_k = 1;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& trace : traces) {
    for (const auto& row : trace.rows) {
      max_k = std::max(max_k, row.k);
      const double v = log10_clamped(row.normalized_residual);
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi - lo < 1.0) hi = lo + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double k) {
    return kMarginLeft + plot_w * k / static_cast<double>(max_k);
  };
  auto sy = [&](double log_v) {
    return kMarginTop + plot_h * (hi - log_v) / (hi - lo);
  };

  out << std::setprecision(8);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes box.
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
      << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  // Decade gridlines and labels on y.
  const int decades = static_cast<int>(hi - lo);
  const int y_step = std::max(1, decades / 10);
  for (int d = 0; d <= decades; d += y_step) {
    const double v = hi - d;
    const double y = sy(v);
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << y << "\" x2=\""
        << (kMarginLeft + plot_w) << "\" y2=\"" << y
        << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
    out << "<text x=\"" << (kMarginLeft - 8) << "\" y=\"" << (y + 4)
        << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">"
        << "1e" << static_cast<long>(v) << "</text>\n";
  }

  // x ticks.
  const int x_ticks = 8;
  for (int t = 0; t <= x_ticks; ++t) {
    const double k = static_cast<double>(max_k) * t / x_ticks;
    const double x = sx(k);
    out << "<line x1=\"" << x << "\" y1=\"" << (kMarginTop + plot_h)
        << "\" x2=\"" << x << "\" y2=\"" << (kMarginTop + plot_h + 5)
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << (kMarginTop + plot_h + 20)
        << "\" font-size=\"12\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">"
        << static_cast<long>(std::lround(k)) << "</text>\n";
  }
  out << "<text x=\"" << (kMarginLeft + plot_w / 2) << "\" y=\""
      << (kHeight - 12)
      << "\" font-size=\"13\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">iteration k</text>\n";
  out << "<text x=\"16\" y=\"" << (kMarginTop + plot_h / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << (kMarginTop + plot_h / 2)
      << ")\">normalized residual</text>\n";

  for (std::size_t t = 0; t < traces.size(); ++t) {
    const char* color = kPalette[t % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& row : traces[t].rows) {
      out << sx(static_cast<double>(row.k)) << ','
          << sy(log10_clamped(row.normalized_residual)) << ' ';
    }
    out << "\"/>\n";
  }

  // Legend.
  const double legend_x = kMarginLeft + plot_w - 180.0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const double y = kMarginTop + 18.0 + 18.0 * static_cast<double>(t);
    const char* color = kPalette[t % std::size(kPalette)];
    out << "<line x1=\"" << legend_x << "\" y1=\"" << y << "\" x2=\""
        << (legend_x + 26) << "\" y2=\"" << y << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << (legend_x + 32) << "\" y=\"" << (y + 4)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << names[t]
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace diging
