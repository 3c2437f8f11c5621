#include "dynroc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dynroc::plot {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 64;
constexpr double kRight = 24;
constexpr double kTop = 40;
constexpr double kBottom = 56;

const char* const kPalette[] = {"#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#2e4053"};

std::string fixed(double v, int digits = 2) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, v);
  return buffer;
}

std::string escape(const std::string& text) {
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

std::string render_svg(std::span<const Line> lines, const Axes& axes) {
  double x_min = 0.0;
  double x_max = 1.0;
  bool first = true;
  for (const auto& line : lines) {
    for (double x : line.x) {
      if (first) {
        x_min = x_max = x;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  }
  x_min = std::min(x_min, 0.0);
  if (!(x_max > x_min)) x_max = x_min + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) { return kTop + (1.0 - std::clamp(y, 0.0, 1.0)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
      << "</text>\n";
  svg << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(plot_w) << "\" height=\""
      << fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double y = k / 5.0;
    svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(y) + 4) << "\" text-anchor=\"end\">" << fixed(y, 1)
        << "</text>\n";
    const double x = x_min + k * (x_max - x_min) / 5.0;
    svg << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(kTop + plot_h + 16) << "\" text-anchor=\"middle\">"
        << fixed(x, 1) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(axes.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << fixed(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(axes.y_label) << "</text>\n";

  std::size_t colour = 0;
  std::size_t legend = 0;
  for (const auto& line : lines) {
    if (line.x.empty()) continue;
    const char* stroke = kPalette[colour % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << (line.dotted ? "1" : "1.8") << '"';
    if (line.dotted) svg << " stroke-dasharray=\"2,3\"";
    svg << " points=\"";
    for (std::size_t k = 0; k < line.x.size(); ++k) {
      if (line.step && k > 0) svg << fixed(px(line.x[k])) << ',' << fixed(py(line.y[k - 1])) << ' ';
      svg << fixed(px(line.x[k])) << ',' << fixed(py(line.y[k])) << ' ';
    }
    svg << "\"/>\n";
    if (!line.label.empty()) {
      const double ly = kTop + 14 + 14 * static_cast<double>(legend++);
      svg << "<text x=\"" << fixed(kLeft + plot_w - 8) << "\" y=\"" << fixed(ly) << "\" text-anchor=\"end\" fill=\"" << stroke
          << "\">" << escape(line.label) << "</text>\n";
    }
    if (!line.dotted) ++colour;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_curve_svg(const AccuracyCurve& curve, const std::string& title) {
  std::vector<Line> lines;
  lines.push_back({curve.grid, curve.estimate, {}, false, false});
  if (curve.has_bands()) {
    // Dotted lines do not advance the palette, so bands take the estimate's colour.
    lines.insert(lines.begin(), Line{curve.grid, curve.upper, {}, true, false});
    lines.insert(lines.begin(), Line{curve.grid, curve.lower, {}, true, false});
  }
  Axes axes;
  axes.title = title;
  axes.y_label = curve.kind == CurveKind::auc ? "AUC(t)" : "TPF at FPF " + fixed(curve.fpf, 2);
  return render_svg(lines, axes);
}

std::string render_km_svg(std::span<const std::pair<std::string, StepCurve>> curves, const std::string& title) {
  std::vector<Line> lines;
  for (const auto& [label, curve] : curves) {
    Line line{{0.0}, {1.0}, label, false, true};
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
      line.x.push_back(curve.times[k]);
      line.y.push_back(curve.survival[k]);
    }
    lines.push_back(std::move(line));
  }
  Axes axes;
  axes.title = title;
  axes.y_label = "Survival probability";
  return render_svg(lines, axes);
}

}  // namespace dynroc::plot
