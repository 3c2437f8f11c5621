#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynroc/accuracy.hpp"
#include "dynroc/survival.hpp"

namespace dynroc::plot {

struct Line {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  bool dotted = false;
  bool step = false;
};

struct Axes {
  std::string title;
  std::string x_label = "Years from baseline";
  std::string y_label;
};

/// Line chart on y in [0, 1]; x spans the data.
std::string render_svg(std::span<const Line> lines, const Axes& axes);

/// Solid estimate with dotted bands when present.
std::string render_curve_svg(const AccuracyCurve& curve, const std::string& title);

/// One step line per labelled Kaplan-Meier curve.
std::string render_km_svg(std::span<const std::pair<std::string, StepCurve>> curves, const std::string& title);

}  // namespace dynroc::plot
