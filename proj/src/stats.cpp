#include "dynroc/stats.hpp"

#include <algorithm>
#include <cmath>

#include "dynroc/error.hpp"

namespace dynroc {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_argument, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double higher_quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_argument, "quantile of empty sample");
  const long rank = std::max(1L, ceil_tolerant(p * static_cast<double>(sorted.size())));
  return sorted[static_cast<std::size_t>(std::min<long>(rank, static_cast<long>(sorted.size()))) - 1];
}

long ceil_tolerant(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(x));
}

}  // namespace dynroc
