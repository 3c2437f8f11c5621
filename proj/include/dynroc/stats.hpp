#pragma once

#include <span>

namespace dynroc {

/// Linear-interpolation quantile (R type 7) of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

/// Smallest element `c` of an ascending-sorted sample such that at least a
/// fraction `p` of the sample is <= c.
double higher_quantile_sorted(std::span<const double> sorted, double p);

/// ceil(x) that ignores floating noise just above an integer.
long ceil_tolerant(double x);

}  // namespace dynroc
