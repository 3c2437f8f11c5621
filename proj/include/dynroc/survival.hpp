#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "dynroc/registry.hpp"

namespace dynroc {

/// Incident cases and dynamic controls at one time. Members are indices into
/// the outcome collection the set was built from.
struct RiskSet {
  double time = 0.0;
  std::vector<std::size_t> cases;     // died exactly at `time`
  std::vector<std::size_t> controls;  // outcome time strictly after `time`
};

/// Subjects censored exactly at `t` belong to neither group.
RiskSet risk_set_at(std::span<const SurvivalOutcome> outcomes, double t);

/// Number of subjects with outcome time >= t.
std::size_t at_risk_count(std::span<const SurvivalOutcome> outcomes, double t);

/// Sorted distinct death times.
std::vector<double> event_times(std::span<const SurvivalOutcome> outcomes);

/// Right-continuous survival step function. `times` are the death times; the
/// curve equals 1 before the first of them.
struct StepCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> standard_error;  // Greenwood

  double at(double t) const;
};

StepCurve kaplan_meier(std::span<const SurvivalOutcome> outcomes);

/// CSV `time,survival[,se]`, including a leading row at time 0.
void write_step_curve_csv(const StepCurve& curve, std::ostream& out, bool with_se = true);

}  // namespace dynroc
