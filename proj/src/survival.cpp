#include "dynroc/survival.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dynroc/csv.hpp"
#include "dynroc/error.hpp"

namespace dynroc {

RiskSet risk_set_at(std::span<const SurvivalOutcome> outcomes, double t) {
  RiskSet set;
  set.time = t;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.time > t) {
      set.controls.push_back(i);
    } else if (o.time == t && o.event == Event::death) {
      set.cases.push_back(i);
    }
  }
  return set;
}

std::size_t at_risk_count(std::span<const SurvivalOutcome> outcomes, double t) {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [t](const auto& o) { return o.time >= t; }));
}

std::vector<double> event_times(std::span<const SurvivalOutcome> outcomes) {
  std::vector<double> times;
  for (const auto& o : outcomes) {
    if (o.event == Event::death) times.push_back(o.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

double StepCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepCurve kaplan_meier(std::span<const SurvivalOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorKind::invalid_argument, "kaplan_meier needs at least one outcome");

  // Sort by time with deaths ahead of censorings at the same time.
  std::vector<const SurvivalOutcome*> sorted;
  sorted.reserve(outcomes.size());
  for (const auto& o : outcomes) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->time != b->time) return a->time < b->time;
    return a->event == Event::death && b->event != Event::death;
  });

  StepCurve curve;
  double survival = 1.0;
  double greenwood = 0.0;
  std::size_t at_risk = sorted.size();
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i]->time;
    std::size_t deaths = 0;
    std::size_t leaving = 0;
    while (i < sorted.size() && sorted[i]->time == t) {
      if (sorted[i]->event == Event::death) ++deaths;
      ++leaving;
      ++i;
    }
    if (deaths > 0) {
      const double n = static_cast<double>(at_risk);
      const double d = static_cast<double>(deaths);
      survival *= (n - d) / n;
      if (deaths < at_risk) greenwood += d / (n * (n - d));
      curve.times.push_back(t);
      curve.survival.push_back(survival);
      curve.standard_error.push_back(survival > 0.0 ? survival * std::sqrt(greenwood) : 0.0);
    }
    at_risk -= leaving;
  }
  return curve;
}

void write_step_curve_csv(const StepCurve& curve, std::ostream& out, bool with_se) {
  out << (with_se ? "time,survival,se\n" : "time,survival\n");
  out << "0,1" << (with_se ? ",0\n" : "\n");
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    out << csv::format_double(curve.times[k]) << ',' << csv::format_double(curve.survival[k]);
    if (with_se) out << ',' << csv::format_double(curve.standard_error[k]);
    out << '\n';
  }
}

}  // namespace dynroc
