#pragma once

#include <string>
#include <vector>

#include "dynroc/cox.hpp"
#include "dynroc/registry.hpp"

namespace fixture {

inline std::string id(std::size_t i) { return "S" + std::to_string(i + 1); }

inline dynroc::PatientRecord patient(std::size_t i, double time, bool died) {
  dynroc::PatientRecord p;
  p.patient_id = id(i);
  p.baseline_age = 10.0 + static_cast<double>(i);
  p.weight_pct = 50.0;
  p.height_pct = 50.0;
  p.pancreatic_insufficient = true;
  if (died) p.death_time = time;
  p.last_followup_time = time;
  return p;
}

// One patient per (time, died, baseline marker) with a single time-0 reading.
struct Row {
  double time;
  bool died;
  double marker;
};

inline dynroc::LongitudinalCohort cohort(const std::vector<Row>& rows, const std::string& marker = "fev1") {
  std::vector<dynroc::PatientRecord> patients;
  std::vector<dynroc::MarkerSeries> series;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    patients.push_back(patient(i, rows[i].time, rows[i].died));
    series.push_back({id(i), marker, {{0.0, rows[i].marker}}});
  }
  return dynroc::LongitudinalCohort(std::move(patients), std::move(series));
}

inline std::vector<dynroc::SurvivalOutcome> outcomes(const std::vector<std::pair<double, bool>>& rows) {
  std::vector<dynroc::SurvivalOutcome> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({id(i), rows[i].first, rows[i].second ? dynroc::Event::death : dynroc::Event::censored});
  }
  return out;
}

inline std::vector<dynroc::ScoreSeries> constant_scores(const std::vector<double>& scores) {
  std::vector<dynroc::ScoreSeries> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({id(i), {0.0}, {scores[i]}});
  return out;
}

}  // namespace fixture
