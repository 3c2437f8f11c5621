#include "dynroc/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include "dynroc/csv.hpp"
#include "dynroc/error.hpp"
#include "dynroc/parallel.hpp"
#include "dynroc/random.hpp"
#include "dynroc/stats.hpp"

namespace dynroc {

namespace {

// Visits each distinct death time once with its cases and the scores of its
// controls evaluated at that time.
template <typename Visit>
void for_each_risk_set(const RiskScores& scores, std::span<const SurvivalOutcome> outcomes, Visit&& visit) {
  if (scores.size() != outcomes.size()) {
    throw Error(ErrorKind::invalid_argument, "scores and outcomes must cover the same patients");
  }
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return outcomes[a].time < outcomes[b].time; });

  std::vector<std::size_t> cases;
  std::vector<double> controls;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = outcomes[order[k]].time;
    cases.clear();
    std::size_t end = k;
    for (; end < order.size() && outcomes[order[end]].time == t; ++end) {
      if (outcomes[order[end]].event == Event::death) cases.push_back(order[end]);
    }
    if (!cases.empty()) {
      std::sort(cases.begin(), cases.end());
      controls.clear();
      for (std::size_t j = end; j < order.size(); ++j) controls.push_back(scores.at(order[j], t));
      visit(t, std::span<const std::size_t>(cases), std::span<const double>(controls));
    }
    k = end;
  }
}

void check_span(double span) {
  if (!(span > 0.0 && span <= 1.0)) throw Error(ErrorKind::invalid_argument, "span must lie in (0, 1]");
}

std::string label_number(double x) { return csv::format_double(x); }

}  // namespace

LongitudinalCohort attach_scores(const LongitudinalCohort& cohort, std::span<const ScoreSeries> scores,
                                 std::string_view score_marker) {
  std::unordered_map<std::string_view, const ScoreSeries*> by_id;
  for (const auto& s : scores) by_id.emplace(s.patient_id, &s);
  std::vector<MarkerSeries> markers;
  markers.reserve(cohort.markers().size() + cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& id = cohort.patients()[i].patient_id;
    for (std::size_t s : cohort.series_of(i)) {
      if (cohort.markers()[s].marker_name != score_marker) markers.push_back(cohort.markers()[s]);
    }
    const auto it = by_id.find(id);
    if (it == by_id.end() || it->second->times.empty()) {
      throw Error(ErrorKind::invalid_argument, "no risk score for patient '" + id + "'");
    }
    MarkerSeries series{id, std::string(score_marker), {}};
    for (std::size_t k = 0; k < it->second->times.size(); ++k) {
      series.observations.push_back({it->second->times[k], it->second->scores[k]});
    }
    markers.push_back(std::move(series));
  }
  return LongitudinalCohort(cohort.patients(), std::move(markers), cohort.exclusions());
}

RiskScores::RiskScores(std::vector<ScoreSeries> series) : series_(std::move(series)) {
  for (const auto& s : series_) {
    if (s.times.empty() || s.times.size() != s.scores.size()) {
      throw Error(ErrorKind::invalid_argument, "score series for '" + s.patient_id + "' is empty or ragged");
    }
    for (std::size_t k = 1; k < s.times.size(); ++k) {
      if (!(s.times[k] > s.times[k - 1])) {
        throw Error(ErrorKind::invalid_argument, "score times not increasing for '" + s.patient_id + "'");
      }
    }
  }
}

RiskScores RiskScores::from_cohort(const LongitudinalCohort& cohort, std::string_view score_marker) {
  std::vector<ScoreSeries> series;
  series.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto* m = cohort.series(i, score_marker);
    ScoreSeries s{cohort.patients()[i].patient_id, {}, {}};
    if (m) {
      for (const auto& obs : m->observations) {
        if (!obs.value) continue;
        s.times.push_back(obs.time);
        s.scores.push_back(*obs.value);
      }
    }
    if (s.times.empty()) {
      throw Error(ErrorKind::invalid_argument, "patient '" + s.patient_id + "' has no '" + std::string(score_marker) + "' values");
    }
    series.push_back(std::move(s));
  }
  return RiskScores(std::move(series));
}

RiskScores RiskScores::constant(std::span<const double> scores) {
  std::vector<ScoreSeries> series;
  series.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) series.push_back({std::to_string(i), {0.0}, {scores[i]}});
  return RiskScores(std::move(series));
}

double RiskScores::at(std::size_t patient, double t) const {
  const auto& s = series_.at(patient);
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  if (it == s.times.begin()) {
    throw Error(ErrorKind::invalid_argument,
                "patient '" + s.patient_id + "' has no risk score at or before time " + csv::format_double(t));
  }
  return s.scores[static_cast<std::size_t>(it - s.times.begin()) - 1];
}

double case_percentile(double case_score, std::span<const double> control_scores) {
  if (control_scores.empty()) throw Error(ErrorKind::invalid_argument, "case percentile needs at least one control");
  std::size_t below = 0;
  std::size_t tied = 0;
  for (double c : control_scores) {
    if (c < case_score) {
      ++below;
    } else if (c == case_score) {
      ++tied;
    }
  }
  return (static_cast<double>(below) + 0.5 * static_cast<double>(tied)) / static_cast<double>(control_scores.size());
}

IncidentPercentiles incident_percentiles(const RiskScores& scores, std::span<const SurvivalOutcome> outcomes) {
  IncidentPercentiles out;
  for_each_risk_set(scores, outcomes, [&](double t, std::span<const std::size_t> cases, std::span<const double> controls) {
    if (controls.empty()) {
      out.skipped_without_controls += cases.size();
      return;
    }
    for (std::size_t c : cases) {
      out.cases.push_back({t, c, case_percentile(scores.at(c, t), controls), controls.size()});
    }
  });
  return out;
}

std::vector<double> default_grid(std::span<const double> case_times, std::size_t max_points) {
  std::vector<double> times(case_times.begin(), case_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.size() <= max_points || max_points < 2) return times;
  std::vector<double> grid;
  grid.reserve(max_points);
  const double stride = static_cast<double>(times.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t j = 0; j < max_points; ++j) {
    grid.push_back(times[static_cast<std::size_t>(std::llround(static_cast<double>(j) * stride))]);
  }
  return grid;
}

std::vector<double> nearest_neighbor_smooth(std::span<const double> case_times, std::span<const double> values,
                                            std::span<const double> grid, double span) {
  check_span(span);
  const std::size_t n = case_times.size();
  if (n == 0 || values.size() != n) throw Error(ErrorKind::insufficient_events, "no evaluable cases to smooth");
  const auto k = static_cast<std::size_t>(std::clamp<long>(ceil_tolerant(span * static_cast<double>(n)), 1L, static_cast<long>(n)));

  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    // Cases enter by distance, then by position; a group of tied times is
    // entered from its first member, so partial groups keep the earliest.
    auto right = static_cast<std::size_t>(std::lower_bound(case_times.begin(), case_times.end(), t) - case_times.begin());
    auto left = right;
    std::size_t taken = 0;
    double sum = 0.0;
    while (taken < k) {
      const bool take_right = right < n && (left == 0 || case_times[right] - t < t - case_times[left - 1]);
      std::size_t first = right;
      std::size_t last = right;
      if (take_right) {
        while (last < n && case_times[last] == case_times[right]) ++last;
        right = last;
      } else {
        last = left;
        first = left - 1;
        while (first > 0 && case_times[first - 1] == case_times[left - 1]) --first;
        left = first;
      }
      const std::size_t use = std::min(last - first, k - taken);
      for (std::size_t j = first; j < first + use; ++j) sum += values[j];
      taken += use;
    }
    out.push_back(sum / static_cast<double>(k));
  }
  return out;
}

AccuracyCurve auc_curve(const IncidentPercentiles& percentiles, std::span<const double> grid, double span) {
  check_span(span);
  if (percentiles.cases.empty()) throw Error(ErrorKind::insufficient_events, "no case has risk-set controls");
  AccuracyCurve curve;
  curve.kind = CurveKind::auc;
  curve.span = span;
  curve.cases = percentiles.cases.size();
  curve.skipped_without_controls = percentiles.skipped_without_controls;
  std::vector<double> times;
  std::vector<double> values;
  times.reserve(curve.cases);
  values.reserve(curve.cases);
  for (const auto& c : percentiles.cases) {
    times.push_back(c.time);
    values.push_back(c.percentile);
  }
  curve.grid = grid.empty() ? default_grid(times) : std::vector<double>(grid.begin(), grid.end());
  curve.estimate = nearest_neighbor_smooth(times, values, curve.grid, span);
  return curve;
}

namespace {

double contribution_from_sorted(double case_score, std::span<const double> sorted_controls, double fpf) {
  const double threshold = higher_quantile_sorted(sorted_controls, 1.0 - fpf);
  if (case_score > threshold) return 1.0;
  if (case_score == threshold) return 0.5;
  return 0.0;
}

void check_fpf(double fpf) {
  if (!(fpf > 0.0 && fpf < 1.0)) throw Error(ErrorKind::invalid_argument, "fpf must lie in (0, 1)");
}

}  // namespace

double tpf_contribution(double case_score, std::span<const double> control_scores, double fpf) {
  check_fpf(fpf);
  if (control_scores.empty()) throw Error(ErrorKind::invalid_argument, "tpf needs at least one control");
  std::vector<double> sorted(control_scores.begin(), control_scores.end());
  std::sort(sorted.begin(), sorted.end());
  return contribution_from_sorted(case_score, sorted, fpf);
}

AccuracyCurve tpf_at_fpf_curve(const RiskScores& scores, std::span<const SurvivalOutcome> outcomes, double fpf,
                               std::span<const double> grid, double span) {
  check_fpf(fpf);
  check_span(span);
  AccuracyCurve curve;
  curve.kind = CurveKind::tpf_at_fpf;
  curve.span = span;
  curve.fpf = fpf;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> sorted;
  for_each_risk_set(scores, outcomes, [&](double t, std::span<const std::size_t> cases, std::span<const double> controls) {
    if (controls.empty()) {
      curve.skipped_without_controls += cases.size();
      return;
    }
    sorted.assign(controls.begin(), controls.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t c : cases) {
      times.push_back(t);
      values.push_back(contribution_from_sorted(scores.at(c, t), sorted, fpf));
    }
  });
  if (times.empty()) throw Error(ErrorKind::insufficient_events, "no case has risk-set controls");
  curve.cases = times.size();
  curve.grid = grid.empty() ? default_grid(times) : std::vector<double>(grid.begin(), grid.end());
  curve.estimate = nearest_neighbor_smooth(times, values, curve.grid, span);
  return curve;
}

CurveBuilder score_curve_builder(CurveSettings settings) {
  return [settings](const LongitudinalCohort& cohort, std::span<const double> grid) {
    const auto scores = RiskScores::from_cohort(cohort, settings.score_marker);
    if (settings.kind == CurveKind::tpf_at_fpf) {
      return tpf_at_fpf_curve(scores, cohort.outcomes(), settings.fpf, grid, settings.span);
    }
    return auc_curve(incident_percentiles(scores, cohort.outcomes()), grid, settings.span);
  };
}

std::vector<std::vector<double>> bootstrap_replicates(const CurveBuilder& builder, const LongitudinalCohort& cohort,
                                                      std::span<const double> grid, const BootstrapOptions& options) {
  if (options.replicates < 50) throw Error(ErrorKind::invalid_argument, "bootstrap needs at least 50 replicates");
  if (cohort.empty()) throw Error(ErrorKind::empty_cohort, "cannot bootstrap an empty cohort");
  const auto n = cohort.size();
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(options.replicates));
  parallel_for(curves.size(), options.threads, [&](std::size_t r) {
    std::mt19937_64 rng(substream_seed(options.seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> draw(n);
    for (int attempt = 0; attempt < options.max_redraws; ++attempt) {
      for (auto& d : draw) d = pick(rng);
      const auto sample = cohort.resample(draw);
      if (sample.death_count() == 0) continue;
      try {
        curves[r] = builder(sample, grid).estimate;
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_events) throw;
      }
    }
    throw Error(ErrorKind::insufficient_events, "bootstrap replicate " + std::to_string(r) + " had no evaluable deaths after " +
                                                    std::to_string(options.max_redraws) + " draws");
  });
  return curves;
}

AccuracyCurve bootstrap_bands(const CurveBuilder& builder, const LongitudinalCohort& cohort,
                              const BootstrapOptions& options) {
  if (!(options.level > 0.0 && options.level < 1.0)) throw Error(ErrorKind::invalid_argument, "level must lie in (0, 1)");
  auto curve = builder(cohort, {});
  const auto replicates = bootstrap_replicates(builder, cohort, curve.grid, options);
  const double alpha = 1.0 - options.level;
  curve.lower.resize(curve.grid.size());
  curve.upper.resize(curve.grid.size());
  std::vector<double> column(replicates.size());
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    for (std::size_t r = 0; r < replicates.size(); ++r) column[r] = replicates[r][j];
    std::sort(column.begin(), column.end());
    curve.lower[j] = std::min(quantile_sorted(column, alpha / 2.0), curve.estimate[j]);
    curve.upper[j] = std::max(quantile_sorted(column, 1.0 - alpha / 2.0), curve.estimate[j]);
  }
  return curve;
}

std::vector<WindowAverage> window_average_auc(const IncidentPercentiles& percentiles, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::invalid_argument, "window width must be positive");
  std::vector<WindowAverage> windows;
  std::vector<double> sums;
  for (const auto& c : percentiles.cases) {
    auto k = static_cast<long>(std::floor(c.time / width));
    if (c.time < static_cast<double>(k) * width) --k;
    if (c.time >= static_cast<double>(k + 1) * width) ++k;
    if (k < 0) continue;
    const auto idx = static_cast<std::size_t>(k);
    if (idx >= windows.size()) {
      for (std::size_t w = windows.size(); w <= idx; ++w) {
        windows.push_back({static_cast<double>(w) * width, static_cast<double>(w + 1) * width, 0.0, 0});
        sums.push_back(0.0);
      }
    }
    sums[idx] += c.percentile;
    ++windows[idx].cases;
  }
  std::vector<WindowAverage> out;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (windows[w].cases == 0) continue;
    windows[w].mean_percentile = sums[w] / static_cast<double>(windows[w].cases);
    out.push_back(windows[w]);
  }
  return out;
}

std::vector<double> refresh_schedule(double interval, double horizon) {
  if (!(interval > 0.0)) throw Error(ErrorKind::invalid_argument, "refresh interval must be positive");
  std::vector<double> times;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * interval;
    if (t > horizon) break;
    times.push_back(t);
  }
  return times;
}

UpdateComparisonTable compare_update_policies(const CoxFit& fit, const LongitudinalCohort& cohort, double interval_a,
                                              double interval_b, double window, double schedule_spacing) {
  for (double interval : {interval_a, interval_b}) {
    const double ratio = interval / schedule_spacing;
    if (!(interval > 0.0) || !(schedule_spacing > 0.0) || ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw Error(ErrorKind::invalid_argument, "refresh intervals must be positive multiples of the marker schedule spacing");
    }
  }
  double horizon = 0.0;
  for (const auto& o : cohort.outcomes()) horizon = std::max(horizon, o.time);

  const auto policy = [&](double interval) {
    const auto schedule = refresh_schedule(interval, horizon);
    return window_average_auc(incident_percentiles(RiskScores(time_varying_scores(fit, cohort, schedule)), cohort.outcomes()),
                              window);
  };
  const auto a = policy(interval_a);
  const auto b = policy(interval_b);

  UpdateComparisonTable table;
  table.interval_a = interval_a;
  table.interval_b = interval_b;
  for (std::size_t w = 0; w < a.size() && w < b.size(); ++w) {
    table.rows.push_back({a[w].start, a[w].end, a[w].mean_percentile, b[w].mean_percentile,
                          b[w].mean_percentile - a[w].mean_percentile});
  }
  return table;
}

SubgroupRule SubgroupRule::parse(std::string_view text) {
  SubgroupRule rule;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "sex" && colon == std::string_view::npos) {
    rule.kind = Kind::sex;
  } else if (name == "genotype" && colon == std::string_view::npos) {
    rule.kind = Kind::genotype;
  } else if (name == "marker_le") {
    const auto x = csv::parse_double(arg);
    if (!x || !std::isfinite(*x)) throw Error(ErrorKind::unknown_rule, "marker_le needs a numeric threshold");
    rule.kind = Kind::marker_le;
    rule.threshold = *x;
  } else if (name == "age_bands") {
    const auto comma = arg.find(',');
    const auto a = csv::parse_double(arg.substr(0, comma));
    const auto b = comma == std::string_view::npos ? std::nullopt : csv::parse_double(arg.substr(comma + 1));
    if (!a || !b || !(*a < *b)) throw Error(ErrorKind::unknown_rule, "age_bands needs two increasing cut points a,b");
    rule.kind = Kind::age_bands;
    rule.age_low = *a;
    rule.age_high = *b;
  } else {
    throw Error(ErrorKind::unknown_rule, "unknown subgroup rule '" + std::string(text) + "'");
  }
  return rule;
}

std::vector<std::string> SubgroupRule::labels() const {
  switch (kind) {
    case Kind::marker_le: return {"le" + label_number(threshold), "gt" + label_number(threshold)};
    case Kind::age_bands:
      return {"le" + label_number(age_low), "gt" + label_number(age_low) + "_le" + label_number(age_high),
              "gt" + label_number(age_high)};
    case Kind::sex: return {"female", "male"};
    case Kind::genotype: return {"f508_homozygous", "f508_heterozygous", "other", "missing"};
  }
  return {};
}

std::string SubgroupRule::label_of(const LongitudinalCohort& cohort, std::size_t patient,
                                   std::string_view marker_name) const {
  const auto& p = cohort.patients().at(patient);
  const auto names = labels();
  switch (kind) {
    case Kind::marker_le: {
      const auto* series = cohort.series(patient, marker_name);
      const auto value = series ? series->value_at(0.0) : std::nullopt;
      if (!value) throw Error(ErrorKind::invalid_argument, "patient '" + p.patient_id + "' has no baseline marker value");
      return names[*value <= threshold ? 0 : 1];
    }
    case Kind::age_bands:
      return names[p.baseline_age <= age_low ? 0 : (p.baseline_age <= age_high ? 1 : 2)];
    case Kind::sex: return std::string(to_string(p.sex));
    case Kind::genotype: return std::string(to_string(p.genotype));
  }
  return {};
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> split_by_rule(const LongitudinalCohort& cohort,
                                                                            const SubgroupRule& rule,
                                                                            std::string_view marker_name) {
  const auto names = rule.labels();
  std::vector<std::vector<std::size_t>> members(names.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto label = rule.label_of(cohort, i, marker_name);
    const auto it = std::find(names.begin(), names.end(), label);
    members[static_cast<std::size_t>(it - names.begin())].push_back(i);
  }
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  for (std::size_t g = 0; g < names.size(); ++g) {
    if (!members[g].empty()) out.emplace_back(names[g], std::move(members[g]));
  }
  return out;
}

std::vector<SubgroupCurve> subgroup_curves(const LongitudinalCohort& cohort, const SubgroupRule& rule,
                                           std::string_view marker_name, const CurveBuilder& builder) {
  std::vector<SubgroupCurve> out;
  for (const auto& [label, members] : split_by_rule(cohort, rule, marker_name)) {
    const auto group = cohort.subset(members);
    SubgroupCurve result{label, group.size(), group.death_count(), std::nullopt, {}};
    if (result.deaths == 0) {
      result.note = "no deaths";
    } else {
      try {
        result.curve = builder(group, {});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_events) throw;
        result.note = e.what();
      }
    }
    out.push_back(std::move(result));
  }
  return out;
}

void write_curve_csv(const AccuracyCurve& curve, std::ostream& out) {
  out << "time,estimate,lower,upper\n";
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    out << csv::format_double(curve.grid[j]) << ',' << csv::format_double(curve.estimate[j]) << ',';
    if (curve.has_bands()) out << csv::format_double(curve.lower[j]) << ',' << csv::format_double(curve.upper[j]);
    else out << ',';
    out << '\n';
  }
}

AccuracyCurve read_curve_csv(std::istream& in, std::string_view source) {
  const auto table = csv::read(in, source);
  if (table.header != std::vector<std::string>{"time", "estimate", "lower", "upper"}) {
    throw Error(ErrorKind::schema, std::string(source) + ": expected columns time,estimate,lower,upper");
  }
  AccuracyCurve curve;
  bool bands = !table.rows.empty() && !table.rows.front()[2].empty();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto t = csv::parse_double(row[0]);
    const auto e = csv::parse_double(row[1]);
    if (!t || !e) throw Error(ErrorKind::schema, std::string(source) + ":" + std::to_string(table.line[r]) + ": bad number");
    curve.grid.push_back(*t);
    curve.estimate.push_back(*e);
    if (bands) {
      const auto lo = csv::parse_double(row[2]);
      const auto hi = csv::parse_double(row[3]);
      if (!lo || !hi) throw Error(ErrorKind::schema, std::string(source) + ":" + std::to_string(table.line[r]) + ": bad band");
      curve.lower.push_back(*lo);
      curve.upper.push_back(*hi);
    }
  }
  return curve;
}

void write_comparison_csv(const UpdateComparisonTable& table, std::ostream& out) {
  out << "window_start,window_end,policy_a,policy_b,difference\n";
  for (const auto& row : table.rows) {
    out << csv::format_double(row.window_start) << ',' << csv::format_double(row.window_end) << ','
        << csv::format_double(row.policy_a) << ',' << csv::format_double(row.policy_b) << ','
        << csv::format_double(row.difference) << '\n';
  }
}

}  // namespace dynroc
