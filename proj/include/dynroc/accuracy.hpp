#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynroc/cox.hpp"
#include "dynroc/registry.hpp"

namespace dynroc {

/// Marker name under which risk scores travel inside a cohort, so that
/// resampling and subsetting keep each patient's scores attached.
inline constexpr std::string_view kScoreMarker = "risk_score";

/// Copy of `cohort` with each patient's score series stored as the
/// `score_marker` series (replacing any existing one). Every patient needs a
/// series.
LongitudinalCohort attach_scores(const LongitudinalCohort& cohort, std::span<const ScoreSeries> scores,
                                 std::string_view score_marker = kScoreMarker);

/// Step-function risk scores aligned with a cohort's patients. The score of
/// patient i at time t is the last value recorded at or before t.
class RiskScores {
 public:
  explicit RiskScores(std::vector<ScoreSeries> series);

  static RiskScores from_cohort(const LongitudinalCohort& cohort, std::string_view score_marker = kScoreMarker);
  /// One time-0 score per patient.
  static RiskScores constant(std::span<const double> scores);

  std::size_t size() const { return series_.size(); }
  double at(std::size_t patient, double t) const;
  const std::vector<ScoreSeries>& series() const { return series_; }

 private:
  std::vector<ScoreSeries> series_;
};

/// Mid-rank share of controls scoring below the case:
/// (#below + #tied / 2) / #controls.
double case_percentile(double case_score, std::span<const double> control_scores);

struct CasePercentile {
  double time = 0.0;
  std::size_t patient = 0;  // index into the outcome collection
  double percentile = 0.0;
  std::size_t controls = 0;
};

struct IncidentPercentiles {
  std::vector<CasePercentile> cases;  // ascending time, then patient index
  std::size_t skipped_without_controls = 0;
};

/// One percentile per death, each case ranked against the risk-set controls
/// at its death time only (tied cases are not compared with one another).
IncidentPercentiles incident_percentiles(const RiskScores& scores, std::span<const SurvivalOutcome> outcomes);

enum class CurveKind { auc, tpf_at_fpf };

struct AccuracyCurve {
  CurveKind kind = CurveKind::auc;
  std::vector<double> grid;
  std::vector<double> estimate;
  std::vector<double> lower;  // empty unless bands were computed
  std::vector<double> upper;
  double span = 0.1;
  double fpf = 0.0;  // tpf_at_fpf only
  std::size_t cases = 0;
  std::size_t skipped_without_controls = 0;

  bool has_bands() const { return !lower.empty(); }
};

inline constexpr double kDefaultSpan = 0.10;
inline constexpr std::size_t kDefaultGridPoints = 200;

/// Distinct case times, thinned to at most `max_points` evenly spaced ones.
std::vector<double> default_grid(std::span<const double> case_times, std::size_t max_points = kDefaultGridPoints);

/// Mean of the values belonging to the ceil(span * n) cases nearest each grid
/// time. Equidistant neighbours resolve toward the earlier case.
std::vector<double> nearest_neighbor_smooth(std::span<const double> case_times, std::span<const double> values,
                                            std::span<const double> grid, double span);

/// Local average of case percentiles. An empty grid selects default_grid.
AccuracyCurve auc_curve(const IncidentPercentiles& percentiles, std::span<const double> grid, double span = kDefaultSpan);

/// Per-case contribution to the sensitivity at a fixed false-positive
/// fraction: 1 above the control threshold, 1/2 on it, 0 below.
double tpf_contribution(double case_score, std::span<const double> control_scores, double fpf);

/// Smoothed sensitivity with the control threshold set at each risk set's
/// "higher" empirical (1 - fpf) quantile.
AccuracyCurve tpf_at_fpf_curve(const RiskScores& scores, std::span<const SurvivalOutcome> outcomes, double fpf,
                               std::span<const double> grid, double span = kDefaultSpan);

struct CurveSettings {
  CurveKind kind = CurveKind::auc;
  double span = kDefaultSpan;
  double fpf = 0.05;
  std::string score_marker = std::string(kScoreMarker);
};

/// Builds a curve from a scored cohort on a grid (empty grid: default).
using CurveBuilder = std::function<AccuracyCurve(const LongitudinalCohort&, std::span<const double>)>;

/// Curve of the scores attached under settings.score_marker.
CurveBuilder score_curve_builder(CurveSettings settings);

struct BootstrapOptions {
  int replicates = 500;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int max_redraws = 10;
};

/// Patient-level percentile bootstrap: every replicate resamples whole
/// patients, rebuilds the curve on the original grid and the pointwise
/// quantiles form the band. The band is widened to contain the estimate.
AccuracyCurve bootstrap_bands(const CurveBuilder& builder, const LongitudinalCohort& cohort,
                              const BootstrapOptions& options = {});

/// Replicate curves behind bootstrap_bands, indexed [replicate][grid point].
std::vector<std::vector<double>> bootstrap_replicates(const CurveBuilder& builder, const LongitudinalCohort& cohort,
                                                      std::span<const double> grid, const BootstrapOptions& options);

struct WindowAverage {
  double start = 0.0;
  double end = 0.0;
  double mean_percentile = 0.0;
  std::size_t cases = 0;
};

/// Mean case percentile within consecutive [start, end) windows of `width`
/// from time 0; windows without cases are omitted.
std::vector<WindowAverage> window_average_auc(const IncidentPercentiles& percentiles, double width);

struct UpdateComparisonRow {
  double window_start = 0.0;
  double window_end = 0.0;
  double policy_a = 0.0;
  double policy_b = 0.0;
  double difference = 0.0;  // policy_b - policy_a
};

struct UpdateComparisonTable {
  double interval_a = 1.0;
  double interval_b = 2.0;
  std::vector<UpdateComparisonRow> rows;
};

/// Scores refreshed every interval_a vs interval_b years (LOCF between
/// refreshes), compared through windowed-average AUC.
UpdateComparisonTable compare_update_policies(const CoxFit& fit, const LongitudinalCohort& cohort,
                                              double interval_a = 1.0, double interval_b = 2.0, double window = 1.0,
                                              double schedule_spacing = 1.0);

/// Refresh times 0, interval, 2*interval, ... up to `horizon`.
std::vector<double> refresh_schedule(double interval, double horizon);

/// Stratifiers: `marker_le:<x>`, `age_bands:<a,b>`, `sex`, `genotype`.
struct SubgroupRule {
  enum class Kind { marker_le, age_bands, sex, genotype };
  Kind kind = Kind::sex;
  double threshold = 0.0;               // marker_le
  double age_low = 0.0, age_high = 0.0;  // age_bands

  static SubgroupRule parse(std::string_view text);
  std::vector<std::string> labels() const;
  std::string label_of(const LongitudinalCohort& cohort, std::size_t patient, std::string_view marker_name) const;
};

struct SubgroupCurve {
  std::string label;
  std::size_t patients = 0;
  std::size_t deaths = 0;
  std::optional<AccuracyCurve> curve;  // empty when unavailable
  std::string note;
};

/// Splits the cohort by `rule` and builds each curve with risk sets formed
/// inside the subgroup. Empty subgroups are omitted; subgroups without an
/// evaluable death come back without a curve.
std::vector<SubgroupCurve> subgroup_curves(const LongitudinalCohort& cohort, const SubgroupRule& rule,
                                           std::string_view marker_name, const CurveBuilder& builder);

/// Patients of each subgroup, in label order, skipping empty ones.
std::vector<std::pair<std::string, std::vector<std::size_t>>> split_by_rule(const LongitudinalCohort& cohort,
                                                                            const SubgroupRule& rule,
                                                                            std::string_view marker_name);

void write_curve_csv(const AccuracyCurve& curve, std::ostream& out);
AccuracyCurve read_curve_csv(std::istream& in, std::string_view source);
void write_comparison_csv(const UpdateComparisonTable& table, std::ostream& out);

}  // namespace dynroc
