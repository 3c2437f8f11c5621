#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dynroc {

enum class Sex { female, male };
enum class Race { white, african_american, other };
enum class Genotype { f508_homozygous, f508_heterozygous, other, missing };
enum class CultureStatus { yes, no, not_cultured };
enum class Event { death, censored };

/// Baseline demographics and follow-up for one registry patient. Times are
/// years from the cohort baseline date.
struct PatientRecord {
  std::string patient_id;
  double baseline_age = 0.0;
  Sex sex = Sex::female;
  Race race = Race::white;
  Genotype genotype = Genotype::missing;
  std::optional<double> weight_pct;
  std::optional<double> height_pct;
  CultureStatus staph_status = CultureStatus::no;
  CultureStatus cepacia_status = CultureStatus::no;
  std::optional<bool> pancreatic_insufficient;
  std::optional<double> death_time;
  std::optional<double> transplant_time;
  double last_followup_time = 0.0;

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct MarkerObservation {
  double time = 0.0;
  std::optional<double> value;  // empty: measurement missing at this visit

  friend bool operator==(const MarkerObservation&, const MarkerObservation&) = default;
};

/// Time-stamped measurements of one marker for one patient, strictly
/// increasing in time.
struct MarkerSeries {
  std::string patient_id;
  std::string marker_name;
  std::vector<MarkerObservation> observations;

  /// Last non-missing value observed at or before `t`.
  std::optional<double> value_at(double t) const;

  friend bool operator==(const MarkerSeries&, const MarkerSeries&) = default;
};

struct SurvivalOutcome {
  std::string patient_id;
  double time = 0.0;
  Event event = Event::censored;

  friend bool operator==(const SurvivalOutcome&, const SurvivalOutcome&) = default;
};

/// Derives the analysis outcome: transplant censors, and wins a same-day tie
/// with death.
SurvivalOutcome derive_outcome(const PatientRecord& patient);

struct ExclusionReport {
  std::size_t excluded = 0;
  std::size_t excluded_under_age = 0;  // baseline age < 5.5 among the excluded

  friend bool operator==(const ExclusionReport&, const ExclusionReport&) = default;
};

/// Immutable patient collection with aligned outcomes: `outcomes()[i]`
/// belongs to `patients()[i]`. Marker series reference patients by id.
class LongitudinalCohort {
 public:
  LongitudinalCohort() = default;
  LongitudinalCohort(std::vector<PatientRecord> patients, std::vector<MarkerSeries> markers,
                     ExclusionReport exclusions = {});

  std::size_t size() const { return patients_.size(); }
  bool empty() const { return patients_.empty(); }

  const std::vector<PatientRecord>& patients() const { return patients_; }
  const std::vector<SurvivalOutcome>& outcomes() const { return outcomes_; }
  const std::vector<MarkerSeries>& markers() const { return markers_; }
  const ExclusionReport& exclusions() const { return exclusions_; }

  std::optional<std::size_t> index_of(std::string_view patient_id) const;

  /// Series of `marker_name` for patient `index`, or nullptr.
  const MarkerSeries* series(std::size_t index, std::string_view marker_name) const;

  /// Indices into markers() of every series belonging to patient `index`.
  std::span<const std::size_t> series_of(std::size_t index) const { return series_by_patient_.at(index); }

  std::size_t death_count() const;

  /// Patients at `indices` (unique), keeping their markers.
  LongitudinalCohort subset(std::span<const std::size_t> indices) const;

  /// Patients at `indices`, duplicates allowed. Draw j is renamed
  /// "<id>@<j>" so ids stay unique.
  LongitudinalCohort resample(std::span<const std::size_t> indices) const;

  friend bool operator==(const LongitudinalCohort& a, const LongitudinalCohort& b) {
    return a.patients_ == b.patients_ && a.markers_ == b.markers_ && a.outcomes_ == b.outcomes_;
  }

 private:
  std::vector<PatientRecord> patients_;
  std::vector<SurvivalOutcome> outcomes_;
  std::vector<MarkerSeries> markers_;
  std::vector<std::vector<std::size_t>> series_by_patient_;
  ExclusionReport exclusions_;
};

struct LoadOptions {
  /// When set, time fields may also be ISO dates (YYYY-MM-DD), converted to
  /// years after this date using day counts / 365.25.
  std::optional<std::chrono::year_month_day> baseline_date;
};

double years_between(std::chrono::year_month_day from, std::chrono::year_month_day to);

LongitudinalCohort load_cohort(const std::string& patients_path, const std::string& records_path,
                               const LoadOptions& options = {});
LongitudinalCohort read_cohort(std::istream& patients, std::istream& records, const LoadOptions& options = {});

void write_cohort(const LongitudinalCohort& cohort, std::ostream& patients, std::ostream& records);
void write_cohort(const LongitudinalCohort& cohort, const std::string& patients_path,
                  const std::string& records_path);

/// Drops patients lacking a non-missing `marker_name` value at time 0.
LongitudinalCohort build_analysis_cohort(const LongitudinalCohort& cohort, std::string_view marker_name);

/// Evaluates the series on `schedule` by last observation carried forward.
/// Scheduled times before the first non-missing value stay missing.
MarkerSeries locf_impute(const MarkerSeries& series, std::span<const double> schedule);

std::string_view to_string(Sex value);
std::string_view to_string(Race value);
std::string_view to_string(Genotype value);
std::string_view to_string(CultureStatus value);

}  // namespace dynroc
