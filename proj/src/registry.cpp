#include "dynroc/registry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "dynroc/csv.hpp"
#include "dynroc/error.hpp"

namespace dynroc {

namespace {

constexpr std::array<std::string_view, 13> kPatientColumns = {
    "patient_id", "baseline_age",   "sex",     "race",  "genotype",
    "weight_pct", "height_pct",     "staph_status",     "cepacia_status",
    "pancreatic_insufficient",      "death_time",       "transplant_time",
    "last_followup_time"};

constexpr std::array<std::string_view, 4> kRecordColumns = {"patient_id", "time", "marker_name", "value"};

constexpr double kUnderAgeCutoff = 5.5;

[[noreturn]] void row_error(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::schema, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

template <std::size_t N>
std::array<std::size_t, N> map_columns(const csv::Table& table, const std::array<std::string_view, N>& expected,
                                       std::string_view source) {
  for (const auto& name : table.header) {
    if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
      throw Error(ErrorKind::schema, std::string(source) + ": unknown column '" + name + "'");
    }
  }
  std::array<std::size_t, N> index{};
  for (std::size_t i = 0; i < N; ++i) {
    const auto col = table.column(expected[i]);
    if (!col) throw Error(ErrorKind::schema, std::string(source) + ": missing column '" + std::string(expected[i]) + "'");
    index[i] = *col;
  }
  return index;
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values, std::string_view column,
                std::string_view source, std::size_t line) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  row_error(source, line, "invalid " + std::string(column) + " '" + std::string(text) + "'");
}

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::sscanf(std::string(text).c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) return std::nullopt;
  std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

struct FieldParser {
  std::string_view source;
  std::size_t line;
  const LoadOptions& options;

  std::optional<double> number(std::string_view text, std::string_view column) const {
    if (text.empty()) return std::nullopt;
    auto value = csv::parse_double(text);
    if (!value || !std::isfinite(*value)) row_error(source, line, "unparseable " + std::string(column) + " '" + std::string(text) + "'");
    return value;
  }

  std::optional<double> time(std::string_view text, std::string_view column) const {
    if (text.empty()) return std::nullopt;
    if (options.baseline_date) {
      if (auto date = parse_iso_date(text)) return years_between(*options.baseline_date, *date);
    }
    return number(text, column);
  }

  double required(std::optional<double> value, std::string_view column) const {
    if (!value) row_error(source, line, "missing required " + std::string(column));
    return *value;
  }
};

PatientRecord parse_patient(const std::vector<std::string>& row, const std::array<std::size_t, 13>& col,
                            const FieldParser& p) {
  PatientRecord r;
  auto field = [&](std::size_t i) -> std::string_view { return row[col[i]]; };
  r.patient_id = field(0);
  if (r.patient_id.empty()) row_error(p.source, p.line, "empty patient_id");
  r.baseline_age = p.required(p.number(field(1), "baseline_age"), "baseline_age");
  r.sex = parse_enum(field(2), std::array{Sex::female, Sex::male}, "sex", p.source, p.line);
  r.race = parse_enum(field(3), std::array{Race::white, Race::african_american, Race::other}, "race", p.source, p.line);
  r.genotype = field(4).empty()
                   ? Genotype::missing
                   : parse_enum(field(4),
                                std::array{Genotype::f508_homozygous, Genotype::f508_heterozygous, Genotype::other,
                                           Genotype::missing},
                                "genotype", p.source, p.line);
  r.weight_pct = p.number(field(5), "weight_pct");
  r.height_pct = p.number(field(6), "height_pct");
  constexpr std::array cultures{CultureStatus::yes, CultureStatus::no, CultureStatus::not_cultured};
  r.staph_status = parse_enum(field(7), cultures, "staph_status", p.source, p.line);
  r.cepacia_status = parse_enum(field(8), cultures, "cepacia_status", p.source, p.line);
  const auto pancreatic = field(9);
  if (pancreatic == "true" || pancreatic == "1") {
    r.pancreatic_insufficient = true;
  } else if (pancreatic == "false" || pancreatic == "0") {
    r.pancreatic_insufficient = false;
  } else if (!pancreatic.empty()) {
    row_error(p.source, p.line, "invalid pancreatic_insufficient '" + std::string(pancreatic) + "'");
  }
  r.death_time = p.time(field(10), "death_time");
  r.transplant_time = p.time(field(11), "transplant_time");
  r.last_followup_time = p.required(p.time(field(12), "last_followup_time"), "last_followup_time");

  if (r.baseline_age < 0) row_error(p.source, p.line, "negative baseline_age");
  for (auto pct : {r.weight_pct, r.height_pct}) {
    if (pct && (*pct < 0 || *pct > 100)) row_error(p.source, p.line, "percentile outside [0,100]");
  }
  if (r.last_followup_time < 0) row_error(p.source, p.line, "negative last_followup_time");
  if (r.death_time && *r.death_time > r.last_followup_time) row_error(p.source, p.line, "death_time after last_followup_time");
  if (r.transplant_time && *r.transplant_time > r.last_followup_time) {
    row_error(p.source, p.line, "transplant_time after last_followup_time");
  }
  if (!(derive_outcome(r).time > 0)) row_error(p.source, p.line, "outcome time must be positive");
  return r;
}

std::string optional_number(const std::optional<double>& value) {
  return value ? csv::format_double(*value) : std::string();
}

}  // namespace

std::string_view to_string(Sex value) { return value == Sex::female ? "female" : "male"; }

std::string_view to_string(Race value) {
  switch (value) {
    case Race::white: return "white";
    case Race::african_american: return "african_american";
    case Race::other: return "other";
  }
  return "";
}

std::string_view to_string(Genotype value) {
  switch (value) {
    case Genotype::f508_homozygous: return "f508_homozygous";
    case Genotype::f508_heterozygous: return "f508_heterozygous";
    case Genotype::other: return "other";
    case Genotype::missing: return "missing";
  }
  return "";
}

std::string_view to_string(CultureStatus value) {
  switch (value) {
    case CultureStatus::yes: return "yes";
    case CultureStatus::no: return "no";
    case CultureStatus::not_cultured: return "not_cultured";
  }
  return "";
}

std::optional<double> MarkerSeries::value_at(double t) const {
  std::optional<double> last;
  for (const auto& obs : observations) {
    if (obs.time > t) break;
    if (obs.value) last = obs.value;
  }
  return last;
}

SurvivalOutcome derive_outcome(const PatientRecord& patient) {
  SurvivalOutcome out{patient.patient_id, patient.last_followup_time, Event::censored};
  if (patient.death_time && (!patient.transplant_time || *patient.transplant_time > *patient.death_time)) {
    out.time = *patient.death_time;
    out.event = Event::death;
  } else if (patient.transplant_time) {
    out.time = std::min(*patient.transplant_time, patient.last_followup_time);
  }
  return out;
}

LongitudinalCohort::LongitudinalCohort(std::vector<PatientRecord> patients, std::vector<MarkerSeries> markers,
                                       ExclusionReport exclusions)
    : patients_(std::move(patients)), markers_(std::move(markers)), exclusions_(exclusions) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(patients_.size());
  outcomes_.reserve(patients_.size());
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    if (!index.emplace(patients_[i].patient_id, i).second) {
      throw Error(ErrorKind::schema, "duplicate patient_id '" + patients_[i].patient_id + "'");
    }
    outcomes_.push_back(derive_outcome(patients_[i]));
  }
  series_by_patient_.resize(patients_.size());
  for (std::size_t s = 0; s < markers_.size(); ++s) {
    const auto& series = markers_[s];
    const auto it = index.find(series.patient_id);
    if (it == index.end()) {
      throw Error(ErrorKind::schema, "marker series references unknown patient_id '" + series.patient_id + "'");
    }
    for (std::size_t k = 1; k < series.observations.size(); ++k) {
      if (!(series.observations[k].time > series.observations[k - 1].time)) {
        throw Error(ErrorKind::schema, "marker '" + series.marker_name + "' times not strictly increasing for patient '" +
                                           series.patient_id + "'");
      }
    }
    for (std::size_t other : series_by_patient_[it->second]) {
      if (markers_[other].marker_name == series.marker_name) {
        throw Error(ErrorKind::schema, "duplicate marker series '" + series.marker_name + "' for patient '" +
                                           series.patient_id + "'");
      }
    }
    series_by_patient_[it->second].push_back(s);
  }
}

std::optional<std::size_t> LongitudinalCohort::index_of(std::string_view patient_id) const {
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    if (patients_[i].patient_id == patient_id) return i;
  }
  return std::nullopt;
}

const MarkerSeries* LongitudinalCohort::series(std::size_t index, std::string_view marker_name) const {
  for (std::size_t s : series_by_patient_.at(index)) {
    if (markers_[s].marker_name == marker_name) return &markers_[s];
  }
  return nullptr;
}

std::size_t LongitudinalCohort::death_count() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes_.begin(), outcomes_.end(), [](const auto& o) { return o.event == Event::death; }));
}

LongitudinalCohort LongitudinalCohort::subset(std::span<const std::size_t> indices) const {
  std::vector<PatientRecord> patients;
  std::vector<MarkerSeries> markers;
  patients.reserve(indices.size());
  for (std::size_t i : indices) {
    patients.push_back(patients_.at(i));
    for (std::size_t s : series_by_patient_[i]) markers.push_back(markers_[s]);
  }
  return LongitudinalCohort(std::move(patients), std::move(markers), exclusions_);
}

LongitudinalCohort LongitudinalCohort::resample(std::span<const std::size_t> indices) const {
  std::vector<PatientRecord> patients;
  std::vector<MarkerSeries> markers;
  patients.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t i = indices[j];
    const std::string id = patients_.at(i).patient_id + "@" + std::to_string(j);
    patients.push_back(patients_[i]);
    patients.back().patient_id = id;
    for (std::size_t s : series_by_patient_[i]) {
      markers.push_back(markers_[s]);
      markers.back().patient_id = id;
    }
  }
  return LongitudinalCohort(std::move(patients), std::move(markers), exclusions_);
}

double years_between(std::chrono::year_month_day from, std::chrono::year_month_day to) {
  const auto days = (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
  return static_cast<double>(days) / 365.25;
}

LongitudinalCohort read_cohort(std::istream& patients_in, std::istream& records_in, const LoadOptions& options) {
  const auto patients_table = csv::read(patients_in, "patients.csv");
  const auto records_table = csv::read(records_in, "records.csv");
  const auto pcol = map_columns(patients_table, kPatientColumns, "patients.csv");
  const auto rcol = map_columns(records_table, kRecordColumns, "records.csv");

  std::vector<PatientRecord> patients;
  std::unordered_map<std::string, std::size_t> index;
  patients.reserve(patients_table.rows.size());
  for (std::size_t r = 0; r < patients_table.rows.size(); ++r) {
    FieldParser parser{"patients.csv", patients_table.line[r], options};
    auto patient = parse_patient(patients_table.rows[r], pcol, parser);
    if (!index.emplace(patient.patient_id, patients.size()).second) {
      row_error("patients.csv", patients_table.line[r], "duplicate patient_id '" + patient.patient_id + "'");
    }
    patients.push_back(std::move(patient));
  }

  // Series keyed by (patient index, marker name) so output order follows
  // the patients file.
  std::map<std::pair<std::size_t, std::string>, MarkerSeries> grouped;
  for (std::size_t r = 0; r < records_table.rows.size(); ++r) {
    const auto& row = records_table.rows[r];
    const std::size_t line = records_table.line[r];
    FieldParser parser{"records.csv", line, options};
    const auto& id = row[rcol[0]];
    const auto it = index.find(id);
    if (it == index.end()) row_error("records.csv", line, "unknown patient_id '" + id + "'");
    const double time = parser.required(parser.time(row[rcol[1]], "time"), "time");
    const auto& marker = row[rcol[2]];
    if (marker.empty()) row_error("records.csv", line, "empty marker_name");
    auto& series = grouped[{it->second, marker}];
    series.patient_id = id;
    series.marker_name = marker;
    if (!series.observations.empty() && !(time > series.observations.back().time)) {
      row_error("records.csv", line, "times not strictly increasing for patient '" + id + "', marker '" + marker + "'");
    }
    series.observations.push_back({time, parser.number(row[rcol[3]], "value")});
  }

  std::vector<MarkerSeries> markers;
  markers.reserve(grouped.size());
  for (auto& [key, series] : grouped) markers.push_back(std::move(series));
  return LongitudinalCohort(std::move(patients), std::move(markers));
}

LongitudinalCohort load_cohort(const std::string& patients_path, const std::string& records_path,
                               const LoadOptions& options) {
  std::ifstream patients(patients_path);
  if (!patients) throw Error(ErrorKind::io, "cannot open '" + patients_path + "'");
  std::ifstream records(records_path);
  if (!records) throw Error(ErrorKind::io, "cannot open '" + records_path + "'");
  return read_cohort(patients, records, options);
}

void write_cohort(const LongitudinalCohort& cohort, std::ostream& patients, std::ostream& records) {
  patients << csv::join({kPatientColumns.begin(), kPatientColumns.end()}) << '\n';
  for (const auto& p : cohort.patients()) {
    std::string pancreatic;
    if (p.pancreatic_insufficient) pancreatic = *p.pancreatic_insufficient ? "true" : "false";
    patients << csv::join({p.patient_id, csv::format_double(p.baseline_age), std::string(to_string(p.sex)),
                           std::string(to_string(p.race)), std::string(to_string(p.genotype)),
                           optional_number(p.weight_pct), optional_number(p.height_pct),
                           std::string(to_string(p.staph_status)), std::string(to_string(p.cepacia_status)), pancreatic,
                           optional_number(p.death_time), optional_number(p.transplant_time),
                           csv::format_double(p.last_followup_time)})
             << '\n';
  }
  records << csv::join({kRecordColumns.begin(), kRecordColumns.end()}) << '\n';
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t s : cohort.series_of(i)) {
      const auto& series = cohort.markers()[s];
      for (const auto& obs : series.observations) {
        records << csv::join({series.patient_id, csv::format_double(obs.time), series.marker_name,
                              optional_number(obs.value)})
                << '\n';
      }
    }
  }
}

void write_cohort(const LongitudinalCohort& cohort, const std::string& patients_path,
                  const std::string& records_path) {
  std::ofstream patients(patients_path);
  if (!patients) throw Error(ErrorKind::io, "cannot write '" + patients_path + "'");
  std::ofstream records(records_path);
  if (!records) throw Error(ErrorKind::io, "cannot write '" + records_path + "'");
  write_cohort(cohort, patients, records);
  if (!patients || !records) throw Error(ErrorKind::io, "write failed for cohort files");
}

LongitudinalCohort build_analysis_cohort(const LongitudinalCohort& cohort, std::string_view marker_name) {
  std::vector<std::size_t> keep;
  ExclusionReport report;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto* series = cohort.series(i, marker_name);
    const bool has_baseline = series && !series->observations.empty() && series->observations.front().time == 0.0 &&
                              series->observations.front().value.has_value();
    if (has_baseline) {
      keep.push_back(i);
    } else {
      ++report.excluded;
      if (cohort.patients()[i].baseline_age < kUnderAgeCutoff) ++report.excluded_under_age;
    }
  }
  if (keep.empty()) {
    throw Error(ErrorKind::empty_cohort, "no patient has a baseline '" + std::string(marker_name) + "' measurement");
  }
  auto retained = cohort.subset(keep);
  return LongitudinalCohort(retained.patients(), retained.markers(), report);
}

MarkerSeries locf_impute(const MarkerSeries& series, std::span<const double> schedule) {
  if (series.observations.empty()) {
    throw Error(ErrorKind::invalid_argument, "cannot impute empty marker series for patient '" + series.patient_id + "'");
  }
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (!(schedule[k] > schedule[k - 1])) throw Error(ErrorKind::invalid_argument, "schedule must be strictly increasing");
  }
  MarkerSeries out{series.patient_id, series.marker_name, {}};
  out.observations.reserve(schedule.size());
  std::size_t next = 0;
  std::optional<double> last;
  for (double t : schedule) {
    while (next < series.observations.size() && series.observations[next].time <= t) {
      if (series.observations[next].value) last = series.observations[next].value;
      ++next;
    }
    out.observations.push_back({t, last});
  }
  return out;
}

}  // namespace dynroc
