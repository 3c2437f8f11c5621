#include "dynroc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "dynroc/error.hpp"
#include "dynroc/parallel.hpp"
#include "dynroc/random.hpp"

namespace dynroc {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr double kOpenEndedCap = 1000.0;  // years simulated when nothing else stops follow-up

struct SubjectPath {
  double death = kInfinity;
  std::vector<double> marker;  // value on [k, k+1)
};

double draw_baseline(const MarkerDistribution& dist, std::mt19937_64& rng) {
  if (dist.kind == MarkerDistribution::Kind::normal) return std::normal_distribution<double>(dist.first, dist.second)(rng);
  return std::uniform_real_distribution<double>(dist.first, dist.second)(rng);
}

// Exact piecewise-exponential death time on the annual grid, simulated until
// death or `stop`.
SubjectPath draw_path(const SimConfig& config, double baseline, double stop, std::mt19937_64& rng) {
  SubjectPath path;
  std::normal_distribution<double> noise(0.0, 1.0);
  const double target = std::exponential_distribution<double>(1.0)(rng);
  double cumulative = 0.0;
  double marker = baseline;
  for (std::size_t k = 0;; ++k) {
    const double start = static_cast<double>(k);
    if (start >= stop) break;
    path.marker.push_back(marker);
    const double hazard = config.baseline_hazard * std::exp(config.log_hazard_slope * marker);
    if (hazard > 0.0 && cumulative + hazard >= target) {
      path.death = start + (target - cumulative) / hazard;
      break;
    }
    cumulative += hazard;
    const double innovation = config.noise_sd > 0.0 ? config.noise_sd * noise(rng) : 0.0;
    marker += config.drift_per_year + innovation;
  }
  return path;
}

template <typename T>
T pick(std::mt19937_64& rng, std::span<const double> weights, std::span<const T> values) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    acc += weights[k];
    if (u < acc) return values[k];
  }
  return values.back();
}

struct SimulatedPatient {
  PatientRecord record;
  MarkerSeries series;
};

SimulatedPatient simulate_patient(const SimConfig& config, std::size_t index, int id_width) {
  std::mt19937_64 rng(substream_seed(config.seed, index));
  SimulatedPatient out;
  auto& r = out.record;
  char id[32];
  std::snprintf(id, sizeof(id), "P%0*zu", id_width, index + 1);
  r.patient_id = id;

  const double baseline = draw_baseline(config.baseline_marker, rng);
  const double censor = config.censor_rate > 0.0 ? std::exponential_distribution<double>(config.censor_rate)(rng) : kInfinity;

  // Auxiliary covariates carry no effect on survival.
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> percentile(0.0, 100.0);
  r.baseline_age = std::max(0.5, 18.0 + 9.0 * std_normal(rng));
  r.sex = pick<Sex>(rng, std::array{0.46, 0.54}, std::array{Sex::female, Sex::male});
  r.race = pick<Race>(rng, std::array{0.96, 0.03, 0.01}, std::array{Race::white, Race::african_american, Race::other});
  r.genotype = pick<Genotype>(rng, std::array{0.39, 0.28, 0.08, 0.25},
                              std::array{Genotype::f508_homozygous, Genotype::f508_heterozygous, Genotype::other,
                                         Genotype::missing});
  r.weight_pct = percentile(rng);
  r.height_pct = percentile(rng);
  constexpr std::array cultures{CultureStatus::yes, CultureStatus::no, CultureStatus::not_cultured};
  r.staph_status = pick<CultureStatus>(rng, std::array{0.27, 0.62, 0.11}, cultures);
  r.cepacia_status = pick<CultureStatus>(rng, std::array{0.03, 0.86, 0.11}, cultures);
  r.pancreatic_insufficient = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.85;

  double stop = std::min(censor, config.admin_horizon);
  if (!std::isfinite(stop)) stop = kOpenEndedCap;
  const auto path = draw_path(config, baseline, stop, rng);
  if (path.death <= stop) {
    r.death_time = path.death;
    r.last_followup_time = path.death;
  } else {
    r.last_followup_time = stop;
  }

  out.series.patient_id = r.patient_id;
  out.series.marker_name = config.marker_name;
  for (std::size_t k = 0; k < path.marker.size(); ++k) {
    const double t = static_cast<double>(k);
    if (t > r.last_followup_time) break;
    out.series.observations.push_back({t, path.marker[k]});
  }
  return out;
}

double marker_at(const SubjectPath& path, double t) {
  const auto k = static_cast<std::size_t>(std::floor(t));
  return path.marker[std::min(k, path.marker.size() - 1)];
}

}  // namespace

void SimConfig::validate() const {
  if (n_patients < 2) throw Error(ErrorKind::invalid_argument, "simulation needs at least 2 patients");
  if (!(baseline_hazard > 0.0) || !std::isfinite(baseline_hazard)) throw Error(ErrorKind::invalid_argument, "baseline hazard must be positive");
  if (!(admin_horizon > 0.0)) throw Error(ErrorKind::invalid_argument, "administrative horizon must be positive");
  if (!(noise_sd >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise sd must be non-negative");
  if (!(censor_rate >= 0.0)) throw Error(ErrorKind::invalid_argument, "censoring rate must be non-negative");
  if (!std::isfinite(log_hazard_slope) || !std::isfinite(drift_per_year)) {
    throw Error(ErrorKind::invalid_argument, "slope and drift must be finite");
  }
  const bool normal = baseline_marker.kind == MarkerDistribution::Kind::normal;
  if (normal ? !(baseline_marker.second >= 0.0) : !(baseline_marker.first < baseline_marker.second)) {
    throw Error(ErrorKind::invalid_argument, "invalid baseline marker distribution");
  }
  if (marker_name.empty()) throw Error(ErrorKind::invalid_argument, "marker name must be non-empty");
}

LongitudinalCohort simulate_cohort(const SimConfig& config, unsigned threads) {
  config.validate();
  const int width = std::max(6, static_cast<int>(std::to_string(config.n_patients).size()));
  std::vector<SimulatedPatient> patients(config.n_patients);
  parallel_for(config.n_patients, threads, [&](std::size_t i) { patients[i] = simulate_patient(config, i, width); });
  std::vector<PatientRecord> records;
  std::vector<MarkerSeries> series;
  records.reserve(patients.size());
  series.reserve(patients.size());
  for (auto& p : patients) {
    records.push_back(std::move(p.record));
    series.push_back(std::move(p.series));
  }
  return LongitudinalCohort(std::move(records), std::move(series));
}

OracleCurve mc_true_auc(const SimConfig& config, std::span<const double> grid, std::size_t mc_n,
                        const OracleOptions& options) {
  config.validate();
  if (mc_n < 100000) throw Error(ErrorKind::invalid_argument, "oracle needs at least 1e5 Monte-Carlo subjects");
  const double orientation = config.log_hazard_slope < 0.0 ? -1.0 : 1.0;
  const double last = grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end());
  const double stop = std::min(config.admin_horizon, last + options.time_tolerance + 1.0);
  const std::uint64_t master = substream_seed(config.seed, options.stream);

  const auto subject = [&](std::size_t i) {
    std::mt19937_64 rng(substream_seed(master, i));
    const double baseline = draw_baseline(config.baseline_marker, rng);
    return draw_path(config, baseline, stop, rng);
  };
  const auto score = [&](const SubjectPath& path, double t) {
    return orientation * (options.view == MarkerView::baseline ? path.marker.front() : marker_at(path, t));
  };

  // First pass: case scores per grid point. Second pass: each survivor counts
  // the cases above it, so memory stays proportional to the cases.
  std::vector<std::vector<double>> cases(grid.size());
  for (std::size_t i = 0; i < mc_n; ++i) {
    const auto path = subject(i);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (std::abs(path.death - grid[g]) <= options.time_tolerance && grid[g] <= config.admin_horizon) {
        cases[g].push_back(score(path, path.death));
      }
    }
  }
  for (auto& c : cases) std::sort(c.begin(), c.end());

  std::vector<double> concordant(grid.size(), 0.0);
  std::vector<std::size_t> controls(grid.size(), 0);
  for (std::size_t i = 0; i < mc_n; ++i) {
    const auto path = subject(i);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!(path.death > grid[g]) || cases[g].empty()) continue;
      const double v = score(path, grid[g]);
      const auto lo = std::lower_bound(cases[g].begin(), cases[g].end(), v);
      const auto hi = std::upper_bound(lo, cases[g].end(), v);
      concordant[g] += static_cast<double>(cases[g].end() - hi) + 0.5 * static_cast<double>(hi - lo);
      ++controls[g];
    }
  }

  OracleCurve out;
  out.grid.assign(grid.begin(), grid.end());
  out.mc_samples = mc_n;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double pairs = static_cast<double>(cases[g].size()) * static_cast<double>(controls[g]);
    out.true_auc.push_back(pairs > 0.0 ? concordant[g] / pairs : 0.5);
    out.cases.push_back(cases[g].size());
    out.flagged.push_back(cases[g].size() < 100);
  }
  return out;
}

}  // namespace dynroc
