#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dynroc/registry.hpp"

namespace dynroc {

struct MarkerDistribution {
  enum class Kind { normal, uniform };
  Kind kind = Kind::normal;
  double first = 0.0;   // mean, or lower bound
  double second = 1.0;  // sd, or upper bound

  static MarkerDistribution normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
  static MarkerDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
};

/// Generative law: M(k+1) = M(k) + drift + noise_sd * Z on the annual grid,
/// death hazard baseline_hazard * exp(log_hazard_slope * M(t)) with M held
/// constant within each year, exponential censoring and an administrative
/// horizon.
struct SimConfig {
  std::size_t n_patients = 1000;
  MarkerDistribution baseline_marker = MarkerDistribution::normal(70.0, 25.0);
  double drift_per_year = -2.0;
  double noise_sd = 0.0;
  double log_hazard_slope = -0.04;
  double baseline_hazard = 0.5;
  double censor_rate = 0.02;
  double admin_horizon = 20.0;
  std::uint64_t seed = 1;
  std::string marker_name = "fev1";

  void validate() const;
};

/// Deterministic in the config; patient i draws from its own substream, so
/// the result does not depend on `threads`.
LongitudinalCohort simulate_cohort(const SimConfig& config, unsigned threads = 1);

enum class MarkerView { current, baseline };

struct OracleCurve {
  std::vector<double> grid;
  std::vector<double> true_auc;
  std::vector<std::size_t> cases;
  std::vector<bool> flagged;  // fewer than 100 Monte-Carlo cases
  std::size_t mc_samples = 0;
};

struct OracleOptions {
  double time_tolerance = 0.05;
  MarkerView view = MarkerView::current;
  std::uint64_t stream = 0x6d635f6f7261636cULL;  // mixed into the config seed
};

/// Monte-Carlo incident AUC: among mc_n uncensored subjects from the config's
/// law, deaths within +-tolerance of t are compared with survivors beyond t
/// on the risk-oriented marker sign(beta) * M (mid-rank ties).
OracleCurve mc_true_auc(const SimConfig& config, std::span<const double> grid, std::size_t mc_n,
                        const OracleOptions& options = {});

}  // namespace dynroc
