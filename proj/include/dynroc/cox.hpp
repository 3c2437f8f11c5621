#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dynroc/partial_likelihood.hpp"
#include "dynroc/registry.hpp"
#include "dynroc/spline.hpp"

namespace dynroc {

enum class Encoding { spline, linear, indicators };

struct Term {
  std::string covariate;
  Encoding encoding = Encoding::linear;
  int df = 4;  // spline terms only

  friend bool operator==(const Term&, const Term&) = default;
};

/// Terms of a Cox model. The covariate named `marker_name` is read from the
/// marker series; every other name is a patient-record field.
struct ModelSpec {
  std::vector<Term> terms;
  std::string marker_name;

  /// Marker-only model: one spline(df) term.
  static ModelSpec base(std::string marker_name, int df = 4);
  /// Marker, age, sex, weight percentile, pancreatic status and the two
  /// culture statuses.
  static ModelSpec multivariate(std::string marker_name, int df = 4);

  void validate() const;
};

/// Numeric covariates hold doubles; categorical ones hold their level token.
using CovariateValue = std::variant<double, std::string>;
using Covariates = std::map<std::string, CovariateValue, std::less<>>;

/// Every non-missing baseline covariate of patient `index`, with the marker
/// taken from its time-0 value.
Covariates baseline_covariates(const LongitudinalCohort& cohort, std::size_t index, std::string_view marker_name);

/// A term with its data-dependent encoding fixed at fit time.
struct TermDesign {
  Term term;
  std::optional<SplineBasis> basis;  // spline terms
  std::vector<std::string> levels;   // indicator terms, reference level excluded
  std::string reference;             // indicator terms

  int width() const;
};

struct CoxFit {
  std::string marker_name;
  std::vector<TermDesign> terms;
  std::vector<std::string> column_names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd centering;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
  double log_partial_likelihood = 0.0;
  double null_log_partial_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  TieMethod ties = TieMethod::efron;
  std::size_t subjects = 0;
  std::size_t events = 0;
};

struct CoxOptions {
  TieMethod ties = TieMethod::efron;
  int max_iterations = 25;
  double relative_loglik_tolerance = 1e-9;
  double score_tolerance = 1e-8;
  double separation_bound = 15.0;
};

/// Newton-Raphson solution of the partial-likelihood equations on a raw
/// design matrix. Columns are centered internally.
CoxFit fit_cox_design(const Eigen::MatrixXd& design, std::span<const double> time, std::span<const bool> died,
                      std::vector<std::string> column_names, const CoxOptions& options = {});

/// Indices of patients with every covariate `spec` needs.
std::vector<std::size_t> complete_cases(const LongitudinalCohort& cohort, const ModelSpec& spec);

/// Fits `spec` on the baseline covariates of the complete cases of `cohort`.
CoxFit fit_cox(const LongitudinalCohort& cohort, const ModelSpec& spec, const CoxOptions& options = {});

/// Design row of `covariates` under the fitted encodings, uncentered.
Eigen::VectorXd design_row(const CoxFit& fit, const Covariates& covariates);

/// beta' (design_row - centering); larger means higher predicted risk.
double linear_predictor(const CoxFit& fit, const Covariates& covariates);

struct PatientScore {
  std::string patient_id;
  double score = 0.0;
};

struct CrossValidatedScores {
  std::vector<PatientScore> scores;          // complete cases, cohort order
  std::vector<std::size_t> cohort_index;     // cohort row of each score
  std::vector<int> fold;                     // fold of each score
  std::vector<std::vector<std::size_t>> training;  // cohort rows used to fit fold f
  std::size_t excluded_incomplete = 0;
};

/// Each complete case is scored by the model fitted without its fold.
/// Folds are a seeded uniform random partition; fits may run in parallel.
CrossValidatedScores cv_baseline_scores(const LongitudinalCohort& cohort, const ModelSpec& spec, int folds,
                                        std::uint64_t seed, unsigned threads = 1, const CoxOptions& options = {});

/// Risk score trajectory of one patient, strictly increasing in time.
struct ScoreSeries {
  std::string patient_id;
  std::vector<double> times;
  std::vector<double> scores;

  friend bool operator==(const ScoreSeries&, const ScoreSeries&) = default;
};

/// Re-evaluates the fitted model at each schedule time up to the patient's
/// outcome, substituting the LOCF marker value and holding the other
/// covariates at baseline.
std::vector<ScoreSeries> time_varying_scores(const CoxFit& fit, const LongitudinalCohort& cohort,
                                             std::span<const double> schedule);

/// Constant series at time 0 from each patient's baseline covariates.
std::vector<ScoreSeries> baseline_scores(const CoxFit& fit, const LongitudinalCohort& cohort);

void write_score_csv(std::span<const ScoreSeries> series, std::ostream& out);
std::vector<ScoreSeries> read_score_csv(std::istream& in, std::string_view source);

std::string fit_to_json(const CoxFit& fit);
CoxFit fit_from_json(std::string_view text);

}  // namespace dynroc
