#include "dynroc/cox.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include "dynroc/csv.hpp"
#include "dynroc/error.hpp"
#include "dynroc/parallel.hpp"

namespace dynroc {

namespace {

struct CategoricalCovariate {
  std::string_view name;
  std::string_view reference;
  std::vector<std::string_view> others;
};

const std::vector<CategoricalCovariate>& categorical_catalog() {
  static const std::vector<CategoricalCovariate> catalog = {
      {"sex", "female", {"male"}},
      {"race", "white", {"african_american", "other"}},
      {"genotype", "f508_homozygous", {"f508_heterozygous", "other", "missing"}},
      {"staph_status", "no", {"yes", "not_cultured"}},
      {"cepacia_status", "no", {"yes", "not_cultured"}},
      {"pancreatic_insufficient", "false", {"true"}},
  };
  return catalog;
}

constexpr std::string_view kNumericFields[] = {"baseline_age", "weight_pct", "height_pct"};

const CategoricalCovariate* find_categorical(std::string_view name) {
  for (const auto& c : categorical_catalog()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool is_numeric(std::string_view name, std::string_view marker_name) {
  return name == marker_name || std::find(std::begin(kNumericFields), std::end(kNumericFields), name) != std::end(kNumericFields);
}

const CovariateValue& require(const Covariates& covariates, std::string_view name) {
  const auto it = covariates.find(name);
  if (it == covariates.end()) throw Error(ErrorKind::invalid_argument, "missing covariate '" + std::string(name) + "'");
  return it->second;
}

double numeric_value(const Covariates& covariates, std::string_view name) {
  const auto& value = require(covariates, name);
  if (const auto* x = std::get_if<double>(&value)) return *x;
  throw Error(ErrorKind::invalid_argument, "covariate '" + std::string(name) + "' must be numeric");
}

const std::string& level_value(const Covariates& covariates, std::string_view name) {
  const auto& value = require(covariates, name);
  if (const auto* x = std::get_if<std::string>(&value)) return *x;
  throw Error(ErrorKind::invalid_argument, "covariate '" + std::string(name) + "' must be categorical");
}

std::vector<std::string> term_columns(const TermDesign& term) {
  std::vector<std::string> names;
  const auto& name = term.term.covariate;
  switch (term.term.encoding) {
    case Encoding::spline:
      for (int k = 1; k <= term.basis->df(); ++k) names.push_back(name + ":ns" + std::to_string(k));
      break;
    case Encoding::linear:
      names.push_back(name);
      break;
    case Encoding::indicators:
      for (const auto& level : term.levels) names.push_back(name + ":" + level);
      break;
  }
  return names;
}

void append_term(const TermDesign& term, const Covariates& covariates, Eigen::VectorXd& row, Eigen::Index& col) {
  const auto& name = term.term.covariate;
  switch (term.term.encoding) {
    case Encoding::spline: {
      const auto values = natural_spline_basis(numeric_value(covariates, name), *term.basis);
      row.segment(col, values.size()) = values;
      col += values.size();
      break;
    }
    case Encoding::linear:
      row(col++) = numeric_value(covariates, name);
      break;
    case Encoding::indicators: {
      // Levels unseen in the training data have no column and score as the
      // reference level.
      const auto& level = level_value(covariates, name);
      for (const auto& l : term.levels) row(col++) = level == l ? 1.0 : 0.0;
      break;
    }
  }
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::spline: return "spline";
    case Encoding::linear: return "linear";
    case Encoding::indicators: return "indicators";
  }
  return "";
}

Encoding parse_encoding(std::string_view text) {
  if (text == "spline") return Encoding::spline;
  if (text == "linear") return Encoding::linear;
  if (text == "indicators") return Encoding::indicators;
  throw Error(ErrorKind::schema, "unknown term encoding '" + std::string(text) + "'");
}

// Index of the first column that is constant or a linear combination of the
// columns before it, if any.
std::optional<Eigen::Index> first_dependent_column(const Eigen::MatrixXd& centered) {
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index j = 0; j < centered.cols(); ++j) {
    Eigen::VectorXd v = centered.col(j);
    const double norm = v.norm();
    if (norm <= 1e-12 * std::sqrt(static_cast<double>(centered.rows()))) return j;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    const double residual = v.norm();
    if (residual <= 1e-9 * norm) return j;
    basis.push_back(v / residual);
  }
  return std::nullopt;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

ModelSpec ModelSpec::base(std::string marker_name, int df) {
  ModelSpec spec;
  spec.marker_name = std::move(marker_name);
  spec.terms.push_back({spec.marker_name, Encoding::spline, df});
  return spec;
}

ModelSpec ModelSpec::multivariate(std::string marker_name, int df) {
  ModelSpec spec = base(std::move(marker_name), df);
  spec.terms.push_back({"baseline_age", Encoding::spline, df});
  spec.terms.push_back({"sex", Encoding::indicators, 0});
  spec.terms.push_back({"weight_pct", Encoding::spline, df});
  spec.terms.push_back({"pancreatic_insufficient", Encoding::indicators, 0});
  spec.terms.push_back({"staph_status", Encoding::indicators, 0});
  spec.terms.push_back({"cepacia_status", Encoding::indicators, 0});
  return spec;
}

void ModelSpec::validate() const {
  if (terms.empty()) throw Error(ErrorKind::invalid_argument, "model needs at least one term");
  if (marker_name.empty()) throw Error(ErrorKind::invalid_argument, "model needs a marker name");
  for (const auto& term : terms) {
    const bool numeric = is_numeric(term.covariate, marker_name);
    const bool categorical = find_categorical(term.covariate) != nullptr;
    if (!numeric && !categorical) throw Error(ErrorKind::invalid_argument, "unknown covariate '" + term.covariate + "'");
    if (term.encoding == Encoding::indicators ? !categorical : !numeric) {
      throw Error(ErrorKind::invalid_argument,
                  "encoding '" + std::string(to_string(term.encoding)) + "' does not fit covariate '" + term.covariate + "'");
    }
    if (term.encoding == Encoding::spline && term.df < 3) {
      throw Error(ErrorKind::invalid_argument, "spline term '" + term.covariate + "' needs df >= 3");
    }
  }
}

int TermDesign::width() const {
  switch (term.encoding) {
    case Encoding::spline: return basis->df();
    case Encoding::linear: return 1;
    case Encoding::indicators: return static_cast<int>(levels.size());
  }
  return 0;
}

Covariates baseline_covariates(const LongitudinalCohort& cohort, std::size_t index, std::string_view marker_name) {
  const auto& p = cohort.patients().at(index);
  Covariates out;
  out["baseline_age"] = p.baseline_age;
  if (p.weight_pct) out["weight_pct"] = *p.weight_pct;
  if (p.height_pct) out["height_pct"] = *p.height_pct;
  out["sex"] = std::string(to_string(p.sex));
  out["race"] = std::string(to_string(p.race));
  out["genotype"] = std::string(to_string(p.genotype));
  out["staph_status"] = std::string(to_string(p.staph_status));
  out["cepacia_status"] = std::string(to_string(p.cepacia_status));
  if (p.pancreatic_insufficient) out["pancreatic_insufficient"] = std::string(*p.pancreatic_insufficient ? "true" : "false");
  if (const auto* series = cohort.series(index, marker_name)) {
    if (auto v = series->value_at(0.0)) out[std::string(marker_name)] = *v;
  }
  return out;
}

CoxFit fit_cox_design(const Eigen::MatrixXd& design, std::span<const double> time, std::span<const bool> died,
                      std::vector<std::string> column_names, const CoxOptions& options) {
  const auto n = static_cast<std::size_t>(design.rows());
  if (time.size() != n || died.size() != n || column_names.size() != static_cast<std::size_t>(design.cols())) {
    throw Error(ErrorKind::invalid_argument, "design, outcome and column-name sizes disagree");
  }
  CoxFit fit;
  fit.ties = options.ties;
  fit.column_names = std::move(column_names);
  fit.subjects = n;
  fit.events = static_cast<std::size_t>(std::count(died.begin(), died.end(), true));
  if (fit.events < 2) {
    throw Error(ErrorKind::insufficient_events, "Cox fit needs at least 2 deaths, found " + std::to_string(fit.events));
  }

  fit.centering = design.colwise().mean().transpose();
  const Eigen::MatrixXd centered = design.rowwise() - fit.centering.transpose();
  if (const auto bad = first_dependent_column(centered)) {
    throw Error(ErrorKind::rank_deficient,
                "design column '" + fit.column_names[static_cast<std::size_t>(*bad)] + "' is constant or collinear");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
  auto current = cox_partial_likelihood(centered, time, died, beta, options.ties);
  fit.null_log_partial_likelihood = current.log_likelihood;
  bool converged = sup_norm(current.score) < options.score_tolerance;

  while (!converged && fit.iterations < options.max_iterations) {
    ++fit.iterations;
    const Eigen::VectorXd step = current.information.ldlt().solve(current.score);
    if (!step.allFinite()) throw Error(ErrorKind::not_converged, "Newton step is not finite");
    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    auto trial = cox_partial_likelihood(centered, time, died, candidate, options.ties);
    for (int halving = 0; halving < 30 && !(trial.log_likelihood >= current.log_likelihood); ++halving) {
      scale *= 0.5;
      candidate = beta + scale * step;
      trial = cox_partial_likelihood(centered, time, died, candidate, options.ties);
    }
    const double change = std::abs(trial.log_likelihood - current.log_likelihood);
    beta = candidate;
    current = std::move(trial);

    Eigen::Index worst = 0;
    if (beta.cwiseAbs().maxCoeff(&worst) > options.separation_bound) {
      throw Error(ErrorKind::separation, "monotone likelihood: coefficient for '" +
                                             fit.column_names[static_cast<std::size_t>(worst)] + "' exceeds " +
                                             csv::format_double(options.separation_bound) + " in magnitude");
    }
    converged = change < options.relative_loglik_tolerance * std::max(1.0, std::abs(current.log_likelihood)) ||
                sup_norm(current.score) < options.score_tolerance;
  }
  if (!converged) {
    throw Error(ErrorKind::not_converged, "Cox fit did not converge in " + std::to_string(options.max_iterations) + " iterations");
  }

  fit.coefficients = beta;
  fit.score = current.score;
  fit.information = current.information;
  fit.log_partial_likelihood = current.log_likelihood;
  fit.converged = true;
  return fit;
}

std::vector<std::size_t> complete_cases(const LongitudinalCohort& cohort, const ModelSpec& spec) {
  std::vector<std::size_t> cases;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto cov = baseline_covariates(cohort, i, spec.marker_name);
    const bool complete = std::all_of(spec.terms.begin(), spec.terms.end(),
                                      [&](const Term& t) { return cov.find(t.covariate) != cov.end(); });
    if (complete) cases.push_back(i);
  }
  return cases;
}

CoxFit fit_cox(const LongitudinalCohort& cohort, const ModelSpec& spec, const CoxOptions& options) {
  spec.validate();
  const auto cases = complete_cases(cohort, spec);
  if (cases.empty()) throw Error(ErrorKind::empty_cohort, "no patient has every covariate the model needs");

  std::vector<Covariates> rows;
  rows.reserve(cases.size());
  for (std::size_t i : cases) rows.push_back(baseline_covariates(cohort, i, spec.marker_name));

  std::vector<TermDesign> terms;
  std::vector<std::string> columns;
  for (const auto& term : spec.terms) {
    TermDesign design{term, std::nullopt, {}, {}};
    if (term.encoding == Encoding::spline) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (const auto& r : rows) values.push_back(numeric_value(r, term.covariate));
      try {
        design.basis = quantile_spline_basis(values, term.df);
      } catch (const Error& e) {
        throw Error(e.kind(), "term '" + term.covariate + "': " + e.what());
      }
    } else if (term.encoding == Encoding::indicators) {
      const auto* catalog = find_categorical(term.covariate);
      design.reference = catalog->reference;
      for (auto level : catalog->others) {
        const bool seen = std::any_of(rows.begin(), rows.end(),
                                      [&](const Covariates& r) { return level_value(r, term.covariate) == level; });
        if (seen) design.levels.emplace_back(level);
      }
    }
    for (auto& name : term_columns(design)) columns.push_back(std::move(name));
    terms.push_back(std::move(design));
  }

  CoxFit shell;
  shell.terms = terms;
  shell.column_names = columns;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  std::vector<double> time;
  std::unique_ptr<bool[]> died_storage(new bool[rows.size()]);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = design_row(shell, rows[r]).transpose();
    const auto& outcome = cohort.outcomes()[cases[r]];
    time.push_back(outcome.time);
    died_storage[r] = outcome.event == Event::death;
  }

  auto fit = fit_cox_design(x, time, std::span<const bool>(died_storage.get(), rows.size()), columns, options);
  fit.marker_name = spec.marker_name;
  fit.terms = std::move(terms);
  return fit;
}

Eigen::VectorXd design_row(const CoxFit& fit, const Covariates& covariates) {
  Eigen::VectorXd row(static_cast<Eigen::Index>(fit.column_names.size()));
  Eigen::Index col = 0;
  for (const auto& term : fit.terms) append_term(term, covariates, row, col);
  return row;
}

double linear_predictor(const CoxFit& fit, const Covariates& covariates) {
  return fit.coefficients.dot(design_row(fit, covariates) - fit.centering);
}

CrossValidatedScores cv_baseline_scores(const LongitudinalCohort& cohort, const ModelSpec& spec, int folds,
                                        std::uint64_t seed, unsigned threads, const CoxOptions& options) {
  spec.validate();
  if (folds < 2) throw Error(ErrorKind::invalid_argument, "cross-validation needs at least 2 folds");
  const auto cases = complete_cases(cohort, spec);
  if (cases.size() < static_cast<std::size_t>(folds)) {
    throw Error(ErrorKind::invalid_argument, "fewer complete cases than folds");
  }

  CrossValidatedScores out;
  out.excluded_incomplete = cohort.size() - cases.size();
  out.cohort_index = cases;
  out.fold.assign(cases.size(), 0);

  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < order.size(); ++k) out.fold[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));

  out.training.resize(static_cast<std::size_t>(folds));
  for (std::size_t r = 0; r < cases.size(); ++r) {
    for (int f = 0; f < folds; ++f) {
      if (out.fold[r] != f) out.training[static_cast<std::size_t>(f)].push_back(cases[r]);
    }
  }

  std::vector<double> score(cases.size(), 0.0);
  parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
    const auto training = cohort.subset(out.training[f]);
    if (training.death_count() < 2) {
      throw Error(ErrorKind::insufficient_events, "training split for fold " + std::to_string(f) + " has fewer than 2 deaths");
    }
    const auto fit = fit_cox(training, spec, options);
    for (std::size_t r = 0; r < cases.size(); ++r) {
      if (out.fold[r] != static_cast<int>(f)) continue;
      score[r] = linear_predictor(fit, baseline_covariates(cohort, cases[r], spec.marker_name));
    }
  });

  out.scores.reserve(cases.size());
  for (std::size_t r = 0; r < cases.size(); ++r) out.scores.push_back({cohort.patients()[cases[r]].patient_id, score[r]});
  return out;
}

std::vector<ScoreSeries> time_varying_scores(const CoxFit& fit, const LongitudinalCohort& cohort,
                                             std::span<const double> schedule) {
  std::vector<ScoreSeries> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& id = cohort.patients()[i].patient_id;
    const auto* series = cohort.series(i, fit.marker_name);
    if (!series) throw Error(ErrorKind::invalid_argument, "patient '" + id + "' has no '" + fit.marker_name + "' series");
    const double horizon = cohort.outcomes()[i].time;
    std::vector<double> times;
    for (double t : schedule) {
      if (t <= horizon) times.push_back(t);
    }
    const auto imputed = locf_impute(*series, times);
    auto covariates = baseline_covariates(cohort, i, fit.marker_name);
    ScoreSeries s{id, {}, {}};
    for (const auto& obs : imputed.observations) {
      if (!obs.value) {
        throw Error(ErrorKind::invalid_argument, "patient '" + id + "' has no marker value at or before time " +
                                                     csv::format_double(obs.time));
      }
      covariates[fit.marker_name] = *obs.value;
      s.times.push_back(obs.time);
      s.scores.push_back(linear_predictor(fit, covariates));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoreSeries> baseline_scores(const CoxFit& fit, const LongitudinalCohort& cohort) {
  std::vector<ScoreSeries> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out.push_back({cohort.patients()[i].patient_id, {0.0}, {linear_predictor(fit, baseline_covariates(cohort, i, fit.marker_name))}});
  }
  return out;
}

void write_score_csv(std::span<const ScoreSeries> series, std::ostream& out) {
  out << "patient_id,time,score\n";
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      out << s.patient_id << ',' << csv::format_double(s.times[k]) << ',' << csv::format_double(s.scores[k]) << '\n';
    }
  }
}

std::vector<ScoreSeries> read_score_csv(std::istream& in, std::string_view source) {
  const auto table = csv::read(in, source);
  const auto id_col = table.column("patient_id");
  const auto time_col = table.column("time");
  const auto score_col = table.column("score");
  if (!id_col || !time_col || !score_col || table.header.size() != 3) {
    throw Error(ErrorKind::schema, std::string(source) + ": expected columns patient_id,time,score");
  }
  std::vector<ScoreSeries> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = std::string(source) + ":" + std::to_string(table.line[r]);
    const auto t = csv::parse_double(row[*time_col]);
    const auto v = csv::parse_double(row[*score_col]);
    if (!t || !v) throw Error(ErrorKind::schema, where + ": unparseable time or score");
    auto [it, inserted] = index.emplace(row[*id_col], out.size());
    if (inserted) out.push_back({row[*id_col], {}, {}});
    auto& s = out[it->second];
    if (!s.times.empty() && !(*t > s.times.back())) throw Error(ErrorKind::schema, where + ": score times not increasing");
    s.times.push_back(*t);
    s.scores.push_back(*v);
  }
  return out;
}

std::string fit_to_json(const CoxFit& fit) {
  using nlohmann::json;
  json terms = json::array();
  for (const auto& t : fit.terms) {
    json term = {{"covariate", t.term.covariate}, {"encoding", to_string(t.term.encoding)}};
    if (t.basis) {
      term["df"] = t.term.df;
      term["interior_knots"] = t.basis->interior_knots;
      term["boundary_knots"] = {t.basis->lower_boundary, t.basis->upper_boundary};
    }
    if (t.term.encoding == Encoding::indicators) {
      term["reference"] = t.reference;
      term["levels"] = t.levels;
    }
    terms.push_back(std::move(term));
  }
  const auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc = {
      {"marker_name", fit.marker_name},
      {"terms", terms},
      {"columns", fit.column_names},
      {"coefficients", to_vec(fit.coefficients)},
      {"centering", to_vec(fit.centering)},
      {"score", to_vec(fit.score)},
      {"log_partial_likelihood", fit.log_partial_likelihood},
      {"null_log_partial_likelihood", fit.null_log_partial_likelihood},
      {"iterations", fit.iterations},
      {"converged", fit.converged},
      {"ties", fit.ties == TieMethod::efron ? "efron" : "breslow"},
      {"subjects", fit.subjects},
      {"events", fit.events},
  };
  return doc.dump(2) + "\n";
}

CoxFit fit_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(text);
    CoxFit fit;
    fit.marker_name = doc.at("marker_name").get<std::string>();
    for (const auto& t : doc.at("terms")) {
      TermDesign term;
      term.term.covariate = t.at("covariate").get<std::string>();
      term.term.encoding = parse_encoding(t.at("encoding").get<std::string>());
      if (term.term.encoding == Encoding::spline) {
        term.term.df = t.at("df").get<int>();
        SplineBasis basis;
        basis.interior_knots = t.at("interior_knots").get<std::vector<double>>();
        const auto boundary = t.at("boundary_knots").get<std::vector<double>>();
        if (boundary.size() != 2) throw Error(ErrorKind::schema, "boundary_knots must have two entries");
        basis.lower_boundary = boundary[0];
        basis.upper_boundary = boundary[1];
        basis.validate();
        term.basis = basis;
      }
      if (term.term.encoding == Encoding::indicators) {
        term.reference = t.at("reference").get<std::string>();
        term.levels = t.at("levels").get<std::vector<std::string>>();
      }
      fit.terms.push_back(std::move(term));
    }
    fit.column_names = doc.at("columns").get<std::vector<std::string>>();
    const auto to_eigen = [](const std::vector<double>& v) {
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    fit.coefficients = to_eigen(doc.at("coefficients").get<std::vector<double>>());
    fit.centering = to_eigen(doc.at("centering").get<std::vector<double>>());
    fit.score = to_eigen(doc.at("score").get<std::vector<double>>());
    fit.log_partial_likelihood = doc.at("log_partial_likelihood").get<double>();
    fit.null_log_partial_likelihood = doc.at("null_log_partial_likelihood").get<double>();
    fit.iterations = doc.at("iterations").get<int>();
    fit.converged = doc.at("converged").get<bool>();
    fit.ties = doc.at("ties").get<std::string>() == "breslow" ? TieMethod::breslow : TieMethod::efron;
    fit.subjects = doc.at("subjects").get<std::size_t>();
    fit.events = doc.at("events").get<std::size_t>();
    int width = 0;
    for (const auto& t : fit.terms) width += t.width();
    const auto p = static_cast<Eigen::Index>(fit.column_names.size());
    if (width != p || fit.coefficients.size() != p || fit.centering.size() != p) {
      throw Error(ErrorKind::schema, "fit JSON has inconsistent column counts");
    }
    return fit;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("invalid fit JSON: ") + e.what());
  }
}

}  // namespace dynroc
