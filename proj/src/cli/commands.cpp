#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cli/manifest.hpp"
#include "dynroc/accuracy.hpp"
#include "dynroc/cox.hpp"
#include "dynroc/csv.hpp"
#include "dynroc/error.hpp"
#include "dynroc/parallel.hpp"
#include "dynroc/plot.hpp"
#include "dynroc/registry.hpp"
#include "dynroc/simulate.hpp"
#include "dynroc/survival.hpp"

namespace dynroc::cli {

namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
  std::size_t n = 1000;
  double beta = SimConfig{}.log_hazard_slope;
  double lambda = SimConfig{}.baseline_hazard;
  double drift = SimConfig{}.drift_per_year;
  double noise_sd = SimConfig{}.noise_sd;
  double censor_rate = SimConfig{}.censor_rate;
  double horizon = SimConfig{}.admin_horizon;
  double baseline_mean = 70.0;
  double baseline_sd = 25.0;
  std::string marker = "fev1";
  std::uint64_t seed = 1;
  std::string out_dir;
  unsigned threads = 0;
};

struct FitArgs {
  std::string model = "base";
  std::string patients;
  std::string records;
  std::string marker = "fev1";
  int df = 4;
  std::string marker_encoding = "spline";
  int cv_folds = 0;
  std::uint64_t seed = 1;
  std::string out_dir;
  unsigned threads = 0;
};

struct ScoreArgs {
  std::string fit;
  std::string patients;
  std::string records;
  std::string mode = "updated";
  double update_interval = 1.0;
  std::string out_dir;
};

struct EvaluateArgs {
  std::string patients;
  std::string records;
  std::string fit;
  std::string scores;
  std::string mode = "updated";
  std::string metric = "auc";
  double fpf = 0.05;
  double span = kDefaultSpan;
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string subgroup;
  double update_interval = 1.0;
  std::string compare_intervals;
  double window = 1.0;
  std::string marker = "fev1";
  std::string out_dir;
  unsigned threads = 0;
};

struct KmArgs {
  std::string patients;
  std::string records;
  std::string subgroup;
  std::string marker = "fev1";
  std::string out_dir;
};

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "unwritable output directory '" + dir + "'");
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>& outputs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
  outputs.push_back(path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double max_follow_up(const LongitudinalCohort& cohort) {
  double horizon = 0.0;
  for (const auto& o : cohort.outcomes()) horizon = std::max(horizon, o.time);
  return horizon;
}

// Patients with every covariate the fitted model uses.
LongitudinalCohort scorable(const LongitudinalCohort& cohort, const CoxFit& fit) {
  ModelSpec spec;
  spec.marker_name = fit.marker_name;
  for (const auto& t : fit.terms) spec.terms.push_back(t.term);
  const auto rows = complete_cases(cohort, spec);
  if (rows.empty()) throw Error(ErrorKind::empty_cohort, "no patient has every covariate the model uses");
  return cohort.subset(rows);
}

std::vector<ScoreSeries> model_scores(const CoxFit& fit, const LongitudinalCohort& cohort, const std::string& mode,
                                      double interval) {
  if (mode == "baseline") return baseline_scores(fit, cohort);
  if (mode == "updated") return time_varying_scores(fit, cohort, refresh_schedule(interval, max_follow_up(cohort)));
  throw Error(ErrorKind::invalid_argument, "--mode must be baseline or updated");
}

std::string curve_csv(const AccuracyCurve& curve) {
  std::ostringstream out;
  write_curve_csv(curve, out);
  return out.str();
}

// The SVG is drawn from the parsed CSV text so the figure shows exactly the
// numbers written to disk.
std::string curve_svg(const std::string& csv_text, const AccuracyCurve& meta, const std::string& title) {
  std::istringstream in(csv_text);
  auto curve = read_curve_csv(in, "curve");
  curve.kind = meta.kind;
  curve.fpf = meta.fpf;
  return plot::render_curve_svg(curve, title);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig config;
  config.n_patients = a.n;
  config.baseline_marker = MarkerDistribution::normal(a.baseline_mean, a.baseline_sd);
  config.drift_per_year = a.drift;
  config.noise_sd = a.noise_sd;
  config.log_hazard_slope = a.beta;
  config.baseline_hazard = a.lambda;
  config.censor_rate = a.censor_rate;
  config.admin_horizon = a.horizon;
  config.seed = a.seed;
  config.marker_name = a.marker;
  config.validate();

  const auto dir = prepare_out_dir(a.out_dir);
  const auto cohort = simulate_cohort(config, resolve_threads(a.threads));
  std::ostringstream patients;
  std::ostringstream records;
  write_cohort(cohort, patients, records);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = a.seed;
  manifest.parameters = {{"n", a.n},           {"beta", a.beta},          {"lambda", a.lambda},
                         {"drift", a.drift},   {"noise_sd", a.noise_sd},  {"censor_rate", a.censor_rate},
                         {"horizon", a.horizon}, {"baseline_mean", a.baseline_mean},
                         {"baseline_sd", a.baseline_sd}, {"marker", a.marker}};
  write_text(dir / "patients.csv", patients.str(), manifest.outputs);
  write_text(dir / "records.csv", records.str(), manifest.outputs);
  manifest.write(dir);
  out << "simulated " << cohort.size() << " patients, " << cohort.death_count() << " deaths\n";
  return 0;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  ModelSpec spec;
  if (a.model == "base") {
    spec = ModelSpec::base(a.marker, a.df);
  } else if (a.model == "multivariate") {
    spec = ModelSpec::multivariate(a.marker, a.df);
  } else {
    throw Error(ErrorKind::invalid_argument, "--model must be base or multivariate");
  }
  if (a.marker_encoding == "linear") {
    for (auto& term : spec.terms) {
      if (term.covariate == a.marker) term.encoding = Encoding::linear;
    }
  } else if (a.marker_encoding != "spline") {
    throw Error(ErrorKind::invalid_argument, "--marker-encoding must be spline or linear");
  }
  const auto dir = prepare_out_dir(a.out_dir);
  const auto cohort = build_analysis_cohort(load_cohort(a.patients, a.records), a.marker);
  const auto fit = fit_cox(cohort, spec);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.seed = a.seed;
  manifest.inputs = {a.patients, a.records};
  manifest.parameters = {{"model", a.model}, {"marker", a.marker}, {"df", a.df}, {"marker_encoding", a.marker_encoding}, {"cv_folds", a.cv_folds}};
  write_text(dir / "fit.json", fit_to_json(fit), manifest.outputs);
  if (a.cv_folds > 0) {
    const auto cv = cv_baseline_scores(cohort, spec, a.cv_folds, a.seed, resolve_threads(a.threads));
    std::vector<ScoreSeries> series;
    series.reserve(cv.scores.size());
    for (const auto& s : cv.scores) series.push_back({s.patient_id, {0.0}, {s.score}});
    std::ostringstream csv_out;
    write_score_csv(series, csv_out);
    write_text(dir / "cv_scores.csv", csv_out.str(), manifest.outputs);
  }
  manifest.write(dir);
  out << "fitted " << a.model << " model on " << fit.subjects << " patients, " << fit.events << " deaths, "
      << fit.iterations << " iterations\n";
  return 0;
}

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const auto dir = prepare_out_dir(a.out_dir);
  const auto fit = fit_from_json(read_text(a.fit));
  const auto cohort = scorable(build_analysis_cohort(load_cohort(a.patients, a.records), fit.marker_name), fit);
  const auto scores = model_scores(fit, cohort, a.mode, a.update_interval);
  std::ostringstream csv_out;
  write_score_csv(scores, csv_out);

  RunManifest manifest;
  manifest.command = "score";
  manifest.inputs = {a.fit, a.patients, a.records};
  manifest.parameters = {{"mode", a.mode}, {"update_interval", a.update_interval}};
  write_text(dir / "scores.csv", csv_out.str(), manifest.outputs);
  manifest.write(dir);
  out << "scored " << scores.size() << " patients\n";
  return 0;
}

std::pair<double, double> parse_interval_pair(const std::string& text) {
  const auto comma = text.find(',');
  const auto a = csv::parse_double(std::string_view(text).substr(0, comma));
  const auto b = comma == std::string::npos ? std::nullopt : csv::parse_double(std::string_view(text).substr(comma + 1));
  if (!a || !b) throw Error(ErrorKind::invalid_argument, "--compare-intervals expects a,b");
  return {*a, *b};
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.fit.empty() == a.scores.empty()) throw Error(ErrorKind::invalid_argument, "give exactly one of --fit or --scores");
  if (a.metric != "auc" && a.metric != "tpf") throw Error(ErrorKind::invalid_argument, "--metric must be auc or tpf");
  if (a.mode != "baseline" && a.mode != "updated") throw Error(ErrorKind::invalid_argument, "--mode must be baseline or updated");
  std::optional<SubgroupRule> rule;
  if (!a.subgroup.empty()) rule = SubgroupRule::parse(a.subgroup);
  if (!a.compare_intervals.empty() && a.fit.empty()) {
    throw Error(ErrorKind::invalid_argument, "--compare-intervals needs --fit");
  }
  const auto dir = prepare_out_dir(a.out_dir);
  const unsigned threads = resolve_threads(a.threads);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.seed = a.seed;
  manifest.inputs = {a.patients, a.records};
  manifest.parameters = {{"mode", a.mode},         {"metric", a.metric},     {"fpf", a.fpf},
                         {"span", a.span},         {"bootstrap", a.bootstrap}, {"level", a.level},
                         {"subgroup", a.subgroup}, {"update_interval", a.update_interval},
                         {"compare_intervals", a.compare_intervals}, {"window", a.window}, {"marker", a.marker}};

  std::optional<CoxFit> fit;
  std::string marker = a.marker;
  if (!a.fit.empty()) {
    fit = fit_from_json(read_text(a.fit));
    marker = fit->marker_name;
    manifest.inputs.push_back(a.fit);
  }
  auto cohort = build_analysis_cohort(load_cohort(a.patients, a.records), marker);

  std::vector<ScoreSeries> scores;
  if (fit) {
    cohort = scorable(cohort, *fit);
    scores = model_scores(*fit, cohort, a.mode, a.update_interval);
  } else {
    std::ifstream in(a.scores);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + a.scores + "'");
    scores = read_score_csv(in, a.scores);
    manifest.inputs.push_back(a.scores);
    // Score files may cover a subset (e.g. cross-validated complete cases).
    std::vector<std::size_t> rows;
    for (const auto& s : scores) {
      const auto idx = cohort.index_of(s.patient_id);
      if (!idx) throw Error(ErrorKind::invalid_argument, "scored patient '" + s.patient_id + "' is not in the analysis cohort");
      rows.push_back(*idx);
    }
    std::sort(rows.begin(), rows.end());
    cohort = cohort.subset(rows);
  }
  const auto scored = attach_scores(cohort, scores);

  CurveSettings settings;
  settings.kind = a.metric == "tpf" ? CurveKind::tpf_at_fpf : CurveKind::auc;
  settings.span = a.span;
  settings.fpf = a.fpf;
  const auto builder = score_curve_builder(settings);
  BootstrapOptions boot;
  boot.replicates = a.bootstrap;
  boot.level = a.level;
  boot.seed = a.seed;
  boot.threads = threads;
  const auto build = [&](const LongitudinalCohort& c) {
    return a.bootstrap > 0 ? bootstrap_bands(builder, c, boot) : builder(c, {});
  };
  const std::string title = std::string(a.metric == "auc" ? "AUC(t)" : "TPF at fixed FPF") + ", " + a.mode + " scores";

  std::size_t curves = 0;
  if (rule) {
    for (const auto& [label, members] : split_by_rule(scored, *rule, marker)) {
      const auto group = scored.subset(members);
      if (group.death_count() == 0) {
        out << "subgroup " << label << ": unavailable (no deaths)\n";
        continue;
      }
      AccuracyCurve curve;
      try {
        curve = build(group);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_events) throw;
        out << "subgroup " << label << ": unavailable (" << e.what() << ")\n";
        continue;
      }
      const auto text = curve_csv(curve);
      write_text(dir / ("curve_" + label + ".csv"), text, manifest.outputs);
      write_text(dir / ("curve_" + label + ".svg"), curve_svg(text, curve, title + " [" + label + "]"), manifest.outputs);
      ++curves;
    }
  } else {
    const auto curve = build(scored);
    const auto text = curve_csv(curve);
    write_text(dir / "curve.csv", text, manifest.outputs);
    write_text(dir / "curve.svg", curve_svg(text, curve, title), manifest.outputs);
    ++curves;
  }

  if (!a.compare_intervals.empty()) {
    const auto [ia, ib] = parse_interval_pair(a.compare_intervals);
    const auto table = compare_update_policies(*fit, cohort, ia, ib, a.window, a.update_interval);
    std::ostringstream csv_out;
    write_comparison_csv(table, csv_out);
    write_text(dir / "update_comparison.csv", csv_out.str(), manifest.outputs);
  }
  manifest.write(dir);
  out << "wrote " << curves << " curve(s) for " << scored.size() << " patients\n";
  return 0;
}

int cmd_km(const KmArgs& a, std::ostream& out) {
  std::optional<SubgroupRule> rule;
  if (!a.subgroup.empty()) rule = SubgroupRule::parse(a.subgroup);
  const auto dir = prepare_out_dir(a.out_dir);
  const auto cohort = build_analysis_cohort(load_cohort(a.patients, a.records), a.marker);

  RunManifest manifest;
  manifest.command = "km";
  manifest.inputs = {a.patients, a.records};
  manifest.parameters = {{"subgroup", a.subgroup}, {"marker", a.marker}};

  std::vector<std::pair<std::string, StepCurve>> curves;
  if (rule) {
    for (const auto& [label, members] : split_by_rule(cohort, *rule, a.marker)) {
      curves.emplace_back(label, kaplan_meier(cohort.subset(members).outcomes()));
    }
  } else {
    curves.emplace_back("all", kaplan_meier(cohort.outcomes()));
  }
  for (const auto& [label, curve] : curves) {
    std::ostringstream csv_out;
    write_step_curve_csv(curve, csv_out);
    write_text(dir / (rule ? "km_" + label + ".csv" : std::string("km.csv")), csv_out.str(), manifest.outputs);
  }
  write_text(dir / "km.svg", plot::render_km_svg(curves, "Kaplan-Meier survival"), manifest.outputs);
  manifest.write(dir);
  out << "wrote " << curves.size() << " Kaplan-Meier curve(s)\n";
  return 0;
}

std::string one_line(std::string text) {
  for (auto& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-dependent accuracy of survival risk scores", "dynroc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DYNROC_VERSION);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a longitudinal cohort");
  simulate->add_option("--n", sim.n, "Number of patients")->capture_default_str();
  simulate->add_option("--beta", sim.beta, "Log-hazard slope per marker unit")->capture_default_str();
  simulate->add_option("--lambda", sim.lambda, "Baseline hazard per year")->capture_default_str();
  simulate->add_option("--drift", sim.drift, "Marker drift per year")->capture_default_str();
  simulate->add_option("--noise-sd", sim.noise_sd, "Marker innovation sd per year")->capture_default_str();
  simulate->add_option("--censor-rate", sim.censor_rate, "Exponential censoring rate")->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "Administrative censoring horizon (years)")->capture_default_str();
  simulate->add_option("--baseline-mean", sim.baseline_mean, "Mean baseline marker")->capture_default_str();
  simulate->add_option("--baseline-sd", sim.baseline_sd, "Sd of baseline marker")->capture_default_str();
  simulate->add_option("--marker", sim.marker, "Marker name")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  simulate->add_option("--threads", sim.threads, "Worker threads (0: DYNROC_THREADS or all cores)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a Cox model on baseline data");
  fit->add_option("--model", fa.model, "base | multivariate")->capture_default_str();
  fit->add_option("--patients", fa.patients, "patients.csv")->required();
  fit->add_option("--records", fa.records, "records.csv")->required();
  fit->add_option("--marker", fa.marker, "Marker name")->capture_default_str();
  fit->add_option("--df", fa.df, "Spline degrees of freedom")->capture_default_str();
  fit->add_option("--marker-encoding", fa.marker_encoding, "spline | linear")->capture_default_str();
  fit->add_option("--cv-folds", fa.cv_folds, "Also write cross-validated baseline scores");
  fit->add_option("--seed", fa.seed, "Fold-assignment seed")->capture_default_str();
  fit->add_option("--out-dir", fa.out_dir, "Output directory")->required();
  fit->add_option("--threads", fa.threads, "Worker threads");

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Write risk-score series from a fitted model");
  score->add_option("--fit", sa.fit, "fit.json")->required();
  score->add_option("--patients", sa.patients, "patients.csv")->required();
  score->add_option("--records", sa.records, "records.csv")->required();
  score->add_option("--mode", sa.mode, "baseline | updated")->capture_default_str();
  score->add_option("--update-interval", sa.update_interval, "Years between marker refreshes")->capture_default_str();
  score->add_option("--out-dir", sa.out_dir, "Output directory")->required();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Estimate AUC(t) or TPF-at-FPF curves");
  evaluate->add_option("--patients", ea.patients, "patients.csv")->required();
  evaluate->add_option("--records", ea.records, "records.csv")->required();
  evaluate->add_option("--fit", ea.fit, "fit.json");
  evaluate->add_option("--scores", ea.scores, "Score CSV patient_id,time,score");
  evaluate->add_option("--mode", ea.mode, "baseline | updated")->capture_default_str();
  evaluate->add_option("--metric", ea.metric, "auc | tpf")->capture_default_str();
  evaluate->add_option("--fpf", ea.fpf, "Fixed false-positive fraction")->capture_default_str();
  evaluate->add_option("--span", ea.span, "Smoothing span (fraction of cases)")->capture_default_str();
  evaluate->add_option("--bootstrap", ea.bootstrap, "Bootstrap replicates (0: no bands)")->capture_default_str();
  evaluate->add_option("--level", ea.level, "Band level")->capture_default_str();
  evaluate->add_option("--seed", ea.seed, "Bootstrap seed")->capture_default_str();
  evaluate->add_option("--subgroup", ea.subgroup, "marker_le:<x> | age_bands:<a,b> | sex | genotype");
  evaluate->add_option("--update-interval", ea.update_interval, "Years between marker refreshes")->capture_default_str();
  evaluate->add_option("--compare-intervals", ea.compare_intervals, "Compare refresh intervals a,b");
  evaluate->add_option("--window", ea.window, "Comparison window width (years)")->capture_default_str();
  evaluate->add_option("--marker", ea.marker, "Marker name when --scores is used")->capture_default_str();
  evaluate->add_option("--out-dir", ea.out_dir, "Output directory")->required();
  evaluate->add_option("--threads", ea.threads, "Worker threads");

  KmArgs ka;
  auto* km = app.add_subcommand("km", "Kaplan-Meier curves, optionally by subgroup");
  km->add_option("--patients", ka.patients, "patients.csv")->required();
  km->add_option("--records", ka.records, "records.csv")->required();
  km->add_option("--subgroup", ka.subgroup, "marker_le:<x> | age_bands:<a,b> | sex | genotype");
  km->add_option("--marker", ka.marker, "Marker name")->capture_default_str();
  km->add_option("--out-dir", ka.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << DYNROC_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*fit) return cmd_fit(fa, out);
    if (*score) return cmd_score(sa, out);
    if (*evaluate) return cmd_evaluate(ea, out);
    if (*km) return cmd_km(ka, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dynroc::cli
