#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli/commands.hpp"
#include "dynroc/accuracy.hpp"
#include "dynroc/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dynroc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = dynroc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dynroc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const std::string kPatientHeader =
    "patient_id,baseline_age,sex,race,genotype,weight_pct,height_pct,staph_status,cepacia_status,"
    "pancreatic_insufficient,death_time,transplant_time,last_followup_time\n";

std::vector<double> column(const std::string& csv_text, std::size_t col) {
  std::istringstream in(csv_text);
  const auto table = dynroc::csv::read(in, "mem");
  std::vector<double> out;
  for (const auto& row : table.rows) out.push_back(*dynroc::csv::parse_double(row[col]));
  return out;
}

}  // namespace

TEST_CASE("usage errors") {
  const auto r = run({"simulate", "--n", "10"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: usage:", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
}

TEST_CASE("simulate is deterministic") {
  const auto dir = scratch("sim");
  REQUIRE(run({"simulate", "--n", "100", "--seed", "7", "--out-dir", (dir / "a").string()}).code == 0);
  REQUIRE(run({"simulate", "--n", "100", "--seed", "7", "--out-dir", (dir / "b").string()}).code == 0);
  CHECK(slurp(dir / "a/patients.csv") == slurp(dir / "b/patients.csv"));
  CHECK(slurp(dir / "a/records.csv") == slurp(dir / "b/records.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "a/manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["outputs"].size() == 2);
  CHECK(manifest["outputs"][0]["sha256"].get<std::string>().size() == 64);
  CHECK(run({"simulate", "--n", "0", "--out-dir", (dir / "c").string()}).code == 1);
}

TEST_CASE("fit on the closed-form fixture") {
  const auto dir = scratch("fit");
  write(dir / "p.csv", kPatientHeader + "A,8,female,white,,50,50,no,no,true,1,,1\n"
                                        "B,8,female,white,,50,50,no,no,true,2,,2\n"
                                        "C,8,female,white,,50,50,no,no,true,3,,3\n");
  write(dir / "r.csv", "patient_id,time,marker_name,value\nA,0,fev1,0\nB,0,fev1,1\nC,0,fev1,0\n");
  const auto r = run({"fit", "--patients", (dir / "p.csv").string(), "--records", (dir / "r.csv").string(),
                      "--marker-encoding", "linear", "--out-dir", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto fit = nlohmann::json::parse(slurp(dir / "out/fit.json"));
  CHECK(std::abs(fit["coefficients"][0].get<double>() - std::log(2.0) / 2.0) < 1e-6);

  const auto bad = run({"fit", "--patients", (dir / "p.csv").string(), "--records", (dir / "r.csv").string(),
                        "--out-dir", (dir / "out2").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("error: ", 0) == 0);
}

TEST_CASE("multivariate fit on a file missing a covariate column") {
  const auto dir = scratch("missing");
  std::string header = kPatientHeader;
  header.replace(header.find("weight_pct,"), 11, "");
  write(dir / "p.csv", header + "A,8,female,white,,50,no,no,true,1,,1\n");
  write(dir / "r.csv", "patient_id,time,marker_name,value\nA,0,fev1,0\n");
  const auto r = run({"fit", "--model", "multivariate", "--patients", (dir / "p.csv").string(), "--records",
                      (dir / "r.csv").string(), "--out-dir", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: schema:", 0) == 0);
  CHECK(r.err.find("weight_pct") != std::string::npos);
}

TEST_CASE("simulate, fit with folds, evaluate") {
  const auto dir = scratch("pipeline");
  const auto p = (dir / "sim/patients.csv").string();
  const auto rec = (dir / "sim/records.csv").string();
  REQUIRE(run({"simulate", "--n", "400", "--seed", "2", "--noise-sd", "3", "--out-dir", (dir / "sim").string()}).code == 0);
  for (const char* sub : {"f1", "f2"}) {
    REQUIRE(run({"fit", "--patients", p, "--records", rec, "--cv-folds", "10", "--seed", "1", "--out-dir",
                 (dir / sub).string()}).code == 0);
  }
  CHECK(slurp(dir / "f1/cv_scores.csv") == slurp(dir / "f2/cv_scores.csv"));

  const auto fit = (dir / "f1/fit.json").string();
  REQUIRE(run({"evaluate", "--patients", p, "--records", rec, "--fit", fit, "--bootstrap", "50", "--out-dir",
               (dir / "ev").string()}).code == 0);
  const auto curve = slurp(dir / "ev/curve.csv");
  CHECK(curve.rfind("time,estimate,lower,upper\n", 0) == 0);
  const auto svg = slurp(dir / "ev/curve.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  REQUIRE(run({"evaluate", "--patients", p, "--records", rec, "--scores", (dir / "f1/cv_scores.csv").string(), "--mode",
               "baseline", "--metric", "tpf", "--subgroup", "sex", "--out-dir", (dir / "ev2").string()}).code == 0);
  CHECK(fs::exists(dir / "ev2/curve_female.csv"));
  CHECK(fs::exists(dir / "ev2/curve_male.csv"));

  REQUIRE(run({"evaluate", "--patients", p, "--records", rec, "--fit", fit, "--compare-intervals", "1,1", "--out-dir",
               (dir / "ev3").string()}).code == 0);
  for (double d : column(slurp(dir / "ev3/update_comparison.csv"), 4)) CHECK(d == 0.0);

  const auto unknown = run({"evaluate", "--patients", p, "--records", rec, "--fit", fit, "--subgroup", "height",
                            "--out-dir", (dir / "ev4").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.rfind("error: unknown_rule:", 0) == 0);

  REQUIRE(run({"score", "--fit", fit, "--patients", p, "--records", rec, "--out-dir", (dir / "sc").string()}).code == 0);
  CHECK(slurp(dir / "sc/scores.csv").rfind("patient_id,time,score\n", 0) == 0);
}

TEST_CASE("perfect marker tpf curve is one") {
  const auto dir = scratch("perfect");
  std::string patients = kPatientHeader;
  std::string records = "patient_id,time,marker_name,value\n";
  std::string scores = "patient_id,time,score\n";
  for (int i = 0; i < 80; ++i) {
    const std::string id = "P" + std::to_string(i);
    const std::string t = std::to_string(1 + i * 0.25);
    patients += id + ",10,female,white,,50,50,no,no,true," + (i % 4 ? t : "") + ",," + t + "\n";
    records += id + ",0,fev1," + std::to_string(100 - i) + "\n";
    scores += id + ",0," + std::to_string(100 - i) + "\n";
  }
  write(dir / "p.csv", patients);
  write(dir / "r.csv", records);
  write(dir / "s.csv", scores);
  REQUIRE(run({"evaluate", "--patients", (dir / "p.csv").string(), "--records", (dir / "r.csv").string(), "--scores",
               (dir / "s.csv").string(), "--metric", "tpf", "--fpf", "0.05", "--out-dir", (dir / "out").string()})
              .code == 0);
  for (double v : column(slurp(dir / "out/curve.csv"), 1)) CHECK(v == 1.0);
}

TEST_CASE("km hand fixture and subgroups") {
  const auto dir = scratch("km");
  write(dir / "p.csv", kPatientHeader + "A,8,female,white,,50,50,no,no,true,1,,1\n"
                                        "B,8,female,white,,50,50,no,no,true,2,,2\n"
                                        "C,8,male,white,,50,50,no,no,true,,,1.5\n");
  write(dir / "r.csv", "patient_id,time,marker_name,value\nA,0,fev1,20\nB,0,fev1,50\nC,0,fev1,60\n");
  REQUIRE(run({"km", "--patients", (dir / "p.csv").string(), "--records", (dir / "r.csv").string(), "--out-dir",
               (dir / "out").string()}).code == 0);
  const auto km = slurp(dir / "out/km.csv");
  const auto times = column(km, 0);
  const auto surv = column(km, 1);
  REQUIRE(times == std::vector<double>{0, 1, 2});
  CHECK(surv[1] == 2.0 / 3.0);
  CHECK(surv[2] == 0.0);
  CHECK(fs::exists(dir / "out/km.svg"));

  REQUIRE(run({"km", "--patients", (dir / "p.csv").string(), "--records", (dir / "r.csv").string(), "--subgroup",
               "marker_le:30", "--out-dir", (dir / "sub").string()}).code == 0);
  CHECK(fs::exists(dir / "sub/km_le30.csv"));
  CHECK(fs::exists(dir / "sub/km_gt30.csv"));

  write(dir / "p2.csv", kPatientHeader + "A,8,female,white,,50,50,no,no,true,,,4\n"
                                         "B,8,female,white,,50,50,no,no,true,,,2\n");
  write(dir / "r2.csv", "patient_id,time,marker_name,value\nA,0,fev1,20\nB,0,fev1,50\n");
  REQUIRE(run({"km", "--patients", (dir / "p2.csv").string(), "--records", (dir / "r2.csv").string(), "--out-dir",
               (dir / "none").string()}).code == 0);
  CHECK(column(slurp(dir / "none/km.csv"), 1) == std::vector<double>{1.0});
}
