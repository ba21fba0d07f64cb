#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "dicho/json_io.hpp"

namespace fs = std::filesystem;
using dicho::json;

namespace {

const char* cli_path() { return DICHO_CLI_PATH; }

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + cli_path() + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path test_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("dicho_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json rotation_cocycle_json(long n, double angle) {
  json maps = json::array();
  for (long k = 0; k < n; ++k)
    maps.push_back({std::cos(angle), -std::sin(angle), std::sin(angle),
                    std::cos(angle)});
  return json{{"dim", 2}, {"window", {0, n}}, {"maps", maps}};
}

json diag_cocycle_json(long lo, long hi, double a, double b) {
  json maps = json::array();
  for (long k = lo; k < hi; ++k) maps.push_back({a, 0.0, 0.0, b});
  return json{{"dim", 2}, {"window", {lo, hi}}, {"maps", maps}};
}

}  // namespace

TEST_CASE("cli: shadow experiment is deterministic and certifies") {
  const fs::path dir = test_dir();
  const json cfg = {{"experiment", "shadow"},
                    {"map", {{"kind", "cat"}, {"epsilon", 0.0}}},
                    {"window", {-200, 200}},
                    {"d", 1e-4},
                    {"gamma", 1.0},
                    {"seed", 42},
                    {"csv", (dir / "shadow_a.csv").string()},
                    {"out", (dir / "shadow_a.json").string()}};
  write_file(dir / "shadow.json", cfg.dump());
  CHECK(run_cli("shadow --config " + (dir / "shadow.json").string()) == 0);

  json cfg2 = cfg;
  cfg2["csv"] = (dir / "shadow_b.csv").string();
  cfg2["out"] = (dir / "shadow_b.json").string();
  write_file(dir / "shadow2.json", cfg2.dump());
  CHECK(run_cli("shadow --config " + (dir / "shadow2.json").string()) == 0);

  const std::string a = read_file(dir / "shadow_a.csv");
  const std::string b = read_file(dir / "shadow_b.csv");
  CHECK(a == b);
  CHECK(!a.empty());
  // 401 data rows plus the header
  CHECK(std::count(a.begin(), a.end(), '\n') == 402);

  const json rep = json::parse(read_file(dir / "shadow_a.json"));
  CHECK(rep["status"] == "ok");
  CHECK(rep["report"]["certified"] == true);
}

TEST_CASE("cli: --seed overrides the config seed") {
  const fs::path dir = test_dir();
  const json cfg = {{"map", {{"kind", "cat"}}},
                    {"window", {-40, 40}},
                    {"d", 1e-4},
                    {"gamma", 0.0},
                    {"seed", 1},
                    {"csv", (dir / "seed_a.csv").string()},
                    {"out", (dir / "seed_a.json").string()}};
  write_file(dir / "seed.json", cfg.dump());
  CHECK(run_cli("shadow --config " + (dir / "seed.json").string()) == 0);

  json cfg2 = cfg;
  cfg2["csv"] = (dir / "seed_b.csv").string();
  cfg2["out"] = (dir / "seed_b.json").string();
  write_file(dir / "seed2.json", cfg2.dump());
  CHECK(run_cli("shadow --config " + (dir / "seed2.json").string() +
                " --seed 2") == 0);
  CHECK(read_file(dir / "seed_a.csv") != read_file(dir / "seed_b.csv"));
}

TEST_CASE("cli: verify-dichotomy fails on a rotation cocycle") {
  const fs::path dir = test_dir();
  write_file(dir / "rot.json", rotation_cocycle_json(40, 0.3).dump());
  const json cfg = {{"cocycle", "rot.json"},
                    {"out", (dir / "rot_report.json").string()}};
  write_file(dir / "vd.json", cfg.dump());
  CHECK(run_cli("verify-dichotomy --config " + (dir / "vd.json").string()) ==
        2);
  const json rep = json::parse(read_file(dir / "rot_report.json"));
  CHECK(rep["status"] == "failed");
}

TEST_CASE("cli: verify-dichotomy passes on a hyperbolic cocycle") {
  const fs::path dir = test_dir();
  write_file(dir / "diag.json", diag_cocycle_json(0, 30, 0.5, 2.0).dump());
  const json cfg = {{"cocycle", "diag.json"},
                    {"out", (dir / "diag_report.json").string()}};
  write_file(dir / "vdok.json", cfg.dump());
  CHECK(run_cli("verify-dichotomy --config " + (dir / "vdok.json").string()) ==
        0);
}

TEST_CASE("cli: solve-perron on the full line") {
  const fs::path dir = test_dir();
  write_file(dir / "diagf.json", diag_cocycle_json(-20, 20, 0.5, 2.0).dump());
  const json f = dicho::seq_to_json(
      dicho::impulse(dicho::IndexWindow(-20, 20), 1,
                     dicho::Vector::Unit(2, 0), 1.0));
  write_file(dir / "f.json", f.dump());
  const json cfg = {{"cocycle", "diagf.json"},
                    {"f", "f.json"},
                    {"csv", (dir / "sol.csv").string()},
                    {"out", (dir / "sol.json").string()}};
  write_file(dir / "sp.json", cfg.dump());
  CHECK(run_cli("solve-perron --config " + (dir / "sp.json").string()) == 0);
  const json rep = json::parse(read_file(dir / "sol.json"));
  CHECK(rep["report"]["residual"].get<double>() <= 1e-9);
  const std::string csv = read_file(dir / "sol.csv");
  CHECK(csv.rfind("k,x_1,x_2,weight,weighted_mag", 0) == 0);
}

TEST_CASE("cli: malformed JSON exits 4 with a line/column diagnostic") {
  const fs::path dir = test_dir();
  write_file(dir / "broken.json", "{ \"experiment\": \n !nope }");
  CHECK(run_cli("series-constant --config " + (dir / "broken.json").string() +
                " --out " + (dir / "broken_report.json").string()) == 4);
  const json rep = json::parse(read_file(dir / "broken_report.json"));
  CHECK(rep["status"] == "config_error");
  const std::string msg = rep["error"].get<std::string>();
  CHECK(msg.find("line") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("cli: unknown config keys are rejected") {
  const fs::path dir = test_dir();
  const json cfg = {{"lambda", 0.5}, {"omega", 0.0}, {"typo_key", 1}};
  write_file(dir / "unknown.json", cfg.dump());
  CHECK(run_cli("series-constant --config " + (dir / "unknown.json").string() +
                " --out " + (dir / "unknown_report.json").string()) == 4);
}

TEST_CASE("cli: series-constant reports the constant") {
  const fs::path dir = test_dir();
  const json cfg = {{"lambda", 0.5},
                    {"omega", 0.0},
                    {"k_max", 1000},
                    {"out", (dir / "series.json").string()}};
  write_file(dir / "series_cfg.json", cfg.dump());
  CHECK(run_cli("series-constant --config " +
                (dir / "series_cfg.json").string()) == 0);
  const json rep = json::parse(read_file(dir / "series.json"));
  CHECK(rep["report"]["value"].get<double>() == doctest::Approx(3.0).epsilon(1e-6));
}

namespace {

json piecewise_cocycle_json(long n) {
  json maps = json::array();
  for (long k = -n; k < n; ++k) {
    const double s = k >= 0 ? 2.0 : 0.5;
    maps.push_back({s, 0.0, 0.0, s});
  }
  return json{{"dim", 2}, {"window", {-n, n}}, {"maps", maps}};
}

}  // namespace

TEST_CASE("cli: pliss-check separates transverse from nontransverse") {
  const fs::path dir = test_dir();
  write_file(dir / "diag_full.json", diag_cocycle_json(-30, 30, 0.5, 2.0).dump());
  const json ok_cfg = {{"cocycle", "diag_full.json"},
                       {"out", (dir / "pliss_ok.json").string()}};
  write_file(dir / "pliss_ok_cfg.json", ok_cfg.dump());
  CHECK(run_cli("pliss-check --config " +
                (dir / "pliss_ok_cfg.json").string()) == 0);

  write_file(dir / "pw.json", piecewise_cocycle_json(40).dump());
  const json bad_cfg = {{"cocycle", "pw.json"},
                        {"sweep", {10, 20, 40}},
                        {"csv", (dir / "pliss_sweep.csv").string()},
                        {"out", (dir / "pliss_bad.json").string()}};
  write_file(dir / "pliss_bad_cfg.json", bad_cfg.dump());
  CHECK(run_cli("pliss-check --config " +
                (dir / "pliss_bad_cfg.json").string()) == 2);
  const json rep = json::parse(read_file(dir / "pliss_bad.json"));
  CHECK(rep["report"]["transverse"] == false);
  // the witness minima grow through the sweep
  const auto& sweep = rep["report"]["min_norm_sweep"];
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[1]["min_norm"].get<double>() >
        1.5 * sweep[0]["min_norm"].get<double>());
  const std::string csv = read_file(dir / "pliss_sweep.csv");
  CHECK(csv.rfind("n,min_norm", 0) == 0);
}

TEST_CASE("cli: solve-perron maps an unsolvable gluing to exit 3") {
  const fs::path dir = test_dir();
  write_file(dir / "pw_small.json", piecewise_cocycle_json(20).dump());
  const json f = dicho::seq_to_json(dicho::impulse(
      dicho::IndexWindow(-20, 20), 1, dicho::Vector::Unit(2, 0)));
  write_file(dir / "pw_f.json", f.dump());
  const json cfg = {{"cocycle", "pw_small.json"},
                    {"f", "pw_f.json"},
                    {"out", (dir / "pw_report.json").string()}};
  write_file(dir / "pw_cfg.json", cfg.dump());
  CHECK(run_cli("solve-perron --config " + (dir / "pw_cfg.json").string()) ==
        3);
  const json rep = json::parse(read_file(dir / "pw_report.json"));
  CHECK(rep["status"] == "gluing_not_solvable");
}

TEST_CASE("cli: green-bounds fits r on a hyperbolic cocycle") {
  const fs::path dir = test_dir();
  write_file(dir / "gb_cocycle.json", diag_cocycle_json(0, 60, 0.5, 2.0).dump());
  const json cfg = {{"cocycle", "gb_cocycle.json"},
                    {"omega", 1.0},
                    {"mu", 0.6},
                    {"csv", (dir / "gb.csv").string()},
                    {"out", (dir / "gb.json").string()}};
  write_file(dir / "gb_cfg.json", cfg.dump());
  CHECK(run_cli("green-bounds --config " + (dir / "gb_cfg.json").string()) ==
        0);
  const json rep = json::parse(read_file(dir / "gb.json"));
  CHECK(rep["report"]["max_stable_ratio"].get<double>() <= 1.0);
  const std::string csv = read_file(dir / "gb.csv");
  CHECK(csv.rfind("k,s,measured,envelope,ratio", 0) == 0);
}

TEST_CASE("json round-trips preserve values") {
  const json cj = diag_cocycle_json(-3, 4, 0.5, 2.0);
  dicho::LinearCocycle c = dicho::cocycle_from_json(cj);
  const json cj2 = dicho::cocycle_to_json(c);
  CHECK(dicho::cocycle_from_json(cj2).transition(4, -3) ==
        c.transition(4, -3));

  dicho::WeightedSeq s =
      dicho::impulse(dicho::IndexWindow(-2, 5), 3,
                     dicho::Vector::Unit(2, 1) * 0.1234567890123456789, 1.5);
  dicho::WeightedSeq s2 = dicho::seq_from_json(dicho::seq_to_json(s));
  CHECK(s2.omega == s.omega);
  for (long k = -2; k <= 5; ++k) CHECK(s2.at(k) == s.at(k));
}

TEST_CASE("cli: admissibility probe exit codes") {
  const fs::path dir = test_dir();
  const json good = {{"map", {{"kind", "cat"}}},
                     {"window", {-40, 40}},
                     {"gamma", 1.0},
                     {"trials", 5},
                     {"seed", 7},
                     {"out", (dir / "probe_ok.json").string()}};
  write_file(dir / "probe.json", good.dump());
  CHECK(run_cli("admissibility-probe --config " +
                (dir / "probe.json").string()) == 0);

  const json ident = {{"map",
                       {{"kind", "linear"}, {"matrix", {{1, 0}, {0, 1}}}}},
                      {"window", {-20, 20}},
                      {"gamma", 0.0},
                      {"trials", 3},
                      {"seed", 7},
                      {"out", (dir / "probe_id.json").string()}};
  write_file(dir / "probe_id_cfg.json", ident.dump());
  CHECK(run_cli("admissibility-probe --config " +
                (dir / "probe_id_cfg.json").string()) == 2);
  const json rep = json::parse(read_file(dir / "probe_id.json"));
  CHECK(rep["report"]["transverse"] == false);
}
