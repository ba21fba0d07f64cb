// dicho — batch experiment runner for the dichotomy / admissibility /
// shadowing toolkit. One experiment per invocation:
//   dicho <experiment> --config cfg.json [--out path] [--seed n] [--jobs n]
// Exit codes: 0 success/certified, 2 invariant or certification failure,
// 3 gluing/contraction failure, 4 configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "dicho/errors.hpp"
#include "dicho/json_io.hpp"

namespace fs = std::filesystem;
using dicho::json;

namespace {

int log_threshold() {
  static const int level = [] {
    const char* env = std::getenv("DICHO_LOG");
    if (env == nullptr) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_threshold() >= 1) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_threshold() >= 2) std::cerr << "[debug] " << msg << "\n";
}

struct Overrides {
  std::optional<std::string> out;
  std::optional<long long> seed;
  std::optional<int> jobs;
};

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw dicho::ConfigError("cannot read file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw dicho::ConfigError("malformed JSON in '" + path.string() +
                             "': " + e.what());
  }
}

/// Config accessor that tracks consumed keys so unknown ones are rejected.
class Config {
 public:
  Config(json j, fs::path dir, std::string experiment)
      : j_(std::move(j)), dir_(std::move(dir)) {
    if (!j_.is_object())
      throw dicho::ConfigError("config must be a JSON object");
    if (j_.contains("experiment")) {
      consumed_.insert("experiment");
      if (j_["experiment"].get<std::string>() != experiment)
        throw dicho::ConfigError("config experiment '" +
                                 j_["experiment"].get<std::string>() +
                                 "' does not match subcommand '" + experiment +
                                 "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  json require(const std::string& key) {
    if (!j_.contains(key))
      throw dicho::ConfigError("missing required key '" + key + "'");
    consumed_.insert(key);
    return j_[key];
  }

  template <typename T>
  T value(const std::string& key, T fallback) {
    consumed_.insert(key);
    return j_.value(key, fallback);
  }

  std::optional<json> optional(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    consumed_.insert(key);
    return j_[key];
  }

  /// Inline JSON value, or a path (string) loaded relative to the config.
  json resolve(const json& node) const {
    if (node.is_string())
      return load_json_file(dir_ / node.get<std::string>());
    return node;
  }

  void reject_unknown() const {
    for (const auto& [key, _] : j_.items())
      if (!consumed_.contains(key))
        throw dicho::ConfigError("unknown config key '" + key + "'");
  }

 private:
  json j_;
  fs::path dir_;
  std::set<std::string> consumed_;
};

dicho::IndexWindow window_from(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw dicho::ConfigError("window must be [lo, hi]");
  return dicho::IndexWindow(j[0].get<long>(), j[1].get<long>());
}

struct RunResult {
  int exit_code = 0;
  json report;
  std::string summary;
};

dicho::DichotomySplitting splitting_for(Config& cfg, const char* key,
                                        const dicho::LinearCocycle& c,
                                        double rank_tol) {
  if (auto node = cfg.optional(key)) {
    if (node->is_string() && node->get<std::string>() == "estimate")
      return dicho::estimate_splitting(c, rank_tol);
    return dicho::splitting_from_json(cfg.resolve(*node));
  }
  return dicho::estimate_splitting(c, rank_tol);
}

void maybe_write_csv(Config& cfg, const std::function<void(std::ostream&)>& fn) {
  if (auto node = cfg.optional("csv")) {
    const std::string path = node->get<std::string>();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dicho::ConfigError("cannot write CSV '" + path + "'");
    fn(out);
    log_info("wrote CSV " + path);
  }
}

// --- experiments -----------------------------------------------------------

RunResult run_verify_dichotomy(Config& cfg, const Overrides&) {
  dicho::LinearCocycle c =
      dicho::cocycle_from_json(cfg.resolve(cfg.require("cocycle")));
  const double rank_tol = cfg.value("rank_tol", 1.0);
  RunResult res;
  try {
    dicho::DichotomySplitting s = splitting_for(cfg, "splitting", c, rank_tol);
    cfg.reject_unknown();
    const dicho::DichotomyReport rep = dicho::verify_dichotomy(c, s);
    res.report = dicho::report_to_json(rep);
    res.exit_code = rep.passed ? 0 : 2;
    std::ostringstream ss;
    ss << (rep.passed ? "passed" : "FAILED") << " (worst stable "
       << dicho::format_double(rep.worst_stable_ratio) << ", unstable "
       << dicho::format_double(rep.worst_unstable_ratio) << ")";
    res.summary = ss.str();
  } catch (const dicho::NoGapDetected& e) {
    cfg.reject_unknown();
    res.report = {{"passed", false}, {"no_gap", true}, {"detail", e.what()}};
    res.exit_code = 2;
    res.summary = std::string("FAILED (no gap: ") + e.what() + ")";
  }
  return res;
}

RunResult run_green_bounds(Config& cfg, const Overrides& ov) {
  dicho::LinearCocycle c =
      dicho::cocycle_from_json(cfg.resolve(cfg.require("cocycle")));
  const double omega = cfg.require("omega").get<double>();
  const double mu = cfg.require("mu").get<double>();
  const double r = cfg.value("r", -1.0);
  const int jobs = ov.jobs.value_or(cfg.value("jobs", 1));
  dicho::DichotomySplitting s = splitting_for(cfg, "splitting", c, 1.0);

  const dicho::GreenBoundsReport rep =
      dicho::green_bounds(c, s, omega, mu, r, jobs);
  maybe_write_csv(cfg, [&](std::ostream& os) {
    dicho::write_pair_scan_csv(os, c, s, omega, mu, rep.r, jobs);
  });
  cfg.reject_unknown();

  RunResult res;
  res.report = dicho::report_to_json(rep);
  const bool ok = rep.max_stable_ratio <= 1.0 + 1e-8 &&
                  rep.max_unstable_ratio <= 1.0 + 1e-8 && rep.r_stable;
  res.exit_code = ok ? 0 : 2;
  std::ostringstream ss;
  ss << (ok ? "holds" : "FAILED") << " (r " << dicho::format_double(rep.r)
     << ", half-window r " << dicho::format_double(rep.r_half_window) << ")";
  res.summary = ss.str();
  return res;
}

RunResult run_solve_perron(Config& cfg, const Overrides&) {
  dicho::LinearCocycle c =
      dicho::cocycle_from_json(cfg.resolve(cfg.require("cocycle")));
  dicho::WeightedSeq f = dicho::seq_from_json(cfg.resolve(cfg.require("f")));

  dicho::PerronSolution sol = [&] {
    if (c.window().lo == 0) {
      dicho::DichotomySplitting s = splitting_for(cfg, "splitting", c, 1.0);
      return dicho::solve_halfline(c, s, f);
    }
    const dicho::IndexWindow wp(0, c.window().hi);
    const dicho::IndexWindow wm(c.window().lo, 0);
    dicho::LinearCocycle cp = dicho::restrict_cocycle(c, wp);
    dicho::LinearCocycle cm = dicho::restrict_cocycle(c, wm);
    dicho::DichotomySplitting sp = [&] {
      if (auto node = cfg.optional("splitting_plus"))
        return dicho::splitting_from_json(cfg.resolve(*node));
      return dicho::estimate_splitting(cp);
    }();
    dicho::DichotomySplitting sm = [&] {
      if (auto node = cfg.optional("splitting_minus"))
        return dicho::splitting_from_json(cfg.resolve(*node));
      return dicho::estimate_splitting(cm);
    }();
    return dicho::solve_fullline(c, sp, sm, f);
  }();

  maybe_write_csv(cfg, [&](std::ostream& os) { dicho::write_seq_csv(os, sol.y); });
  cfg.reject_unknown();

  RunResult res;
  res.report = dicho::report_to_json(sol);
  const bool ok = sol.residual <= 1e-9 * (1.0 + sol.norm_omega);
  res.exit_code = ok ? 0 : 2;
  std::ostringstream ss;
  ss << (ok ? "solved" : "FAILED") << " (norm "
     << dicho::format_double(sol.norm_omega) << ", residual "
     << dicho::format_double(sol.residual) << ")";
  res.summary = ss.str();
  return res;
}

RunResult run_pliss_check(Config& cfg, const Overrides&) {
  dicho::LinearCocycle c =
      dicho::cocycle_from_json(cfg.resolve(cfg.require("cocycle")));
  const double decay_tol = cfg.value("decay_tol", 0.01);
  const double witness_a = cfg.value("witness_a", 0.5);
  const double witness_omega = cfg.value("witness_omega", 0.0);
  auto sweep = cfg.optional("sweep");

  RunResult res;
  json rep;
  bool passed = true;
  std::string note;

  const dicho::Matrix bplus =
      dicho::decaying_subspace(c, dicho::Direction::forward, decay_tol);
  const dicho::Matrix bminus =
      dicho::decaying_subspace(c, dicho::Direction::backward, decay_tol);
  const dicho::TransversalityResult tr = dicho::transversality_check(
      dicho::make_subspace_pair(bplus, bminus), c.dim());
  rep["transverse"] = tr.transverse;
  rep["angle"] = tr.angle;
  rep["rank_plus"] = bplus.cols();
  rep["rank_minus"] = bminus.cols();
  passed = tr.transverse;
  if (!tr.transverse) note = "decaying subspaces do not span";

  try {
    const dicho::IndexWindow wp(0, c.window().hi);
    const dicho::IndexWindow wm(c.window().lo, 0);
    dicho::LinearCocycle cp = dicho::restrict_cocycle(c, wp);
    dicho::LinearCocycle cm = dicho::restrict_cocycle(c, wm);
    const dicho::DichotomyReport rp =
        dicho::verify_dichotomy(cp, dicho::estimate_splitting(cp));
    const dicho::DichotomyReport rm =
        dicho::verify_dichotomy(cm, dicho::estimate_splitting(cm));
    rep["hyperbolic_plus"] = rp.passed;
    rep["hyperbolic_minus"] = rm.passed;
    passed = passed && rp.passed && rm.passed;
  } catch (const dicho::NoGapDetected& e) {
    rep["hyperbolic_plus"] = false;
    rep["hyperbolic_minus"] = false;
    passed = false;
    if (note.empty()) note = e.what();
  }

  if (sweep) {
    // min-norm divergence sweep with the theta witness inhomogeneity
    json minima = json::array();
    std::vector<double> values;
    for (const auto& nj : *sweep) {
      const long n = nj.get<long>();
      dicho::LinearCocycle sub =
          dicho::restrict_cocycle(c, dicho::IndexWindow(-n, n));
      dicho::LinearCocycle sub_plus =
          dicho::restrict_cocycle(c, dicho::IndexWindow(0, n));
      dicho::DichotomySplitting sp = dicho::estimate_splitting(sub_plus);
      const dicho::Matrix ubasis = dicho::projection_range_basis(sp.Q(0));
      if (ubasis.cols() == 0)
        throw dicho::DomainError("witness needs a nontrivial unstable space");
      dicho::WeightedSeq f = dicho::theta_witness(
          sub, sp, ubasis.col(0), witness_omega, witness_a);
      const double mn =
          dicho::window_min_norm_solution(sub, f, witness_omega).min_norm;
      values.push_back(mn);
      minima.push_back({{"n", n}, {"min_norm", mn}});
    }
    rep["min_norm_sweep"] = minima;
    maybe_write_csv(cfg, [&](std::ostream& os) {
      os << "n,min_norm\n";
      std::size_t i = 0;
      for (const auto& nj : *sweep)
        os << nj.get<long>() << ","
           << dicho::format_double(values[i++]) << "\n";
    });
  } else {
    maybe_write_csv(cfg, [](std::ostream& os) { os << "n,min_norm\n"; });
  }
  cfg.reject_unknown();

  rep["passed"] = passed;
  if (!note.empty()) rep["note"] = note;
  res.report = std::move(rep);
  res.exit_code = passed ? 0 : 2;
  res.summary = passed ? "passed" : ("FAILED (" + note + ")");
  return res;
}

RunResult run_series_constant(Config& cfg, const Overrides&) {
  const double lambda = cfg.require("lambda").get<double>();
  const double omega = cfg.require("omega").get<double>();
  const long k_max = cfg.value("k_max", 10000L);
  cfg.reject_unknown();

  const dicho::SeriesConstant sc = dicho::series_constant(lambda, omega, k_max);
  RunResult res;
  res.report = dicho::report_to_json(sc);
  res.exit_code = 0;
  res.summary = "C = " + dicho::format_double(sc.value) + " at k = " +
                std::to_string(sc.argmax);
  return res;
}

RunResult run_shadow(Config& cfg, const Overrides& ov) {
  const dicho::TorusMap map = dicho::map_from_json(cfg.resolve(cfg.require("map")));
  const dicho::IndexWindow window = window_from(cfg.require("window"));
  const double d = cfg.require("d").get<double>();
  const double gamma = cfg.require("gamma").get<double>();
  const std::uint64_t seed = static_cast<std::uint64_t>(
      ov.seed.value_or(cfg.require("seed").get<long long>()));
  dicho::Point x0(0.2, 0.3);
  if (auto node = cfg.optional("x0"))
    x0 = dicho::Point((*node)[0].get<double>(), (*node)[1].get<double>());

  const dicho::PseudoOrbit po =
      dicho::generate_pseudo_orbit(map, x0, window, d, gamma, seed);
  const dicho::ShadowingOutcome out = dicho::shadow_orbit(map, po);
  const dicho::ShadowVerifyReport ver = dicho::verify_shadowing(map, po, out);

  maybe_write_csv(cfg, [&](std::ostream& os) {
    dicho::write_outcome_csv(os, po, out);
  });
  cfg.reject_unknown();

  RunResult res;
  res.report = dicho::report_to_json(out);
  res.report["verification"] = dicho::report_to_json(ver);
  const bool ok = out.certified && ver.passed;
  res.exit_code = ok ? 0 : 2;
  std::ostringstream ss;
  ss << (ok ? "certified" : "NOT CERTIFIED") << " (L*d "
     << dicho::format_double(out.L_used * out.d_used) << ", max ratio "
     << dicho::format_double(ver.max_ratio) << ")";
  res.summary = ss.str();
  return res;
}

RunResult run_admissibility_probe(Config& cfg, const Overrides& ov) {
  const dicho::TorusMap map = dicho::map_from_json(cfg.resolve(cfg.require("map")));
  const dicho::IndexWindow window = window_from(cfg.require("window"));
  const double gamma = cfg.require("gamma").get<double>();
  const int trials = cfg.require("trials").get<int>();
  const std::uint64_t seed = static_cast<std::uint64_t>(
      ov.seed.value_or(cfg.require("seed").get<long long>()));
  const int jobs = ov.jobs.value_or(cfg.value("jobs", 1));
  dicho::Point p(0.2, 0.3);
  if (auto node = cfg.optional("p"))
    p = dicho::Point((*node)[0].get<double>(), (*node)[1].get<double>());
  cfg.reject_unknown();

  const dicho::AdmissibilityReport rep =
      dicho::admissibility_probe(map, p, window, gamma, trials, seed, jobs);
  RunResult res;
  res.report = dicho::report_to_json(rep);
  res.exit_code = rep.transverse ? 0 : 2;
  std::ostringstream ss;
  ss << (rep.transverse ? "transverse" : "NOT TRANSVERSE") << " (max norm "
     << dicho::format_double(rep.max_solution_norm) << ")";
  res.summary = ss.str();
  return res;
}

// --- driver ----------------------------------------------------------------

int dispatch(const std::string& experiment, const std::string& config_path,
             const Overrides& ov) {
  json report_wrapper;
  report_wrapper["experiment"] = experiment;
  std::string out_path = experiment + "_report.json";
  int code = 0;
  std::string summary;

  try {
    const fs::path cfg_path(config_path);
    Config cfg(load_json_file(cfg_path), cfg_path.parent_path(), experiment);
    if (auto o = cfg.optional("out")) out_path = o->get<std::string>();
    if (ov.out) out_path = *ov.out;

    log_info("running " + experiment + " with config " + config_path);
    RunResult res;
    if (experiment == "verify-dichotomy")
      res = run_verify_dichotomy(cfg, ov);
    else if (experiment == "green-bounds")
      res = run_green_bounds(cfg, ov);
    else if (experiment == "solve-perron")
      res = run_solve_perron(cfg, ov);
    else if (experiment == "pliss-check")
      res = run_pliss_check(cfg, ov);
    else if (experiment == "series-constant")
      res = run_series_constant(cfg, ov);
    else if (experiment == "shadow")
      res = run_shadow(cfg, ov);
    else
      res = run_admissibility_probe(cfg, ov);

    report_wrapper["status"] = res.exit_code == 0 ? "ok" : "failed";
    report_wrapper["report"] = std::move(res.report);
    code = res.exit_code;
    summary = res.summary;
  } catch (const dicho::ConfigError& e) {
    report_wrapper["status"] = "config_error";
    report_wrapper["error"] = e.what();
    code = 4;
    summary = std::string("config error: ") + e.what();
  } catch (const dicho::GluingNotSolvable& e) {
    report_wrapper["status"] = "gluing_not_solvable";
    report_wrapper["error"] = e.what();
    code = 3;
    summary = std::string("gluing not solvable: ") + e.what();
  } catch (const dicho::NotContraction& e) {
    report_wrapper["status"] = "not_contraction";
    report_wrapper["error"] = e.what();
    code = 3;
    summary = std::string("not a contraction: ") + e.what();
  } catch (const dicho::Error& e) {
    report_wrapper["status"] = "error";
    report_wrapper["error"] = e.what();
    code = 2;
    summary = std::string("error: ") + e.what();
  } catch (const json::exception& e) {
    report_wrapper["status"] = "config_error";
    report_wrapper["error"] = e.what();
    code = 4;
    summary = std::string("config error: ") + e.what();
  }

  if (ov.out) out_path = *ov.out;
  std::ofstream out(out_path, std::ios::binary);
  if (out) {
    out << report_wrapper.dump(2) << "\n";
    log_debug("report written to " + out_path);
  } else {
    std::cerr << "cannot write report to " << out_path << "\n";
  }
  std::cout << experiment << ": " << summary << " -> " << out_path << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dicho: dichotomy verification, weighted admissibility and "
               "shadowing experiments"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> experiments = {
      {"verify-dichotomy",
       "check dichotomy envelopes/invariance for a cocycle and splitting"},
      {"green-bounds",
       "measure the Green's-function envelopes and fit the constant r; CSV "
       "columns k,s,measured,envelope,ratio"},
      {"solve-perron",
       "solve the inhomogeneous system in the weighted space (half- or "
       "full-line); CSV columns k,x_1..x_d,weight,weighted_mag"},
      {"pliss-check",
       "decaying subspaces, transversality and optional min-norm sweep; CSV "
       "columns n,min_norm"},
      {"series-constant", "the weighted series constant C(lambda, omega)"},
      {"shadow",
       "generate a decaying pseudo-orbit and certify its shadowing; CSV "
       "columns k,x1,x2,dist,envelope,ratio"},
      {"admissibility-probe",
       "transversality probe plus random weighted Perron trials along an "
       "orbit"}};

  struct SubState {
    std::string config;
    Overrides ov;
    std::string out_flag;
    long long seed_flag = 0;
    int jobs_flag = 1;
    CLI::App* sub = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
  };
  std::vector<SubState> states(experiments.size());

  for (std::size_t i = 0; i < experiments.size(); ++i) {
    auto& st = states[i];
    st.sub = app.add_subcommand(experiments[i].first, experiments[i].second);
    st.sub->add_option("--config", st.config, "experiment config (JSON)")
        ->required();
    st.out_opt = st.sub->add_option("--out", st.out_flag,
                                    "report path (overrides config)");
    st.seed_opt =
        st.sub->add_option("--seed", st.seed_flag, "seed (overrides config)");
    st.jobs_opt = st.sub->add_option(
        "--jobs", st.jobs_flag, "worker threads for trials and pair scans");
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < experiments.size(); ++i) {
    auto& st = states[i];
    if (!st.sub->parsed()) continue;
    if (st.out_opt->count() > 0) st.ov.out = st.out_flag;
    if (st.seed_opt->count() > 0) st.ov.seed = st.seed_flag;
    if (st.jobs_opt->count() > 0) st.ov.jobs = st.jobs_flag;
    return dispatch(experiments[i].first, st.config, st.ov);
  }
  return 4;
}
