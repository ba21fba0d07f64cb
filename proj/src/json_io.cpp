#include "dicho/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "dicho/errors.hpp"

namespace dicho {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

json matrix_to_row_major(const Matrix& m) {
  json row = json::array();
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
  return row;
}

Matrix matrix_from_row_major(const json& j, int d, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d * d)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(d * d) +
                      " row-major reals");
  Matrix m(d, d);
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) m(i, k) = j[idx++].get<double>();
  return m;
}

IndexWindow window_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(std::string(what) + ": window must be [lo, hi]");
  return IndexWindow(j[0].get<long>(), j[1].get<long>());
}

}  // namespace

json cocycle_to_json(const LinearCocycle& c) {
  json j;
  j["dim"] = c.dim();
  j["window"] = {c.window().lo, c.window().hi};
  json maps = json::array();
  for (long k = c.window().lo; k < c.window().hi; ++k)
    maps.push_back(matrix_to_row_major(c.map(k)));
  j["maps"] = std::move(maps);
  return j;
}

LinearCocycle cocycle_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("window") ||
      !j.contains("maps"))
    throw ConfigError("cocycle: need keys dim, window, maps");
  const int d = j["dim"].get<int>();
  const IndexWindow w = window_from_json(j["window"], "cocycle");
  std::vector<Matrix> maps;
  for (const auto& m : j["maps"])
    maps.push_back(matrix_from_row_major(m, d, "cocycle map"));
  return make_cocycle(maps, w);
}

json seq_to_json(const WeightedSeq& s) {
  json j;
  j["window"] = {s.window.lo, s.window.hi};
  j["omega"] = s.omega;
  json vecs = json::array();
  for (const auto& v : s.vectors) {
    json row = json::array();
    for (long i = 0; i < v.size(); ++i) row.push_back(v(i));
    vecs.push_back(std::move(row));
  }
  j["vectors"] = std::move(vecs);
  return j;
}

WeightedSeq seq_from_json(const json& j) {
  if (!j.is_object() || !j.contains("window") || !j.contains("omega") ||
      !j.contains("vectors"))
    throw ConfigError("sequence: need keys window, omega, vectors");
  WeightedSeq s;
  s.window = window_from_json(j["window"], "sequence");
  s.omega = j["omega"].get<double>();
  for (const auto& row : j["vectors"]) {
    Vector v(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) v(i) = row[i].get<double>();
    s.vectors.push_back(std::move(v));
  }
  if (static_cast<long>(s.vectors.size()) != s.window.length())
    throw ConfigError("sequence: vector count != window length");
  return s;
}

json splitting_to_json(const DichotomySplitting& s) {
  json j;
  j["window"] = {s.window.lo, s.window.hi};
  j["K"] = s.K;
  j["lambda"] = s.lambda;
  json ps = json::array();
  for (const auto& p : s.projections) ps.push_back(matrix_to_row_major(p));
  j["projections"] = std::move(ps);
  return j;
}

DichotomySplitting splitting_from_json(const json& j) {
  if (!j.is_object() || !j.contains("window") || !j.contains("projections"))
    throw ConfigError("splitting: need keys window, projections");
  DichotomySplitting s;
  s.window = window_from_json(j["window"], "splitting");
  s.K = j.value("K", 1.0);
  s.lambda = j.value("lambda", 0.5);
  if (j["projections"].empty())
    throw ConfigError("splitting: projections empty");
  const int d = static_cast<int>(
      std::lround(std::sqrt(double(j["projections"][0].size()))));
  for (const auto& p : j["projections"])
    s.projections.push_back(matrix_from_row_major(p, d, "projection"));
  if (static_cast<long>(s.projections.size()) != s.window.length())
    throw ConfigError("splitting: projection count != window length");
  return s;
}

json map_to_json(const TorusMap& m) {
  const char* kind = m.kind == TorusMap::Kind::cat ? "cat"
                     : m.kind == TorusMap::Kind::linear ? "linear"
                                                        : "perturbed_cat";
  json j;
  j["kind"] = kind;
  j["matrix"] = {{m.matrix(0, 0), m.matrix(0, 1)},
                 {m.matrix(1, 0), m.matrix(1, 1)}};
  j["epsilon"] = m.epsilon;
  return j;
}

TorusMap map_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("map: need key kind");
  const std::string kind = j["kind"].get<std::string>();
  const double eps = j.value("epsilon", 0.0);
  if (kind == "cat") return make_cat_map();
  if (kind == "perturbed_cat") return make_perturbed_cat_map(eps);
  if (kind == "linear") {
    if (!j.contains("matrix")) throw ConfigError("linear map: need matrix");
    const auto& mj = j["matrix"];
    if (!mj.is_array() || mj.size() != 2 || mj[0].size() != 2)
      throw ConfigError("map matrix must be 2x2");
    Mat2 m;
    m << mj[0][0].get<double>(), mj[0][1].get<double>(),
        mj[1][0].get<double>(), mj[1][1].get<double>();
    return make_linear_map(m);
  }
  throw ConfigError("map: unknown kind '" + kind + "'");
}

json report_to_json(const DichotomyReport& r) {
  json j;
  j["passed"] = r.passed;
  j["K"] = r.K;
  j["lambda"] = r.lambda;
  j["worst"] = {{"stable_ratio", r.worst_stable_ratio},
                {"unstable_ratio", r.worst_unstable_ratio},
                {"invariance_defect", r.worst_invariance_defect},
                {"projector_norm", r.worst_projector_norm}};
  j["overflow_warning"] = r.overflow_warning;
  json fails = json::array();
  for (const auto& [k, l] : r.failing) fails.push_back({k, l});
  j["failing"] = std::move(fails);
  return j;
}

json report_to_json(const GreenBoundsReport& r) {
  return json{{"mu", r.mu},
              {"r", r.r},
              {"max_stable_ratio", r.max_stable_ratio},
              {"max_unstable_ratio", r.max_unstable_ratio},
              {"M", r.M},
              {"r_half_window", r.r_half_window},
              {"r_stable", r.r_stable},
              {"overflow_warning", r.overflow_warning}};
}

json report_to_json(const PerronSolution& s) {
  return json{{"norm_omega", s.norm_omega},
              {"residual", s.residual},
              {"truncation_bound", s.truncation_bound},
              {"y", seq_to_json(s.y)}};
}

json report_to_json(const SeriesConstant& s) {
  return json{{"value", s.value}, {"argmax", s.argmax}};
}

json report_to_json(const ShadowFixResult& r, double L_times_d) {
  return json{{"norm_gamma", r.norm_gamma},
              {"iterations", r.iterations},
              {"contraction_observed", r.contraction_observed},
              {"L_times_d", L_times_d},
              {"v", seq_to_json(r.v)}};
}

json report_to_json(const ShadowingOutcome& o) {
  json j;
  j["p"] = {o.p(0), o.p(1)};
  j["certified"] = o.certified;
  j["L"] = o.L_used;
  j["d"] = o.d_used;
  j["gamma"] = o.gamma;
  j["iterations"] = o.iterations;
  j["contraction_observed"] = o.contraction_observed;
  j["L_times_d"] = o.L_used * o.d_used;
  WeightedSeq v = o.v;
  v.omega = o.gamma;
  j["norm_gamma"] = weighted_norm(v);
  j["v"] = seq_to_json(o.v);
  double worst = 0.0;
  for (long k = o.v.window.lo; k <= o.v.window.hi; ++k)
    worst = std::max(worst, o.distances[o.v.window.offset(k)] *
                                weight_of(k, o.gamma));
  j["max_weighted_distance"] = worst;
  return j;
}

json report_to_json(const ShadowVerifyReport& r) {
  return json{{"max_ratio", r.max_ratio},
              {"max_disagreement", r.max_disagreement},
              {"passed", r.passed}};
}

json report_to_json(const AdmissibilityReport& r) {
  json j;
  j["transverse"] = r.transverse;
  j["angle"] = r.angle;
  j["max_solution_norm"] = r.max_solution_norm;
  j["failed_trials"] = r.failed_trials;
  j["trial_norms"] = r.trial_norms;
  j["note"] = r.note;
  return j;
}

void write_seq_csv(std::ostream& os, const WeightedSeq& s) {
  os << "k";
  for (int i = 1; i <= s.dim(); ++i) os << ",x_" << i;
  os << ",weight,weighted_mag\n";
  for (long k = s.window.lo; k <= s.window.hi; ++k) {
    os << k;
    const Vector& v = s.at(k);
    for (long i = 0; i < v.size(); ++i) os << "," << format_double(v(i));
    const double w = weight_of(k, s.omega);
    os << "," << format_double(w) << ","
       << format_double(v.norm() * w) << "\n";
  }
}

void write_pair_scan_csv(std::ostream& os, const LinearCocycle& c,
                         const DichotomySplitting& s, double omega, double mu,
                         double r, int jobs) {
  const double M = c.norm_bound();
  auto samples = measure_green_families(c, s, jobs);
  std::sort(samples.begin(), samples.end(),
            [](const NormSample& a, const NormSample& b) {
              if (a.k != b.k) return a.k < b.k;
              if (a.l != b.l) return a.l < b.l;
              return a.stable && !b.stable;
            });
  os << "k,s,measured,envelope,ratio\n";
  for (const auto& smp : samples) {
    if (!smp.stable && smp.separation == 0.0) continue;
    const double env = r * r * (smp.stable ? 1.0 : 2.0 * M * M) *
                       std::pow(double(smp.k + 1), -omega) *
                       std::pow(double(smp.l + 1), omega) *
                       std::pow(mu, smp.separation);
    os << smp.k << "," << smp.l << "," << format_double(smp.norm) << ","
       << format_double(env) << "," << format_double(smp.norm / env) << "\n";
  }
}

void write_outcome_csv(std::ostream& os, const PseudoOrbit& po,
                       const ShadowingOutcome& out) {
  os << "k,x1,x2,dist,envelope,ratio\n";
  for (long k = po.window.lo; k <= po.window.hi; ++k) {
    const std::size_t i = po.window.offset(k);
    const Point& x = po.at(k);
    const double envelope =
        out.L_used * out.d_used / weight_of(k, out.gamma);
    os << k << "," << format_double(x(0)) << "," << format_double(x(1)) << ","
       << format_double(out.distances[i]) << "," << format_double(envelope)
       << "," << format_double(out.distances[i] / envelope) << "\n";
  }
}

}  // namespace dicho
