#include "dicho/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include "dicho/dichotomy.hpp"
#include "dicho/errors.hpp"
#include "dicho/perron.hpp"
#include "dicho/rng.hpp"

namespace dicho {

namespace {

constexpr double kDelta = 0.1;        // chart ball radius for the solver
constexpr long kAnchorSpacing = 16;   // segment length for re-verification
constexpr double kEnvelopeFloor = 1e-12;  // fp floor for zero-error envelopes
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point perturbation(const TorusMap& m, const Point& x) {
  if (m.epsilon == 0.0) return Point::Zero();
  return m.epsilon * Point(std::sin(kTwoPi * x(1)), std::sin(kTwoPi * x(0)));
}

Mat2 perturbation_derivative(const TorusMap& m, const Point& x) {
  if (m.epsilon == 0.0) return Mat2::Zero();
  Mat2 d;
  d << 0.0, std::cos(kTwoPi * x(1)), std::cos(kTwoPi * x(0)), 0.0;
  return kTwoPi * m.epsilon * d;
}

Mat2 integer_inverse(const Mat2& m) {
  const double det = m.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-12)
    throw DomainError("torus map matrix must have |det| = 1");
  Mat2 adj;
  adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return adj / det;
}

}  // namespace

double TorusMap::dpert_lipschitz() const { return kTwoPi * kTwoPi * epsilon; }

TorusMap make_cat_map() {
  TorusMap m;
  m.kind = TorusMap::Kind::cat;
  m.matrix << 2, 1, 1, 1;
  m.matrix_inv = integer_inverse(m.matrix);
  m.epsilon = 0.0;
  m.wrap = true;
  return m;
}

TorusMap make_perturbed_cat_map(double epsilon) {
  TorusMap m = make_cat_map();
  m.kind = TorusMap::Kind::perturbed_cat;
  m.epsilon = epsilon;
  return m;
}

TorusMap make_linear_map(const Mat2& mat) {
  TorusMap m;
  m.kind = TorusMap::Kind::linear;
  m.matrix = mat;
  if (std::abs(mat.determinant()) < 1e-12)
    throw DomainError("linear map must be invertible");
  m.matrix_inv = mat.inverse();
  m.epsilon = 0.0;
  m.wrap = false;
  return m;
}

Point wrap_point(const TorusMap& m, Point x) {
  if (!m.wrap) return x;
  for (int i = 0; i < 2; ++i) x(i) -= std::floor(x(i));
  return x;
}

Point nearest_lift(const TorusMap& m, Point diff) {
  if (!m.wrap) return diff;
  for (int i = 0; i < 2; ++i) diff(i) -= std::round(diff(i));
  return diff;
}

double map_dist(const TorusMap& m, const Point& a, const Point& b) {
  return nearest_lift(m, a - b).norm();
}

Point map_step(const TorusMap& m, const Point& x) {
  return wrap_point(m, m.matrix * x + perturbation(m, x));
}

Mat2 map_derivative(const TorusMap& m, const Point& x) {
  return m.matrix + perturbation_derivative(m, x);
}

Point map_inverse_step(const TorusMap& m, const Point& x) {
  Point y = m.matrix_inv * x;
  if (m.epsilon != 0.0) {
    for (int iter = 0; iter < 200; ++iter) {
      const Point next = m.matrix_inv * (x - perturbation(m, y));
      if ((next - y).norm() < 1e-12) {
        y = next;
        break;
      }
      y = next;
    }
  }
  return wrap_point(m, y);
}

PseudoOrbit generate_pseudo_orbit(const TorusMap& m, Point x0,
                                  IndexWindow window, double d, double gamma,
                                  std::uint64_t seed) {
  if (!window.contains(0))
    throw ZeroNotInWindow("pseudo-orbit window must contain 0");
  if (d >= 0.25 || d < 0.0)
    throw DomainError("pseudo-orbit error scale must satisfy 0 <= d < 0.25");

  PseudoOrbit po;
  po.window = window;
  po.d = d;
  po.gamma = gamma;
  po.seed = seed;
  po.points.assign(static_cast<std::size_t>(window.length()), Point::Zero());
  po.points[window.offset(0)] = wrap_point(m, x0);

  std::mt19937_64 gen(seed);
  auto draw_error = [&](double bound) {
    const double angle = kTwoPi * uniform01(gen);
    const double mag = bound * uniform01(gen);
    return Point(mag * std::cos(angle), mag * std::sin(angle));
  };

  // forward: the step k -> k+1 carries error below d (|k|+1)^{-gamma}
  for (long k = 0; k < window.hi; ++k) {
    const Point next = map_step(m, po.at(k));
    const Point e =
        d > 0.0 ? draw_error(d * std::pow(double(k) + 1.0, -gamma))
                : Point::Zero();
    po.points[window.offset(k + 1)] = wrap_point(m, next + e);
  }
  // backward: pick the error in the image so dist(f(x_{k-1}), x_k) is the
  // drawn magnitude exactly, then pull back through the exact inverse
  for (long k = 0; k > window.lo; --k) {
    const double bound = d * std::pow(double(-(k - 1)) + 1.0, -gamma);
    const Point e = d > 0.0 ? draw_error(bound * (1.0 - 1e-9)) : Point::Zero();
    po.points[window.offset(k - 1)] =
        map_inverse_step(m, wrap_point(m, po.at(k) - e));
  }
  return po;
}

LinearCocycle orbit_cocycle(const TorusMap& m, Point p, IndexWindow window) {
  if (!window.contains(0))
    throw ZeroNotInWindow("orbit cocycle window must contain 0");
  std::vector<Point> orbit(static_cast<std::size_t>(window.length()));
  orbit[window.offset(0)] = wrap_point(m, p);
  for (long k = 0; k < window.hi; ++k)
    orbit[window.offset(k + 1)] = map_step(m, orbit[window.offset(k)]);
  for (long k = 0; k > window.lo; --k)
    orbit[window.offset(k - 1)] = map_inverse_step(m, orbit[window.offset(k)]);

  std::vector<Matrix> maps;
  maps.reserve(window.length() - 1);
  for (long k = window.lo; k < window.hi; ++k)
    maps.push_back(map_derivative(m, orbit[window.offset(k)]));
  return make_cocycle(maps, window);
}

namespace {

/// Property (C) data for the lifted pseudo-orbit system: the exact
/// eigensplitting for an unperturbed symmetric integer matrix, the
/// estimated one otherwise.
PropertyCData pseudo_orbit_property_c(const TorusMap& m,
                                      const LinearCocycle& c) {
  const bool symmetric =
      (m.matrix - m.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0;
  if (m.epsilon == 0.0 && symmetric) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(m.matrix);
    const double mu_s = eig.eigenvalues()(0);
    const double mu_u = eig.eigenvalues()(1);
    if (std::abs(mu_s) < 1.0 && std::abs(mu_u) > 1.0) {
      const Eigen::Vector2d vs = eig.eigenvectors().col(0);
      const Eigen::Vector2d vu = eig.eigenvectors().col(1);
      PropertyCData data;
      data.window = c.window();
      data.projections.assign(static_cast<std::size_t>(c.window().length()),
                              Matrix(vs * vs.transpose()));
      data.right_inverses.assign(
          static_cast<std::size_t>(c.window().length() - 1),
          Matrix(vu * (1.0 / mu_u) * vu.transpose()));
      // the projector norms are exactly 1; the declared bound leaves room
      // for the gamma-weighted index shift of the offsets, which the
      // nominal constants do not account for
      data.N = 1.25;
      data.lambda =
          std::max(std::abs(mu_s), 1.0 / std::abs(mu_u)) * (1.0 + 1e-9);
      return data;
    }
  }
  return property_c_from_splitting(c, estimate_splitting(c));
}

/// Chart maps along the pseudo-orbit: F_k(v) = lift(f(x_k + v) - x_{k+1});
/// exp is translation on the flat torus, so the offset c_k = F_k(0) and
/// w_{k+1}(v) = F_k(v) - A_k v = pert(x_k + v) - pert(x_k)
///              - Dpert(x_k) v + c_k.
struct ChartSystem {
  const TorusMap* map;
  const PseudoOrbit* po;
  std::vector<Point> offsets;  // c_k, one per step

  Vector w(long j, const Vector& v) const {
    const IndexWindow w_ = po->window;
    if (j <= w_.lo || j > w_.hi) return Vector::Zero(2);
    const long k = j - 1;
    const Point xk = po->at(k);
    const Point vv(v(0), v(1));
    const Point out = perturbation(*map, xk + vv) - perturbation(*map, xk) -
                      perturbation_derivative(*map, xk) * vv +
                      offsets[w_.offset(k)];
    return Vector(out);
  }
};

ChartSystem make_chart_system(const TorusMap& m, const PseudoOrbit& po) {
  ChartSystem cs{&m, &po, {}};
  cs.offsets.resize(static_cast<std::size_t>(po.window.length()),
                    Point::Zero());
  for (long k = po.window.lo; k < po.window.hi; ++k)
    cs.offsets[po.window.offset(k)] =
        nearest_lift(m, map_step(m, po.at(k)) - po.at(k + 1));
  return cs;
}

/// Segment-wise recomputation of dist(x_k, f^k(p)): forward/backward map
/// iteration restarted every kAnchorSpacing indices from the claimed orbit
/// points (the segment through 0 starts from p itself).
std::vector<double> recompute_distances(const TorusMap& m,
                                        const PseudoOrbit& po,
                                        const ShadowingOutcome& out) {
  const IndexWindow w = po.window;
  std::vector<double> dist(static_cast<std::size_t>(w.length()), 0.0);
  auto claimed = [&](long k) {
    const Vector& vk = out.v.at(k);
    return wrap_point(m, po.at(k) + Point(vk(0), vk(1)));
  };

  // each segment iterates up to and including the next anchor, so anchors
  // are cross-checked against the previous segment before restarting
  Point y = wrap_point(m, out.p);
  dist[w.offset(0)] = map_dist(m, po.at(0), y);
  for (long k = 1; k <= w.hi; ++k) {
    y = map_step(m, y);
    dist[w.offset(k)] = map_dist(m, po.at(k), y);
    if (k % kAnchorSpacing == 0) y = claimed(k);
  }
  y = wrap_point(m, out.p);
  for (long k = -1; k >= w.lo; --k) {
    y = map_inverse_step(m, y);
    dist[w.offset(k)] = map_dist(m, po.at(k), y);
    if ((-k) % kAnchorSpacing == 0) y = claimed(k);
  }
  return dist;
}

}  // namespace

ShadowingOutcome shadow_orbit(const TorusMap& m, const PseudoOrbit& po) {
  const IndexWindow w = po.window;
  LinearCocycle c = [&] {
    std::vector<Matrix> maps;
    maps.reserve(w.length() - 1);
    for (long k = w.lo; k < w.hi; ++k)
      maps.push_back(map_derivative(m, po.at(k)));
    return make_cocycle(maps, w);
  }();

  PropertyCData data = pseudo_orbit_property_c(m, c);
  const double kappa = m.dpert_lipschitz() * kDelta;
  const ShadowingConstants consts =
      shadowing_constants(data.N, data.lambda, kappa, kDelta);
  if (po.d > consts.d0)
    throw DomainError("pseudo-orbit error scale d = " + std::to_string(po.d) +
                      " exceeds d0 = " + std::to_string(consts.d0));

  ChartSystem chart = make_chart_system(m, po);
  NonlinearSequenceSystem sys = make_nonlinear_system(
      std::move(c), [&chart](long j, const Vector& v) { return chart.w(j, v); },
      kappa, kDelta, po.gamma, /*samples=*/1000, /*seed=*/0x5eed);

  ShadowFixResult fix = solve_nonlinear(sys, data, po.gamma, consts);

  ShadowingOutcome out;
  out.v = std::move(fix.v);
  out.iterations = fix.iterations;
  out.contraction_observed = fix.contraction_observed;
  out.L_used = consts.L;
  out.d_used = po.d;
  out.gamma = po.gamma;
  const Vector& v0 = out.v.at(0);
  out.p = wrap_point(m, po.at(0) + Point(v0(0), v0(1)));
  out.distances.resize(static_cast<std::size_t>(w.length()));
  out.certified = true;
  for (long k = w.lo; k <= w.hi; ++k) {
    const double dk = out.v.at(k).norm();
    out.distances[w.offset(k)] = dk;
    if (dk * weight_of(k, po.gamma) >
        std::max(out.L_used * po.d, kEnvelopeFloor))
      out.certified = false;
  }

  const auto recomputed = recompute_distances(m, po, out);
  for (long k = w.lo; k <= w.hi; ++k) {
    const double dis = std::abs(recomputed[w.offset(k)] - out.distances[w.offset(k)]);
    if (dis > 1e-6)
      throw VerificationFailed(
          "recomputed distance disagrees with |v_k| by " + std::to_string(dis) +
          " at k = " + std::to_string(k));
  }
  return out;
}

ShadowVerifyReport verify_shadowing(const TorusMap& m, const PseudoOrbit& po,
                                    const ShadowingOutcome& out) {
  const IndexWindow w = po.window;
  const auto recomputed = recompute_distances(m, po, out);
  ShadowVerifyReport rep;
  for (long k = w.lo; k <= w.hi; ++k) {
    const std::size_t i = w.offset(k);
    const double envelope = std::max(
        out.L_used * out.d_used / weight_of(k, out.gamma), kEnvelopeFloor);
    rep.max_ratio = std::max(rep.max_ratio, recomputed[i] / envelope);
    rep.max_disagreement = std::max(
        rep.max_disagreement, std::abs(recomputed[i] - out.distances[i]));
  }
  rep.passed = rep.max_ratio <= 1.0 && rep.max_disagreement <= 1e-6;
  return rep;
}

AdmissibilityReport admissibility_probe(const TorusMap& m, Point p,
                                        IndexWindow window, double gamma,
                                        int trials, std::uint64_t seed,
                                        int jobs) {
  if (!window.contains(0))
    throw ZeroNotInWindow("admissibility probe window must contain 0");
  AdmissibilityReport rep;

  LinearCocycle c = orbit_cocycle(m, p, window);
  const Matrix bplus = decaying_subspace(c, Direction::forward, 0.01);
  const Matrix bminus = decaying_subspace(c, Direction::backward, 0.01);
  const SubspacePair pair = make_subspace_pair(bplus, bminus);
  const TransversalityResult tr = transversality_check(pair, c.dim());
  rep.transverse = tr.transverse;
  rep.angle = tr.angle;
  if (!tr.transverse) rep.note = "decaying subspaces do not span";

  if (window.lo >= 0 || window.hi <= 0) {
    rep.transverse = false;
    if (rep.note.empty()) rep.note = "window does not straddle 0";
    return rep;
  }

  // Perron trials through the full-line Green's machinery.
  try {
    const DichotomySplitting s_plus =
        estimate_splitting(restrict_cocycle(c, IndexWindow(0, window.hi)));
    const DichotomySplitting s_minus =
        estimate_splitting(restrict_cocycle(c, IndexWindow(window.lo, 0)));

    std::mt19937_64 gen(seed);
    std::vector<WeightedSeq> zs;
    zs.reserve(trials);
    for (int t = 0; t < trials; ++t) {
      WeightedSeq z = zero_seq(window, c.dim(), gamma);
      for (long k = window.lo; k <= window.hi; ++k) {
        Vector dir(c.dim());
        for (int i = 0; i < c.dim(); ++i) dir(i) = 2.0 * uniform01(gen) - 1.0;
        const double len = dir.norm();
        if (len > 0.0)
          dir *= uniform01(gen) / (len * weight_of(k, gamma));
        z.at(k) = dir;
      }
      zs.push_back(std::move(z));
    }

    rep.trial_norms.assign(trials, 0.0);
    std::vector<std::string> failures(trials);
    auto run_trial = [&](int t) {
      try {
        rep.trial_norms[static_cast<std::size_t>(t)] =
            solve_fullline(c, s_plus, s_minus, zs[static_cast<std::size_t>(t)])
                .norm_omega;
      } catch (const Error& e) {
        failures[static_cast<std::size_t>(t)] = e.what();
      }
    };
    if (jobs <= 1) {
      for (int t = 0; t < trials; ++t) run_trial(t);
    } else {
      std::vector<std::future<void>> futs;
      std::atomic<int> next{0};
      const int workers = std::min(jobs, std::max(trials, 1));
      for (int i = 0; i < workers; ++i)
        futs.push_back(std::async(std::launch::async, [&]() {
          for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
            run_trial(t);
        }));
      for (auto& f : futs) f.get();
    }
    for (int t = 0; t < trials; ++t) {
      if (!failures[static_cast<std::size_t>(t)].empty()) {
        ++rep.failed_trials;
        if (rep.note.empty()) rep.note = failures[static_cast<std::size_t>(t)];
      } else {
        rep.max_solution_norm =
            std::max(rep.max_solution_norm,
                     rep.trial_norms[static_cast<std::size_t>(t)]);
      }
    }
    if (rep.failed_trials > 0) rep.transverse = false;
  } catch (const Error& e) {
    rep.transverse = false;
    rep.note = e.what();
  }
  return rep;
}

}  // namespace dicho
