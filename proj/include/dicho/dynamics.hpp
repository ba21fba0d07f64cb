#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dicho/cocycle.hpp"
#include "dicho/shadowing.hpp"
#include "dicho/weighted.hpp"

namespace dicho {

using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Demo dynamical system on the flat torus [0,1)^2 (kinds cat /
/// perturbed_cat) or on the Euclidean plane (kind linear, no wrapping).
/// The linear part is an integer matrix with |det| = 1 on the torus; the
/// perturbation is eps * (sin(2 pi x2), sin(2 pi x1)), 1-periodic, with
/// ||D pert|| <= 2 pi eps and Lipschitz constant 4 pi^2 eps for D pert.
struct TorusMap {
  enum class Kind { cat, linear, perturbed_cat };
  Kind kind = Kind::cat;
  Mat2 matrix = Mat2::Identity();
  Mat2 matrix_inv = Mat2::Identity();
  double epsilon = 0.0;
  bool wrap = true;

  double dpert_lipschitz() const;
};

TorusMap make_cat_map();
TorusMap make_perturbed_cat_map(double epsilon);
TorusMap make_linear_map(const Mat2& m);

Point wrap_point(const TorusMap& m, Point x);
/// Nearest lift of a coordinate difference (componentwise into [-1/2, 1/2)
/// on the torus; identity on the plane).
Point nearest_lift(const TorusMap& m, Point diff);
double map_dist(const TorusMap& m, const Point& a, const Point& b);

Point map_step(const TorusMap& m, const Point& x);
Mat2 map_derivative(const TorusMap& m, const Point& x);
/// Exact inverse (integer inverse matrix; fixed-point solve to 1e-12 for
/// the perturbed kind).
Point map_inverse_step(const TorusMap& m, const Point& x);

/// gamma-decreasing d-pseudotrajectory: dist(x_{k+1}, f(x_k)) <
/// d (|k|+1)^{-gamma} for all interior k, by construction.
struct PseudoOrbit {
  IndexWindow window;
  std::vector<Point> points;
  double d = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;

  const Point& at(long k) const { return points[window.offset(k)]; }
};

/// Iterates forward from x0 over [0,hi] and backward over [lo,0] via the
/// exact inverse, adding seeded uniform errors below the decaying bound.
PseudoOrbit generate_pseudo_orbit(const TorusMap& m, Point x0,
                                  IndexWindow window, double d, double gamma,
                                  std::uint64_t seed);

struct ShadowingOutcome {
  Point p = Point::Zero();           // shadowing orbit seed
  std::vector<double> distances;     // dist(x_k, f^k(p)) = |v_k|
  double L_used = 0.0;
  double d_used = 0.0;
  double gamma = 0.0;
  bool certified = false;
  WeightedSeq v;                     // the correction sequence
  int iterations = 0;
  double contraction_observed = 0.0;
};

/// Lifts the pseudo-orbit to the sequence space, solves the perturbed
/// difference equation by the contraction solver and re-verifies the
/// claimed distances segment-wise. certified iff
/// dist(x_k, f^k(p)) <= L d (|k|+1)^{-gamma} for all k.
ShadowingOutcome shadow_orbit(const TorusMap& m, const PseudoOrbit& po);

struct ShadowVerifyReport {
  double max_ratio = 0.0;         // recomputed distance / envelope
  double max_disagreement = 0.0;  // recomputed distance vs |v_k|
  bool passed = false;
};

/// Recomputes dist(x_k, f^k(p)) by segment-wise iteration from verified
/// anchors (f^k is exponentially ill-conditioned, so monolithic
/// recomputation is meaningless past a few dozen steps) and checks the
/// shadowing envelope.
ShadowVerifyReport verify_shadowing(const TorusMap& m, const PseudoOrbit& po,
                                    const ShadowingOutcome& out);

struct AdmissibilityReport {
  bool transverse = false;  // overall verdict
  double angle = 0.0;       // smallest principal angle of B+ vs B-
  double max_solution_norm = 0.0;
  int failed_trials = 0;
  std::vector<double> trial_norms;
  std::string note;  // reason for a negative verdict
};

/// Numerical probe of the analytic transversality condition along the
/// orbit of p: estimates the decaying subspaces of the orbit cocycle,
/// checks their transversality, and solves `trials` random weighted
/// inhomogeneous systems through the full-line Green's machinery.
/// Estimation/gluing failures yield a negative verdict, not an exception.
AdmissibilityReport admissibility_probe(const TorusMap& m, Point p,
                                        IndexWindow window, double gamma,
                                        int trials, std::uint64_t seed,
                                        int jobs = 1);

/// Orbit cocycle A_k = Df(f^k(p)) over the window.
LinearCocycle orbit_cocycle(const TorusMap& m, Point p, IndexWindow window);

}  // namespace dicho
