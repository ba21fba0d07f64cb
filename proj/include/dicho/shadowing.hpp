#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dicho/cocycle.hpp"
#include "dicho/dichotomy.hpp"
#include "dicho/weighted.hpp"

namespace dicho {

/// Property (C) data: projections P_k (Q_k = I - P_k derived) with norms
/// bounded by N, forward contraction of A_k on S_k by lambda, and right
/// inverses B_k of A_k restricted to U_{k+1} (contraction by lambda,
/// mapped back into U_k). B_k lives at index k (one per step), as a full
/// d x d matrix acting through the orthogonal projection onto U_{k+1}.
struct PropertyCData {
  IndexWindow window;
  std::vector<Matrix> projections;     // window.length() entries
  std::vector<Matrix> right_inverses;  // window.length() - 1 entries
  double N = 1.0;
  double lambda = 0.5;

  const Matrix& P(long k) const { return projections[window.offset(k)]; }
  Matrix Q(long k) const {
    const Matrix& p = P(k);
    return Matrix::Identity(p.rows(), p.cols()) - p;
  }
  const Matrix& B(long k) const;
};

struct PropertyCReport {
  bool passed = false;
  double worst_projector_norm = 0.0;      // vs N
  double worst_stable_contraction = 0.0;  // ||A_k restricted to S_k|| vs lambda
  double worst_inclusion_defect = 0.0;    // A_k S_k subset S_{k+1}
  double worst_inverse_norm = 0.0;        // ||B_k restricted to U_{k+1}|| vs lambda
  double worst_inverse_range_defect = 0.0;    // B_k U_{k+1} subset U_k
  double worst_inverse_identity_defect = 0.0; // A_k B_k = I on U_{k+1}
};

PropertyCReport verify_property_C(const LinearCocycle& c,
                                  const PropertyCData& data,
                                  const Tolerances& tol = {});

/// Builds property (C) data from a dichotomy splitting, with B_k the
/// pseudo-inverse of A_k restricted to U_{k+1} mapped into U_k, and (N,
/// lambda) the measured constants inflated by 1e-6.
PropertyCData property_c_from_splitting(const LinearCocycle& c,
                                        const DichotomySplitting& s);

/// N1 = N (1+lambda)/(1-lambda), L = N1/(1 - kappa N1), d0 = Delta / L.
/// Throws NotContraction when kappa N1 >= 1.
struct ShadowingConstants {
  double N1 = 0.0;
  double L = 0.0;
  double d0 = 0.0;
  double kappa = 0.0;
  double Delta = 0.0;
  double N = 0.0;
  double lambda = 0.0;
};

ShadowingConstants shadowing_constants(double N, double lambda, double kappa,
                                       double Delta);

/// The linear solution operator G of the perturbed difference equation:
///   (g1(z))_k = sum_{u<=k} A_{k-1}...A_u P_u z_u
///   (g2(z))_k = -sum_{u>k} B_k...B_{u-1} Q_u z_u
/// truncated at the window edges (tail_bound records the dropped part).
/// Satisfies (Gz)_{k+1} - A_k (Gz)_k = z_{k+1} at interior indices.
struct GreenApplied {
  WeightedSeq y;
  double tail_bound = 0.0;
};

GreenApplied green_apply(const WeightedSeq& z, const LinearCocycle& c,
                         const PropertyCData& data, double gamma);

/// Perturbed system f_k(v) = A_k v + w_{k+1}(v): the nonlinearity w is
/// stored by its own index (w(k, .) is the term entering the step into
/// index k), offsets_k = f_k(0) = w(k+1, 0), and kappa is the declared
/// Lipschitz constant of each w_k on the Delta-ball.
struct NonlinearSequenceSystem {
  LinearCocycle cocycle;
  std::function<Vector(long, const Vector&)> w;
  WeightedSeq offsets;
  double kappa = 0.0;
  double Delta = 1.0;
};

/// Assembles the system and spot-checks the declared Lipschitz constant on
/// `samples` random pairs in the Delta-ball (throws DomainError when the
/// sampled ratio exceeds kappa beyond tolerance; samples = 0 skips).
NonlinearSequenceSystem make_nonlinear_system(
    LinearCocycle cocycle, std::function<Vector(long, const Vector&)> w,
    double kappa, double Delta, double gamma, int samples = 1000,
    std::uint64_t seed = 1);

struct ShadowFixResult {
  WeightedSeq v;
  int iterations = 0;
  double contraction_observed = 0.0;
  double final_step_norm = 0.0;
  double norm_gamma = 0.0;
  double residual = 0.0;
};

/// Picard iteration v <- G(h(v)), h(v)_k = w_k(v_{k-1}), from v = 0, in
/// the gamma-weighted norm. Requires ||offsets||_gamma <= d0 and
/// kappa N1 < 1; stops when the weighted step norm drops below tol.
ShadowFixResult solve_nonlinear(const NonlinearSequenceSystem& sys,
                                const PropertyCData& data, double gamma,
                                const ShadowingConstants& consts,
                                double tol = 1e-12, int max_iter = 200);

}  // namespace dicho
