#pragma once

#include "dicho/cocycle.hpp"
#include "dicho/dichotomy.hpp"
#include "dicho/weighted.hpp"

namespace dicho {

/// Solution of the inhomogeneous equation x_{k+1} = A_k x_k + f_{k+1}
/// produced by the Green's-function formula, with its weighted norm, the
/// max residual of direct substitution and the recorded bound on the
/// truncated infinite tail.
struct PerronSolution {
  WeightedSeq y;
  double norm_omega = 0.0;
  double residual = 0.0;
  double truncation_bound = 0.0;
};

/// Green's-formula solution on a half-line window [0, hi]:
///   y_k = sum_{u=0}^{k} Phi_{k,u} P_u f_u - sum_{u=k+1}^{hi} Phi_{k,u} Q_u f_u,
/// evaluated by the stable forward/backward recursions with invariant
/// re-projection. Requires f_0 = 0 (half-line convention).
PerronSolution solve_halfline(const LinearCocycle& c,
                              const DichotomySplitting& s,
                              const WeightedSeq& f);

/// Envelope certificate for the two Green's-function bounds
///   ||Phi_{k,s} P_s|| <= r^2 (k+1)^{-omega} (s+1)^omega mu^{k-s}, 0 <= s <= k,
///   ||Phi_{k,s} Q_s|| <= 2 r^2 M^2 (k+1)^{-omega} (s+1)^omega mu^{s-k}, 0 <= k < s.
/// Ratios are max measured/envelope over all admissible pairs. Pass r <= 0
/// to fit the least r >= 1 making both ratios <= 1; r_half_window repeats
/// the fit on the first half of the window so divergence with window
/// growth is visible (r_stable flags a fit that moved less than 10%).
struct GreenBoundsReport {
  double mu = 0.0;
  double r = 0.0;
  double max_stable_ratio = 0.0;
  double max_unstable_ratio = 0.0;
  double M = 0.0;
  double r_half_window = 0.0;
  bool r_stable = true;
  bool overflow_warning = false;
};

GreenBoundsReport green_bounds(const LinearCocycle& c,
                               const DichotomySplitting& s, double omega,
                               double mu, double r = -1.0, int jobs = 1);

/// max over k in [0, k_max] of
///   (k+1)^omega ( sum_{u=0}^{k} lambda^{k-u} (u+1)^{-omega}
///               + sum_{u>k} lambda^{u-k} (u+1)^{-omega} ),
/// the admissibility constant of the weighted series bound; the infinite
/// tail is summed until terms fall below 1e-16 relative. argmax reported
/// for diagnostics.
struct SeriesConstant {
  double value = 0.0;
  long argmax = 0;
};

SeriesConstant series_constant(double lambda, double omega, long k_max);

/// Full-line solve via the two half-line solutions glued at 0: the
/// positive ray takes f_k for k >= 1, the negative ray (solved through the
/// time-reversed cocycle) consumes f_k for k <= 0. When the ray solutions
/// disagree at 0, homogeneous corrections phi+ in S_0^+ and phi- in U_0^-
/// are found by least squares over the decaying bases; throws
/// GluingNotSolvable when the bases cannot span the mismatch.
PerronSolution solve_fullline(const LinearCocycle& c,
                              const DichotomySplitting& s_plus,
                              const DichotomySplitting& s_minus,
                              const WeightedSeq& f);

/// Witness inhomogeneity f_i = a (i+1)^{-omega} Phi_{i,0} eta / |Phi_{i,0} eta|
/// for i >= 0 (zero for i < 0), with eta a unit vector in the unstable
/// space at 0. Feeding it to window_min_norm_solution exhibits divergence
/// of windowed minima when the decaying subspaces are nontransverse.
WeightedSeq theta_witness(const LinearCocycle& c,
                          const DichotomySplitting& s_plus, Vector eta,
                          double omega, double a);

/// Companion sequence theta_k = -sum_{i=k+1}^{hi} Phi_{k,i} f_i.
WeightedSeq theta_sequence(const LinearCocycle& c, const WeightedSeq& f);

/// Minimizer of the weighted l2 proxy sum_k (|x_k| (|k|+1)^omega)^2 over
/// the affine family {particular + Phi_{.,lo} v : v in R^d}; min_norm is
/// the weighted sup-norm of the minimizer. Bounded minima under window
/// growth witness admissibility, divergence witnesses its failure.
struct MinNormSolution {
  WeightedSeq solution;
  double min_norm = 0.0;
};

MinNormSolution window_min_norm_solution(const LinearCocycle& c,
                                         const WeightedSeq& f, double omega);

}  // namespace dicho
