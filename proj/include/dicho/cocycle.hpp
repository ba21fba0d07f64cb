#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dicho/tolerances.hpp"
#include "dicho/window.hpp"

namespace dicho {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spectral operator norm (largest singular value). Returns 0 for empty.
double spectral_norm(const Matrix& m);

/// Cached prefix products of a cocycle:
///   prefix[i]     = Phi_{lo+i, lo}
///   prefix_inv[i] = Phi_{lo, lo+i}
/// Built once at construction; immutable afterwards.
struct TransitionTable {
  std::vector<Matrix> prefix;
  std::vector<Matrix> prefix_inv;
};

/// A finite window of linear isomorphisms A_k of R^d, k in [lo, hi-1],
/// together with their inverses, the uniform norm bound
/// M = max_k max(||A_k||, ||A_k^-1||) and the cached transition table.
/// Immutable after construction; safe to share across threads.
class LinearCocycle {
 public:
  LinearCocycle(int dim, IndexWindow window, std::vector<Matrix> maps,
                std::vector<Matrix> inverses, double norm_bound,
                TransitionTable table, bool overflow);

  int dim() const { return dim_; }
  const IndexWindow& window() const { return window_; }
  double norm_bound() const { return norm_bound_; }

  /// True when some cached transition norm exceeds the overflow threshold;
  /// reports downstream carry this flag (envelopes are unreliable there).
  bool overflow_flagged() const { return overflow_; }

  /// A_k, defined for k in [lo, hi-1].
  const Matrix& map(long k) const;
  /// A_k^{-1}, defined for k in [lo, hi-1].
  const Matrix& inverse(long k) const;

  /// Transition operator Phi_{m,l}:
  ///   A_{m-1} o ... o A_l        (m > l)
  ///   Id                         (m = l)
  ///   A_m^{-1} o ... o A_{l-1}^{-1}  (m < l)
  /// Computed as prefix[m] * prefix_inv[l]; O(d^3) per query.
  Matrix transition(long m, long l) const;

  const TransitionTable& table() const { return table_; }

 private:
  int dim_;
  IndexWindow window_;
  std::vector<Matrix> maps_;
  std::vector<Matrix> inverses_;
  double norm_bound_;
  TransitionTable table_;
  bool overflow_;
};

/// Builds a cocycle from the maps on window [lo, hi] (list length must be
/// hi - lo). Computes inverses, a tight norm bound M and the transition
/// table. Throws SingularMatrix / DimensionMismatch.
LinearCocycle make_cocycle(const std::vector<Matrix>& matrices,
                           IndexWindow window, const Tolerances& tol = {});

/// Sub-cocycle on a window contained in the original one.
LinearCocycle restrict_cocycle(const LinearCocycle& c, IndexWindow sub);

/// Time-reversed cocycle: window [lo,hi] maps to [-hi,-lo] with
/// A~_j = A_{-j-1}^{-1}, so x~_j = x_{-j} turns solutions of the original
/// homogeneous equation into solutions of the reversed one.
LinearCocycle time_reversed(const LinearCocycle& c);

}  // namespace dicho
