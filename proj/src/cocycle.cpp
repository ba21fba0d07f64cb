#include "dicho/cocycle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <string>
#include <utility>

#include "dicho/errors.hpp"

namespace dicho {

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

LinearCocycle::LinearCocycle(int dim, IndexWindow window,
                             std::vector<Matrix> maps,
                             std::vector<Matrix> inverses, double norm_bound,
                             TransitionTable table, bool overflow)
    : dim_(dim),
      window_(window),
      maps_(std::move(maps)),
      inverses_(std::move(inverses)),
      norm_bound_(norm_bound),
      table_(std::move(table)),
      overflow_(overflow) {}

const Matrix& LinearCocycle::map(long k) const {
  if (k < window_.lo || k > window_.hi - 1)
    throw IndexOutOfWindow("map index " + std::to_string(k) +
                           " outside [" + std::to_string(window_.lo) + "," +
                           std::to_string(window_.hi - 1) + "]");
  return maps_[static_cast<std::size_t>(k - window_.lo)];
}

const Matrix& LinearCocycle::inverse(long k) const {
  if (k < window_.lo || k > window_.hi - 1)
    throw IndexOutOfWindow("inverse index " + std::to_string(k) +
                           " outside [" + std::to_string(window_.lo) + "," +
                           std::to_string(window_.hi - 1) + "]");
  return inverses_[static_cast<std::size_t>(k - window_.lo)];
}

Matrix LinearCocycle::transition(long m, long l) const {
  const std::size_t im = window_.offset(m);
  const std::size_t il = window_.offset(l);
  if (m == l) return Matrix::Identity(dim_, dim_);
  return table_.prefix[im] * table_.prefix_inv[il];
}

LinearCocycle make_cocycle(const std::vector<Matrix>& matrices,
                           IndexWindow window, const Tolerances& tol) {
  const long steps = window.length() - 1;
  if (static_cast<long>(matrices.size()) != steps)
    throw DimensionMismatch("expected " + std::to_string(steps) +
                            " matrices for window, got " +
                            std::to_string(matrices.size()));
  if (matrices.empty())
    throw DimensionMismatch("cocycle needs at least one map");

  const int d = static_cast<int>(matrices.front().rows());
  std::vector<Matrix> maps(matrices.begin(), matrices.end());
  std::vector<Matrix> inverses;
  inverses.reserve(maps.size());

  double bound = 1.0;  // ||A|| * ||A^-1|| >= 1 forces M >= 1
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Matrix& a = maps[i];
    if (a.rows() != d || a.cols() != d)
      throw DimensionMismatch("map " + std::to_string(i) +
                              " is not " + std::to_string(d) + "x" +
                              std::to_string(d));
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible())
      throw SingularMatrix(window.lo + static_cast<long>(i),
                           "map at index " +
                               std::to_string(window.lo + static_cast<long>(i)) +
                               " is singular");
    Matrix inv = lu.inverse();
    const double defect =
        (a * inv - Matrix::Identity(d, d)).norm();
    if (defect > tol.invertibility)
      throw SingularMatrix(window.lo + static_cast<long>(i),
                           "map at index " +
                               std::to_string(window.lo + static_cast<long>(i)) +
                               " fails invertibility tolerance (defect " +
                               std::to_string(defect) + ")");
    bound = std::max(bound, std::max(spectral_norm(a), spectral_norm(inv)));
    inverses.push_back(std::move(inv));
  }

  TransitionTable table;
  table.prefix.reserve(window.length());
  table.prefix_inv.reserve(window.length());
  table.prefix.push_back(Matrix::Identity(d, d));
  table.prefix_inv.push_back(Matrix::Identity(d, d));
  bool overflow = false;
  for (long i = 0; i < steps; ++i) {
    table.prefix.push_back(maps[i] * table.prefix[i]);
    table.prefix_inv.push_back(table.prefix_inv[i] * inverses[i]);
    const double n1 = table.prefix.back().cwiseAbs().maxCoeff();
    const double n2 = table.prefix_inv.back().cwiseAbs().maxCoeff();
    if (n1 > tol.overflow_norm || n2 > tol.overflow_norm) overflow = true;
  }

  return LinearCocycle(d, window, std::move(maps), std::move(inverses), bound,
                       std::move(table), overflow);
}

LinearCocycle restrict_cocycle(const LinearCocycle& c, IndexWindow sub) {
  if (sub.lo < c.window().lo || sub.hi > c.window().hi)
    throw WindowMismatch("sub-window not contained in cocycle window");
  std::vector<Matrix> maps;
  maps.reserve(sub.length() - 1);
  for (long k = sub.lo; k < sub.hi; ++k) maps.push_back(c.map(k));
  return make_cocycle(maps, sub);
}

LinearCocycle time_reversed(const LinearCocycle& c) {
  const IndexWindow w = c.window();
  std::vector<Matrix> maps;
  maps.reserve(w.length() - 1);
  // reversed index j in [-hi, -lo-1] uses A_{-j-1}^{-1}
  for (long j = -w.hi; j < -w.lo; ++j) maps.push_back(c.inverse(-j - 1));
  return make_cocycle(maps, IndexWindow(-w.hi, -w.lo));
}

}  // namespace dicho
