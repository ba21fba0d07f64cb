#include "dicho/perron.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "dicho/errors.hpp"

namespace dicho {

namespace {

double max_residual(const LinearCocycle& c, const WeightedSeq& y,
                    const WeightedSeq& f) {
  double worst = 0.0;
  for (long k = c.window().lo; k < c.window().hi; ++k)
    worst = std::max(worst,
                     (y.at(k + 1) - c.map(k) * y.at(k) - f.at(k + 1)).norm());
  return worst;
}

}  // namespace

PerronSolution solve_halfline(const LinearCocycle& c,
                              const DichotomySplitting& s,
                              const WeightedSeq& f) {
  const IndexWindow w = c.window();
  if (w.lo != 0) throw WindowMismatch("solve_halfline expects window [0, hi]");
  if (!(s.window == w) || !(f.window == w))
    throw WindowMismatch("cocycle/splitting/inhomogeneity windows differ");
  if (f.at(0).norm() > 0.0)
    throw F0NotZero("half-line convention requires f_0 = 0");

  const long hi = w.hi;
  WeightedSeq y = zero_seq(w, c.dim(), f.omega);

  // stable branch: st_k = sum_{u<=k} Phi_{k,u} P_u f_u, forward recursion
  // with re-projection (exact under invariance, keeps rounding out of the
  // expanding directions).
  Vector st = s.P(0) * f.at(0);
  y.at(0) = st;
  std::vector<Vector> stable(static_cast<std::size_t>(w.length()));
  stable[0] = st;
  for (long k = 1; k <= hi; ++k) {
    st = s.P(k) * (c.map(k - 1) * st + f.at(k));
    stable[w.offset(k)] = st;
  }

  // unstable branch: un_k = sum_{u>k} Phi_{k,u} Q_u f_u, backward recursion.
  Vector un = Vector::Zero(c.dim());
  y.at(hi) = stable[w.offset(hi)];
  for (long k = hi - 1; k >= 0; --k) {
    un = s.Q(k) * (c.inverse(k) * (un + s.Q(k + 1) * f.at(k + 1)));
    y.at(k) = stable[w.offset(k)] - un;
  }

  PerronSolution sol;
  sol.y = std::move(y);
  sol.norm_omega = weighted_norm(sol.y);
  sol.residual = max_residual(c, sol.y, f);
  const double fnorm = weighted_norm(f);
  sol.truncation_bound = s.K * s.lambda / (1.0 - s.lambda) * fnorm *
                         std::pow(double(hi + 2), -f.omega);
  return sol;
}

GreenBoundsReport green_bounds(const LinearCocycle& c,
                               const DichotomySplitting& s, double omega,
                               double mu, double r, int jobs) {
  if (!(mu > 0.0 && mu < 1.0))
    throw DomainError("green_bounds: mu must lie in (0,1)");
  if (c.window().lo < 0)
    throw DomainError("green_bounds: window must lie in Z+");
  if (!(c.window() == s.window))
    throw WindowMismatch("cocycle and splitting windows differ");

  const double M = c.norm_bound();
  const auto samples = measure_green_families(c, s, jobs);

  // Least r^2 that makes a sample obey its envelope; unstable samples at
  // separation 0 are outside the theorem's index range (k < s strictly).
  auto needed_r2 = [&](const NormSample& smp) {
    const double polys = std::pow(double(smp.k + 1), omega) *
                         std::pow(double(smp.l + 1), -omega);
    double env = std::pow(mu, smp.separation) / polys;
    if (!smp.stable) env *= 2.0 * M * M;
    return smp.norm / env;
  };

  auto fit = [&](long klim) {
    double worst = 1.0;
    for (const auto& smp : samples) {
      if (smp.k > klim || smp.l > klim) continue;
      if (!smp.stable && smp.separation == 0.0) continue;
      worst = std::max(worst, needed_r2(smp));
    }
    return std::sqrt(worst);
  };

  GreenBoundsReport rep;
  rep.mu = mu;
  rep.M = M;
  rep.overflow_warning = c.overflow_flagged();
  const bool fitted = !(r > 0.0);
  // the least fit sits exactly on the envelope; a hair of inflation keeps
  // the re-evaluated ratios below one
  rep.r = fitted ? fit(c.window().hi) * (1.0 + 1e-12) : r;
  if (rep.r < 1.0 && !fitted)
    throw DomainError("green_bounds: supplied r must satisfy r >= 1");
  rep.r_half_window = fit(c.window().lo + (c.window().hi - c.window().lo) / 2);
  rep.r_stable = std::abs(rep.r - rep.r_half_window) <=
                 0.1 * std::max(rep.r_half_window, 1e-300);

  for (const auto& smp : samples) {
    if (!smp.stable && smp.separation == 0.0) continue;
    const double env = rep.r * rep.r * (smp.stable ? 1.0 : 2.0 * M * M) *
                       std::pow(double(smp.k + 1), -omega) *
                       std::pow(double(smp.l + 1), omega) *
                       std::pow(mu, smp.separation);
    const double ratio = smp.norm / env;
    double& worst = smp.stable ? rep.max_stable_ratio : rep.max_unstable_ratio;
    worst = std::max(worst, ratio);
  }
  return rep;
}

SeriesConstant series_constant(double lambda, double omega, long k_max) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw DomainError("series_constant: lambda must lie in (0,1)");
  if (omega < 0.0) throw DomainError("series_constant: omega must be >= 0");
  if (k_max < 1) throw DomainError("series_constant: k_max must be >= 1");

  SeriesConstant out;
  double prefix = 0.0;  // sum_{u=0}^{k} lambda^{k-u} (u+1)^{-omega}
  for (long k = 0; k <= k_max; ++k) {
    prefix = lambda * prefix + std::pow(double(k + 1), -omega);
    double tail = 0.0;
    for (long j = 1; j < 1000000; ++j) {
      const double term =
          std::pow(lambda, double(j)) * std::pow(double(k + 1 + j), -omega);
      tail += term;
      if (term < 1e-16) break;
    }
    const double value = std::pow(double(k + 1), omega) * (prefix + tail);
    if (value > out.value) {
      out.value = value;
      out.argmax = k;
    }
  }
  return out;
}

PerronSolution solve_fullline(const LinearCocycle& c,
                              const DichotomySplitting& s_plus,
                              const DichotomySplitting& s_minus,
                              const WeightedSeq& f) {
  const IndexWindow w = c.window();
  if (!(w.lo < 0 && w.hi > 0))
    throw WindowMismatch("solve_fullline expects a window straddling 0");
  if (!(f.window == w)) throw WindowMismatch("inhomogeneity window differs");
  if (!(s_plus.window == IndexWindow(0, w.hi)))
    throw WindowMismatch("s_plus must live on [0, hi]");
  if (!(s_minus.window == IndexWindow(w.lo, 0)))
    throw WindowMismatch("s_minus must live on [lo, 0]");

  const int d = c.dim();

  // positive ray: f+ takes f_k for k >= 1 (f_0 is consumed by the
  // negative ray, matching the half-line convention f_0 = 0).
  LinearCocycle c_plus = restrict_cocycle(c, IndexWindow(0, w.hi));
  WeightedSeq f_plus = zero_seq(IndexWindow(0, w.hi), d, f.omega);
  for (long k = 1; k <= w.hi; ++k) f_plus.at(k) = f.at(k);
  PerronSolution sol_plus = solve_halfline(c_plus, s_plus, f_plus);

  // negative ray, solved through the time-reversed cocycle on [0, -lo]:
  // x~_j = x_{-j}, A~_j = A_{-j-1}^{-1}, f~_{j+1} = -A~_j f_{-j}.
  LinearCocycle c_minus = restrict_cocycle(c, IndexWindow(w.lo, 0));
  LinearCocycle rev = time_reversed(c_minus);
  const long n = -w.lo;
  DichotomySplitting s_rev;
  s_rev.window = IndexWindow(0, n);
  s_rev.K = s_minus.K;
  s_rev.lambda = s_minus.lambda;
  s_rev.projections.resize(static_cast<std::size_t>(n + 1));
  for (long j = 0; j <= n; ++j)
    s_rev.projections[static_cast<std::size_t>(j)] = s_minus.Q(-j);
  WeightedSeq f_rev = zero_seq(IndexWindow(0, n), d, f.omega);
  for (long j = 1; j <= n; ++j)
    f_rev.at(j) = -(rev.map(j - 1) * f.at(1 - j));
  PerronSolution sol_rev = solve_halfline(rev, s_rev, f_rev);

  // gluing of the two ray solutions at 0 by homogeneous corrections
  // phi+ in S_0^+ and phi- in U_0^-:  psi0+ - psi0- = phi0- - phi0+.
  const Vector psi_plus_0 = sol_plus.y.at(0);
  const Vector psi_minus_0 = sol_rev.y.at(0);
  const Vector mismatch = psi_plus_0 - psi_minus_0;
  const Matrix basis_plus = projection_range_basis(s_plus.P(0));
  const Matrix basis_minus = projection_range_basis(s_minus.Q(0));
  Vector phi_plus_0 = Vector::Zero(d);
  Vector phi_minus_0 = Vector::Zero(d);
  const double mnorm = mismatch.norm();
  if (mnorm > 0.0) {
    const long cols = basis_minus.cols() + basis_plus.cols();
    Vector coeff;
    Vector reached = Vector::Zero(d);
    if (cols > 0) {
      Matrix glue(d, cols);
      if (basis_minus.cols() > 0) glue.leftCols(basis_minus.cols()) = basis_minus;
      if (basis_plus.cols() > 0) glue.rightCols(basis_plus.cols()) = -basis_plus;
      Eigen::JacobiSVD<Matrix> svd(glue,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      coeff = svd.solve(mismatch);
      reached = glue * coeff;
    }
    const double rel = (reached - mismatch).norm() / mnorm;
    if (rel > 1e-8)
      throw GluingNotSolvable(
          rel, "B+ and B- cannot span the gluing mismatch (relative residual " +
                   std::to_string(rel) + ")");
    if (basis_minus.cols() > 0)
      phi_minus_0 = basis_minus * coeff.head(basis_minus.cols());
    if (basis_plus.cols() > 0)
      phi_plus_0 = basis_plus * coeff.tail(basis_plus.cols());
  }

  // assemble: psi_k = psi-_k + phi-_k for k <= 0, psi+_k + phi+_k for k > 0.
  WeightedSeq y = zero_seq(w, d, f.omega);
  Vector phi = phi_plus_0;
  for (long k = 0; k <= w.hi; ++k) {
    if (k > 0) phi = s_plus.P(k) * (c.map(k - 1) * phi);
    y.at(k) = sol_plus.y.at(k) + phi;
  }
  phi = phi_minus_0;
  for (long k = 0; k >= w.lo; --k) {
    if (k < 0) phi = s_minus.Q(k) * (c.inverse(k) * phi);
    y.at(k) = sol_rev.y.at(-k) + phi;
  }

  PerronSolution sol;
  sol.y = std::move(y);
  sol.norm_omega = weighted_norm(sol.y);
  sol.residual = max_residual(c, sol.y, f);
  sol.truncation_bound =
      std::max(sol_plus.truncation_bound, sol_rev.truncation_bound);
  return sol;
}

WeightedSeq theta_witness(const LinearCocycle& c,
                          const DichotomySplitting& s_plus, Vector eta,
                          double omega, double a) {
  const IndexWindow w = c.window();
  if (!w.contains(0)) throw ZeroNotInWindow("theta_witness requires 0 in window");
  if (!(s_plus.window == IndexWindow(0, w.hi)))
    throw WindowMismatch("s_plus must live on [0, hi]");
  if (!(a > 0.0 && a < 1.0)) throw DomainError("theta_witness: a must be in (0,1)");
  if (omega < 0.0) throw DomainError("theta_witness: omega must be >= 0");
  if (eta.norm() == 0.0) throw EtaNotUnstable("eta must be a unit vector");
  eta.normalize();
  if ((s_plus.Q(0) * eta).norm() < 0.99)
    throw EtaNotUnstable("eta has a substantial stable component");

  WeightedSeq f = zero_seq(w, c.dim(), omega);
  Vector dir = eta;
  f.at(0) = a * dir;
  for (long i = 1; i <= w.hi; ++i) {
    dir = s_plus.Q(i) * (c.map(i - 1) * dir);
    const double len = dir.norm();
    if (len == 0.0)
      throw EtaNotUnstable("Phi_{i,0} eta vanished while propagating");
    dir /= len;
    f.at(i) = a * std::pow(double(i + 1), -omega) * dir;
  }
  return f;
}

WeightedSeq theta_sequence(const LinearCocycle& c, const WeightedSeq& f) {
  if (!(f.window == c.window()))
    throw WindowMismatch("theta_sequence: window mismatch");
  const IndexWindow w = c.window();
  WeightedSeq theta = zero_seq(w, c.dim(), f.omega);
  Vector cur = Vector::Zero(c.dim());
  theta.at(w.hi) = cur;
  for (long k = w.hi - 1; k >= w.lo; --k) {
    cur = c.inverse(k) * (cur - f.at(k + 1));
    theta.at(k) = cur;
  }
  return theta;
}

MinNormSolution window_min_norm_solution(const LinearCocycle& c,
                                         const WeightedSeq& f, double omega) {
  const IndexWindow w = c.window();
  if (!w.contains(0))
    throw ZeroNotInWindow("window_min_norm_solution requires 0 in window");
  if (!(f.window == w)) throw WindowMismatch("inhomogeneity window differs");
  const int d = c.dim();
  const long n = w.length();

  // particular solution with x_lo = 0 and the homogeneous columns Phi_{k,lo}
  std::vector<Vector> part(static_cast<std::size_t>(n));
  std::vector<Matrix> cols(static_cast<std::size_t>(n));
  part[0] = Vector::Zero(d);
  cols[0] = Matrix::Identity(d, d);
  for (long k = w.lo; k < w.hi; ++k) {
    const std::size_t i = w.offset(k);
    part[i + 1] = c.map(k) * part[i] + f.at(k + 1);
    cols[i + 1] = c.map(k) * cols[i];
  }

  Matrix lsq(n * d, d);
  Vector rhs(n * d);
  for (long k = w.lo; k <= w.hi; ++k) {
    const std::size_t i = w.offset(k);
    const double wt = weight_of(k, omega);
    lsq.middleRows(static_cast<long>(i) * d, d) = wt * cols[i];
    rhs.segment(static_cast<long>(i) * d, d) = -wt * part[i];
  }
  Eigen::BDCSVD<Matrix> svd(lsq, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector v = svd.solve(rhs);

  MinNormSolution out;
  out.solution = zero_seq(w, d, omega);
  for (long k = w.lo; k <= w.hi; ++k) {
    const std::size_t i = w.offset(k);
    out.solution.at(k) = part[i] + cols[i] * v;
  }
  out.min_norm = weighted_norm(out.solution);
  return out;
}

}  // namespace dicho
