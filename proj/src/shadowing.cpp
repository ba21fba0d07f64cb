#include "dicho/shadowing.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dicho/errors.hpp"
#include "dicho/rng.hpp"

namespace dicho {

const Matrix& PropertyCData::B(long k) const {
  if (k < window.lo || k > window.hi - 1)
    throw IndexOutOfWindow("B index " + std::to_string(k) + " outside window");
  return right_inverses[static_cast<std::size_t>(k - window.lo)];
}

PropertyCReport verify_property_C(const LinearCocycle& c,
                                  const PropertyCData& data,
                                  const Tolerances& tol) {
  if (!(c.window() == data.window))
    throw WindowMismatch("cocycle and property (C) windows differ");
  const IndexWindow w = data.window;

  PropertyCReport rep;
  for (long k = w.lo; k <= w.hi; ++k) {
    rep.worst_projector_norm =
        std::max({rep.worst_projector_norm, spectral_norm(data.P(k)),
                  spectral_norm(data.Q(k))});
  }

  for (long k = w.lo; k < w.hi; ++k) {
    const Matrix& a = c.map(k);
    const Matrix s_cur = projection_range_basis(data.P(k));
    const Matrix s_next = projection_range_basis(data.P(k + 1));
    if (s_cur.cols() > 0) {
      const Matrix image = a * s_cur;
      rep.worst_stable_contraction =
          std::max(rep.worst_stable_contraction, spectral_norm(image));
      const Matrix off =
          image - s_next * (s_next.transpose() * image);
      rep.worst_inclusion_defect =
          std::max(rep.worst_inclusion_defect, spectral_norm(off));
    }
    const Matrix u_cur = projection_range_basis(data.Q(k));
    const Matrix u_next = projection_range_basis(data.Q(k + 1));
    if (u_next.cols() > 0) {
      const Matrix bu = data.B(k) * u_next;
      rep.worst_inverse_norm =
          std::max(rep.worst_inverse_norm, spectral_norm(bu));
      const Matrix off = bu - u_cur * (u_cur.transpose() * bu);
      rep.worst_inverse_range_defect =
          std::max(rep.worst_inverse_range_defect, spectral_norm(off));
      rep.worst_inverse_identity_defect =
          std::max(rep.worst_inverse_identity_defect,
                   spectral_norm(a * bu - u_next));
    }
  }

  rep.passed = rep.worst_projector_norm <= data.N * (1.0 + tol.identity) &&
               rep.worst_stable_contraction <=
                   data.lambda * (1.0 + tol.identity) &&
               rep.worst_inclusion_defect <= tol.identity &&
               rep.worst_inverse_norm <= data.lambda * (1.0 + tol.identity) &&
               rep.worst_inverse_range_defect <= tol.identity &&
               rep.worst_inverse_identity_defect <= tol.identity;
  return rep;
}

PropertyCData property_c_from_splitting(const LinearCocycle& c,
                                        const DichotomySplitting& s) {
  if (!(c.window() == s.window))
    throw WindowMismatch("cocycle and splitting windows differ");
  const IndexWindow w = s.window;
  const int d = c.dim();

  PropertyCData data;
  data.window = w;
  data.projections = s.projections;

  double lam = 0.0;
  double n_bound = 1.0;
  for (long k = w.lo; k <= w.hi; ++k)
    n_bound = std::max({n_bound, spectral_norm(data.P(k)),
                        spectral_norm(data.Q(k))});

  data.right_inverses.resize(static_cast<std::size_t>(w.length() - 1));
  for (long k = w.lo; k < w.hi; ++k) {
    const Matrix& a = c.map(k);
    const Matrix s_cur = projection_range_basis(data.P(k));
    if (s_cur.cols() > 0)
      lam = std::max(lam, spectral_norm(Matrix(a * s_cur)));

    const Matrix u_cur = projection_range_basis(data.Q(k));
    const Matrix u_next = projection_range_basis(data.Q(k + 1));
    const std::size_t i = static_cast<std::size_t>(k - w.lo);
    if (u_next.cols() == 0) {
      data.right_inverses[i] = Matrix::Zero(d, d);
      continue;
    }
    // pseudo-inverse of A_k restricted to U: B = U_k m^{-1} U_{k+1}^T
    const Matrix m = u_next.transpose() * (a * u_cur);
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues()(m.cols() - 1) < 1e-12 * c.norm_bound())
      throw DomainError("A_k restricted to U is numerically singular at k = " +
                        std::to_string(k));
    const Matrix b = u_cur * m.inverse() * u_next.transpose();
    data.right_inverses[i] = b;
    lam = std::max(lam, spectral_norm(Matrix(b * u_next)));
  }

  data.N = std::max(n_bound * (1.0 + 1e-6), 1.0 + 1e-9);
  data.lambda = lam * (1.0 + 1e-6);
  if (!(data.lambda > 0.0 && data.lambda < 1.0))
    throw NotContraction("splitting does not contract: lambda = " +
                         std::to_string(data.lambda));
  return data;
}

ShadowingConstants shadowing_constants(double N, double lambda, double kappa,
                                       double Delta) {
  if (!(N > 1.0)) throw DomainError("shadowing_constants: N must exceed 1");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw DomainError("shadowing_constants: lambda must lie in (0,1)");
  if (kappa < 0.0) throw DomainError("shadowing_constants: kappa must be >= 0");
  if (!(Delta > 0.0)) throw DomainError("shadowing_constants: Delta must be positive");

  ShadowingConstants out;
  out.N = N;
  out.lambda = lambda;
  out.kappa = kappa;
  out.Delta = Delta;
  out.N1 = N * (1.0 + lambda) / (1.0 - lambda);
  if (kappa * out.N1 >= 1.0)
    throw NotContraction("kappa * N1 = " + std::to_string(kappa * out.N1) +
                         " >= 1");
  out.L = out.N1 / (1.0 - kappa * out.N1);
  out.d0 = Delta / out.L;
  return out;
}

GreenApplied green_apply(const WeightedSeq& z, const LinearCocycle& c,
                         const PropertyCData& data, double gamma) {
  if (!(z.window == c.window()) || !(data.window == c.window()))
    throw WindowMismatch("green_apply: windows differ");
  const IndexWindow w = c.window();
  const int d = c.dim();

  WeightedSeq y = zero_seq(w, d, gamma);
  // g1: forward sum over the stable bundle
  Vector g1 = data.P(w.lo) * z.at(w.lo);
  y.at(w.lo) = g1;
  for (long k = w.lo + 1; k <= w.hi; ++k) {
    g1 = data.P(k) * (c.map(k - 1) * g1 + z.at(k));
    y.at(k) = g1;
  }
  // g2: backward sum through the right inverses
  Vector g2 = Vector::Zero(d);
  for (long k = w.hi - 1; k >= w.lo; --k) {
    g2 = data.B(k) * (g2 - data.Q(k + 1) * z.at(k + 1));
    y.at(k) += g2;
  }

  GreenApplied out;
  out.y = std::move(y);
  out.y.omega = gamma;
  WeightedSeq zz = z;
  zz.omega = gamma;
  out.tail_bound = data.N * data.lambda / (1.0 - data.lambda) *
                   weighted_norm(zz);
  return out;
}

NonlinearSequenceSystem make_nonlinear_system(
    LinearCocycle cocycle, std::function<Vector(long, const Vector&)> w,
    double kappa, double Delta, double gamma, int samples,
    std::uint64_t seed) {
  const IndexWindow win = cocycle.window();
  const int d = cocycle.dim();

  NonlinearSequenceSystem sys{std::move(cocycle), std::move(w),
                              zero_seq(win, d, gamma), kappa, Delta};
  const Vector zero = Vector::Zero(d);
  for (long k = win.lo; k < win.hi; ++k)
    sys.offsets.at(k) = sys.w(k + 1, zero);  // f_k(0) = w_{k+1}(0)

  if (samples > 0) {
    std::mt19937_64 gen(seed);
    auto draw_in_ball = [&]() {
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = 2.0 * uniform01(gen) - 1.0;
      const double len = v.norm();
      if (len > 0.0) v *= (Delta * uniform01(gen)) / len;
      return v;
    };
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const long span = win.hi - win.lo;
      const long k = win.lo + 1 + static_cast<long>(uniform01(gen) * double(span));
      const Vector a = draw_in_ball();
      const Vector b = draw_in_ball();
      const double dist = (a - b).norm();
      if (dist < 1e-12) continue;
      worst = std::max(worst, (sys.w(k, a) - sys.w(k, b)).norm() / dist);
    }
    if (worst > kappa * (1.0 + 1e-6) + 1e-12)
      throw DomainError("sampled Lipschitz constant " + std::to_string(worst) +
                        " exceeds declared kappa " + std::to_string(kappa));
  }
  return sys;
}

ShadowFixResult solve_nonlinear(const NonlinearSequenceSystem& sys,
                                const PropertyCData& data, double gamma,
                                const ShadowingConstants& consts,
                                double tol, int max_iter) {
  const IndexWindow w = sys.cocycle.window();
  if (!(data.window == w)) throw WindowMismatch("solve_nonlinear: windows differ");
  const int d = sys.cocycle.dim();

  WeightedSeq offsets = sys.offsets;
  offsets.omega = gamma;
  const double d_off = weighted_norm(offsets);
  const double kn1 = consts.kappa * consts.N1;
  if (kn1 >= 1.0) throw NotContraction("kappa * N1 >= 1");
  if (d_off > consts.d0)
    throw DomainError("||f_k(0)||_gamma = " + std::to_string(d_off) +
                      " exceeds d0 = " + std::to_string(consts.d0));

  ShadowFixResult res;
  res.v = zero_seq(w, d, gamma);

  WeightedSeq z = zero_seq(w, d, gamma);
  double prev_step = -1.0;
  bool converged = false;
  for (int iter = 1; iter <= max_iter; ++iter) {
    for (long k = w.lo + 1; k <= w.hi; ++k) {
      const Vector& vk = res.v.at(k - 1);
      if (vk.norm() > sys.Delta)
        throw DomainExit("iterate left the Delta-ball at k = " +
                         std::to_string(k - 1));
      z.at(k) = sys.w(k, vk);
    }
    WeightedSeq vnew = green_apply(z, sys.cocycle, data, gamma).y;
    const double step = weighted_norm(vnew - res.v);
    res.v = std::move(vnew);
    res.iterations = iter;
    res.final_step_norm = step;
    if (prev_step > 0.0)
      res.contraction_observed =
          std::max(res.contraction_observed, step / prev_step);
    if (step < tol) {
      converged = true;
      break;
    }
    prev_step = step;
  }
  if (!converged)
    throw MaxIterExceeded("no convergence in " + std::to_string(max_iter) +
                          " Picard steps");
  if (res.iterations > 2 &&
      res.contraction_observed > kn1 * 1.1 + 1e-12)
    throw NotContraction("observed step contraction " +
                         std::to_string(res.contraction_observed) +
                         " exceeds kappa*N1 = " + std::to_string(kn1));

  for (long k = w.lo; k <= w.hi; ++k)
    if (res.v.at(k).norm() > sys.Delta)
      throw DomainExit("solution left the Delta-ball at k = " +
                       std::to_string(k));

  res.norm_gamma = weighted_norm(res.v);
  for (long k = w.lo; k < w.hi; ++k) {
    const Vector lhs =
        sys.cocycle.map(k) * res.v.at(k) + sys.w(k + 1, res.v.at(k));
    res.residual = std::max(res.residual, (res.v.at(k + 1) - lhs).norm());
  }
  return res;
}

}  // namespace dicho
