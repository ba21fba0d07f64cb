#include "dicho/dichotomy.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "dicho/errors.hpp"

namespace dicho {

namespace {

constexpr double kContrastCap = 1e12;   // stop product accumulation here
constexpr double kGapFactor = 10.0;     // required straddling ratio
constexpr double kDirectSumCond = 1e8;  // reject worse S (+) U bases

Matrix orthonormalize(const Matrix& m) {
  if (m.cols() == 0) return m;
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return q;
}

/// Running SVD of a product of matrices, largest singular value scaled out
/// into a log10 accumulator so long hyperbolic products never overflow.
struct ProductSvd {
  Matrix U, V;
  Vector sigma;       // descending, sigma(0) == 1
  double log10_max = 0.0;
  int steps = 0;

  explicit ProductSvd(int d)
      : U(Matrix::Identity(d, d)),
        V(Matrix::Identity(d, d)),
        sigma(Vector::Ones(d)) {}

  void absorb_left(const Matrix& b) {
    Matrix c = (b * U) * sigma.asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    U = svd.matrixU();
    V = V * svd.matrixV();
    Vector s = svd.singularValues();
    const double top = s(0);
    sigma = s / top;
    log10_max += std::log10(top);
    ++steps;
  }

  double contrast() const {
    const double tail = std::max(sigma(sigma.size() - 1), 1e-300);
    return 1.0 / tail;
  }

  double log10_sigma(int i) const {
    return std::log10(std::max(sigma(i), 1e-300)) + log10_max;
  }
};

/// Accumulates Phi_{., k} forward from k (or Phi_{., k} backward toward lo)
/// until the window edge or the contrast cap.
ProductSvd accumulate(const LinearCocycle& c, long k, Direction dir) {
  ProductSvd p(c.dim());
  if (dir == Direction::forward) {
    for (long j = k; j < c.window().hi; ++j) {
      if (p.contrast() >= kContrastCap) break;
      p.absorb_left(c.map(j));
    }
  } else {
    for (long j = k - 1; j >= c.window().lo; --j) {
      if (p.contrast() >= kContrastCap) break;
      p.absorb_left(c.inverse(j));
    }
  }
  return p;
}

/// Number of singular values strictly below the absolute threshold.
int count_below(const ProductSvd& p, double threshold) {
  const double logt = std::log10(threshold);
  int r = 0;
  for (int i = 0; i < p.sigma.size(); ++i)
    if (p.log10_sigma(i) < logt) ++r;
  return r;
}

/// Straddling-ratio gap check around the threshold; throws when ambiguous.
void require_gap(const ProductSvd& p, double threshold, const char* side) {
  const int d = static_cast<int>(p.sigma.size());
  const int r = count_below(p, threshold);
  const double logt = std::log10(threshold);
  double log_gap;
  if (r == 0)
    log_gap = p.log10_sigma(d - 1) - logt;
  else if (r == d)
    log_gap = logt - p.log10_sigma(0);
  else
    log_gap = p.log10_sigma(d - 1 - r) - p.log10_sigma(d - r);
  if (log_gap < std::log10(kGapFactor))
    throw NoGapDetected(std::string("ambiguous singular-value split (") +
                        side + " side): straddling ratio " +
                        std::to_string(std::pow(10.0, log_gap)) + " < 10");
}

/// Columns of V spanning the r smallest singular directions (singular
/// values are kept in descending order).
Matrix small_directions(const ProductSvd& p, int r) {
  return p.V.rightCols(r);
}

constexpr double kTrustedLogContrast = 10.0;  // direct estimates need 1e10

struct DirectTrack {
  std::vector<Matrix> basis;
  std::vector<double> log_contrast;
};

DirectTrack direct_track(const LinearCocycle& c, int rank, Direction dir) {
  const IndexWindow w = c.window();
  DirectTrack out;
  out.basis.resize(static_cast<std::size_t>(w.length()));
  out.log_contrast.resize(static_cast<std::size_t>(w.length()));
  for (long k = w.lo; k <= w.hi; ++k) {
    ProductSvd p = accumulate(c, k, dir);
    const std::size_t i = w.offset(k);
    out.log_contrast[i] = std::log10(p.contrast());
    out.basis[i] = small_directions(p, rank);
  }
  return out;
}

Matrix orthogonal_complement(const Matrix& b, int dim) {
  if (b.cols() == 0) return Matrix::Identity(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(b);
  Matrix q = qr.householderQ();
  return q.rightCols(dim - b.cols());
}

/// Subspace tracks for the splitting estimate. Direct SVD splits carry an
/// error of order 1/contrast and are kept only where the contrast resolves
/// them (trusted zone: the long-horizon end of the window). The remaining
/// stretch is filled by exactly invariant chain propagation toward the
/// short-horizon end, seeded with the orthogonal complement of the
/// opposite bundle there; a finite window cannot determine the subspace at
/// that end anyway, and the invariant chain keeps the projector family
/// defect-free while the fitted constants absorb the tilt.
struct SplitTracks {
  std::vector<Matrix> stable;
  std::vector<Matrix> unstable;
};

SplitTracks track_subspaces(const LinearCocycle& c, int r_s, int r_u) {
  const IndexWindow w = c.window();
  const long n = w.length();
  const int d = c.dim();
  SplitTracks out;
  out.stable.assign(static_cast<std::size_t>(n), Matrix(d, 0));
  out.unstable.assign(static_cast<std::size_t>(n), Matrix(d, 0));

  DirectTrack s_dir, u_dir;
  if (r_s > 0) s_dir = direct_track(c, r_s, Direction::forward);
  if (r_u > 0) u_dir = direct_track(c, r_u, Direction::backward);

  // U: trusted suffix of direct estimates (backward horizon grows with k),
  // forward-invariant chain below it, seeded at lo by the complement of
  // the stable direct estimate there.
  if (r_u > 0) {
    long k_u = w.hi + 1;
    for (long k = w.hi; k >= w.lo; --k) {
      if (u_dir.log_contrast[w.offset(k)] < kTrustedLogContrast) break;
      k_u = k;
    }
    for (long k = std::max(k_u, w.lo); k <= w.hi; ++k)
      out.unstable[w.offset(k)] = u_dir.basis[w.offset(k)];
    if (k_u > w.lo) {
      Matrix seed = r_s > 0 ? orthogonal_complement(s_dir.basis[0], d)
                            : Matrix(Matrix::Identity(d, d));
      out.unstable[0] = seed;
      for (long k = w.lo + 1; k < std::min(k_u, w.hi + 1); ++k)
        out.unstable[w.offset(k)] =
            orthonormalize(c.map(k - 1) * out.unstable[w.offset(k - 1)]);
    }
  }

  // S: trusted prefix of direct estimates, backward-invariant chain above
  // it, seeded at hi by the complement of the unstable track there.
  if (r_s > 0) {
    long k_s = w.lo - 1;
    for (long k = w.lo; k <= w.hi; ++k) {
      if (s_dir.log_contrast[w.offset(k)] < kTrustedLogContrast) break;
      k_s = k;
    }
    for (long k = w.lo; k <= std::min(k_s, w.hi); ++k)
      out.stable[w.offset(k)] = s_dir.basis[w.offset(k)];
    if (k_s < w.hi) {
      out.stable[w.offset(w.hi)] =
          orthogonal_complement(out.unstable[w.offset(w.hi)], d);
      for (long k = w.hi - 1; k > std::max(k_s, w.lo - 1); --k)
        out.stable[w.offset(k)] =
            orthonormalize(c.inverse(k) * out.stable[w.offset(k + 1)]);
    }
  }
  return out;
}

double least_squares_slope(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace

void check_splitting(const DichotomySplitting& s, const Tolerances& tol) {
  if (s.projections.size() != static_cast<std::size_t>(s.window.length()))
    throw DomainError("splitting: projection count != window length");
  if (!(s.K > 0.0)) throw DomainError("splitting: K must be positive");
  if (!(s.lambda > 0.0 && s.lambda < 1.0))
    throw DomainError("splitting: lambda must lie in (0,1)");
  long rank = -1;
  for (long k = s.window.lo; k <= s.window.hi; ++k) {
    const Matrix& p = s.P(k);
    const double defect = spectral_norm(p * p - p);
    if (defect > tol.identity)
      throw DomainError("splitting: P_" + std::to_string(k) +
                        " is not a projection (defect " +
                        std::to_string(defect) + ")");
    const long r = std::lround(p.trace());
    if (rank < 0) rank = r;
    if (r != rank)
      throw DomainError("splitting: rank of P_k not constant over window");
  }
}

std::vector<NormSample> measure_green_families(const LinearCocycle& c,
                                               const DichotomySplitting& s,
                                               int jobs) {
  const IndexWindow w = c.window();
  auto measure_from = [&](long l, std::vector<NormSample>& out) {
    Matrix g = s.P(l);
    out.push_back({l, l, 0.0, spectral_norm(g), true});
    for (long k = l + 1; k <= w.hi; ++k) {
      g = s.P(k) * (c.map(k - 1) * g);
      out.push_back({k, l, double(k - l), spectral_norm(g), true});
    }
    Matrix h = s.Q(l);
    out.push_back({l, l, 0.0, spectral_norm(h), false});
    for (long k = l - 1; k >= w.lo; --k) {
      h = s.Q(k) * (c.inverse(k) * h);
      out.push_back({k, l, double(l - k), spectral_norm(h), false});
    }
  };

  if (jobs <= 1) {
    std::vector<NormSample> samples;
    samples.reserve(2 * static_cast<std::size_t>(w.length()) *
                    static_cast<std::size_t>(w.length()));
    for (long l = w.lo; l <= w.hi; ++l) measure_from(l, samples);
    return samples;
  }

  const long n = w.length();
  const int workers = static_cast<int>(std::min<long>(jobs, n));
  std::vector<std::vector<NormSample>> chunks(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      for (long l = w.lo + t; l <= w.hi; l += workers)
        measure_from(l, chunks[static_cast<std::size_t>(t)]);
    });
  }
  for (auto& th : pool) th.join();
  std::vector<NormSample> samples;
  for (auto& chunk : chunks)
    samples.insert(samples.end(), chunk.begin(), chunk.end());
  return samples;
}

Matrix projection_range_basis(const Matrix& P) {
  const int r = static_cast<int>(std::lround(P.trace()));
  if (r <= 0) return Matrix(P.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(r);
}

DichotomyReport verify_dichotomy(const LinearCocycle& c,
                                 const DichotomySplitting& s,
                                 const Tolerances& tol) {
  if (!(c.window() == s.window))
    throw WindowMismatch("cocycle and splitting windows differ");
  check_splitting(s, tol);

  DichotomyReport rep;
  rep.K = s.K;
  rep.lambda = s.lambda;
  rep.overflow_warning = c.overflow_flagged();

  // ratios are normalized per step (geometric root over the separation),
  // so a violation reads as the excess factor per index, independent of
  // how long the pair's product is
  const auto samples = measure_green_families(c, s);
  for (const auto& smp : samples) {
    const double allowed = s.K * std::pow(s.lambda, smp.separation);
    double ratio = allowed > 0 ? smp.norm / allowed : 0.0;
    if (smp.separation > 1.0 && ratio > 0.0)
      ratio = std::pow(ratio, 1.0 / smp.separation);
    double& worst = smp.stable ? rep.worst_stable_ratio : rep.worst_unstable_ratio;
    worst = std::max(worst, ratio);
    if (ratio > 1.0 + tol.identity && rep.failing.size() < 256)
      rep.failing.emplace_back(smp.k, smp.l);
  }

  for (long k = s.window.lo; k <= s.window.hi; ++k) {
    const double pn = spectral_norm(s.P(k));
    const double qn = spectral_norm(s.Q(k));
    rep.worst_projector_norm = std::max({rep.worst_projector_norm, pn, qn});
  }
  for (long k = s.window.lo; k < s.window.hi; ++k) {
    const Matrix& a = c.map(k);
    const double defect =
        spectral_norm(a * s.P(k) - s.P(k + 1) * a) / spectral_norm(a);
    rep.worst_invariance_defect = std::max(rep.worst_invariance_defect, defect);
  }

  rep.passed = rep.worst_stable_ratio <= 1.0 + tol.identity &&
               rep.worst_unstable_ratio <= 1.0 + tol.identity &&
               rep.worst_invariance_defect <= tol.identity &&
               rep.worst_projector_norm <= s.K * (1.0 + tol.identity);
  return rep;
}

DichotomySplitting estimate_splitting(const LinearCocycle& c,
                                      double rank_tol) {
  const IndexWindow w = c.window();
  if (w.length() < 4)
    throw DomainError("estimate_splitting: window length must be >= 4");
  const int d = c.dim();

  ProductSvd fwd = accumulate(c, w.lo, Direction::forward);
  require_gap(fwd, rank_tol, "forward");
  const int r_s = count_below(fwd, rank_tol);

  ProductSvd bwd = accumulate(c, w.hi, Direction::backward);
  require_gap(bwd, rank_tol, "backward");
  const int r_u = count_below(bwd, rank_tol);

  if (r_s + r_u != d)
    throw NoGapDetected("stable rank " + std::to_string(r_s) +
                        " + unstable rank " + std::to_string(r_u) +
                        " does not equal dimension " + std::to_string(d));

  const SplitTracks tracks = track_subspaces(c, r_s, r_u);

  DichotomySplitting out;
  out.window = w;
  out.projections.resize(static_cast<std::size_t>(w.length()));
  for (long k = w.lo; k <= w.hi; ++k) {
    const std::size_t i = w.offset(k);
    if (r_s == 0) {
      out.projections[i] = Matrix::Zero(d, d);
      continue;
    }
    if (r_u == 0) {
      out.projections[i] = Matrix::Identity(d, d);
      continue;
    }
    Matrix su(d, d);
    su << tracks.stable[i], tracks.unstable[i];
    Eigen::JacobiSVD<Matrix> svd(su);
    const double cond =
        svd.singularValues()(0) / std::max(svd.singularValues()(d - 1), 1e-300);
    if (cond > kDirectSumCond)
      throw NoGapDetected("S_k (+) U_k ill-conditioned at k = " +
                          std::to_string(k) + " (cond " +
                          std::to_string(cond) + ")");
    out.projections[i] = tracks.stable[i] * su.inverse().topRows(r_s);
  }

  // fit (K, lambda): lambda from the joint log-linear regression of the
  // measured norms against separation, K as the max residual multiplier.
  out.K = 1.0;
  out.lambda = 0.5;
  const auto samples = measure_green_families(c, out);
  std::vector<double> xs, ys;
  for (const auto& smp : samples) {
    if (smp.norm < 1e-300) continue;
    xs.push_back(smp.separation);
    ys.push_back(std::log(smp.norm));
  }
  double lambda = std::exp(least_squares_slope(xs, ys));
  lambda = std::clamp(lambda, 1e-9, 1.0 - 1e-9);
  double K = 1e-300;
  for (const auto& smp : samples)
    K = std::max(K, smp.norm / std::pow(lambda, smp.separation));
  out.lambda = std::min(lambda * (1.0 + 1e-6), 1.0 - 1e-12);
  out.K = K * (1.0 + 1e-6);
  return out;
}

Matrix decaying_subspace(const LinearCocycle& c, Direction direction,
                         double decay_tol) {
  if (!c.window().contains(0))
    throw ZeroNotInWindow("decaying_subspace requires 0 in the window");
  ProductSvd p = accumulate(c, 0, direction);
  const int r = count_below(p, decay_tol);
  return small_directions(p, r);
}

SubspacePair make_subspace_pair(const Matrix& basis_plus,
                                const Matrix& basis_minus) {
  auto check_orthonormal = [](const Matrix& b, const char* name) {
    if (b.cols() == 0) return;
    const double defect =
        (b.transpose() * b - Matrix::Identity(b.cols(), b.cols())).norm();
    if (defect > 1e-10)
      throw DomainError(std::string(name) + " basis not orthonormal (defect " +
                        std::to_string(defect) + ")");
  };
  check_orthonormal(basis_plus, "plus");
  check_orthonormal(basis_minus, "minus");

  SubspacePair pair;
  pair.basis_plus = basis_plus;
  pair.basis_minus = basis_minus;
  if (basis_plus.cols() > 0 && basis_minus.cols() > 0) {
    Eigen::JacobiSVD<Matrix> svd(basis_plus.transpose() * basis_minus);
    const double cmax = std::clamp(svd.singularValues()(0), -1.0, 1.0);
    pair.min_principal_angle = std::acos(cmax);
  } else {
    pair.min_principal_angle = 0.0;
  }
  return pair;
}

TransversalityResult transversality_check(const SubspacePair& p, int dim) {
  TransversalityResult res;
  const long cols = p.basis_plus.cols() + p.basis_minus.cols();
  if (cols == 0) {
    res.transverse = (dim == 0);
    res.angle = 0.0;
    return res;
  }
  Matrix joint(dim, cols);
  if (p.basis_plus.cols() > 0) joint.leftCols(p.basis_plus.cols()) = p.basis_plus;
  if (p.basis_minus.cols() > 0)
    joint.rightCols(p.basis_minus.cols()) = p.basis_minus;
  Eigen::JacobiSVD<Matrix> svd(joint);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8) ++rank;
  res.transverse = (rank == dim);
  if (p.basis_plus.cols() > 0 && p.basis_minus.cols() > 0)
    res.angle = p.min_principal_angle;
  else
    res.angle = res.transverse ? std::acos(0.0) : 0.0;
  return res;
}

PlainConstants weighted_to_plain(double K1, double lambda1, double omega) {
  if (!(lambda1 > 0.0 && lambda1 < 1.0))
    throw DomainError("weighted_to_plain: lambda1 must lie in (0,1)");
  if (!(K1 > 0.0)) throw DomainError("weighted_to_plain: K1 must be positive");
  if (omega < 0.0) throw DomainError("weighted_to_plain: omega must be >= 0");

  const double lambda2 = std::sqrt(lambda1);
  // K2 = max_l K1 lambda1^{l/2} (l+1)^omega; the factor is unimodal in l,
  // scan past the analytic peak.
  long lstar = 0;
  if (omega > 0.0)
    lstar = static_cast<long>(std::ceil(-2.0 * omega / std::log(lambda1)));
  double K2 = 0.0;
  for (long l = 0; l <= lstar + 64; ++l)
    K2 = std::max(K2, K1 * std::pow(lambda1, 0.5 * double(l)) *
                          std::pow(double(l + 1), omega));
  const double K3 = std::pow(2.0, omega) * K1;

  PlainConstants out;
  out.lambda = std::max(lambda1, lambda2);
  out.K = std::max({K1, K2, K3});
  return out;
}

}  // namespace dicho
