#pragma once

#include <vector>

#include "dicho/cocycle.hpp"
#include "dicho/window.hpp"

namespace dicho {

/// Element of the polynomially weighted space N_omega: a vector sequence
/// on a finite window with sup_k |x_k| (|k|+1)^omega as its norm. The
/// weight always uses the absolute index k (not the window offset), so
/// that gluing constructions at 0 are consistent.
struct WeightedSeq {
  IndexWindow window;
  double omega = 0.0;
  std::vector<Vector> vectors;

  const Vector& at(long k) const { return vectors[window.offset(k)]; }
  Vector& at(long k) { return vectors[window.offset(k)]; }
  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
};

/// (|k|+1)^omega
inline double weight_of(long k, double omega) {
  const double base = static_cast<double>(k < 0 ? -k : k) + 1.0;
  return omega == 0.0 ? 1.0 : std::pow(base, omega);
}

WeightedSeq zero_seq(IndexWindow window, int dim, double omega);

/// sup_k |x_k| (|k|+1)^omega  (Euclidean vector norm).
double weighted_norm(const WeightedSeq& s);

/// Sequence equal to xi at index s and zero elsewhere.
WeightedSeq impulse(IndexWindow window, long s, const Vector& xi,
                    double omega = 0.0);

/// max_k |x_k| (|k|+1)^gamma / d. A value <= 1 certifies the envelope
/// |x_k| <= d (|k|+1)^{-gamma} on the window.
double envelope_ratio(const WeightedSeq& s, double d, double gamma);

WeightedSeq operator+(const WeightedSeq& a, const WeightedSeq& b);
WeightedSeq operator-(const WeightedSeq& a, const WeightedSeq& b);
WeightedSeq operator*(double a, const WeightedSeq& s);

}  // namespace dicho
