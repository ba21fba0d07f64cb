#include "dicho/weighted.hpp"

#include <algorithm>
#include <cmath>

#include "dicho/errors.hpp"

namespace dicho {

WeightedSeq zero_seq(IndexWindow window, int dim, double omega) {
  WeightedSeq s;
  s.window = window;
  s.omega = omega;
  s.vectors.assign(static_cast<std::size_t>(window.length()),
                   Vector::Zero(dim));
  return s;
}

double weighted_norm(const WeightedSeq& s) {
  double best = 0.0;
  for (long k = s.window.lo; k <= s.window.hi; ++k)
    best = std::max(best, s.at(k).norm() * weight_of(k, s.omega));
  return best;
}

WeightedSeq impulse(IndexWindow window, long s, const Vector& xi,
                    double omega) {
  if (!window.contains(s))
    throw IndexOutOfWindow("impulse index " + std::to_string(s) +
                           " outside window");
  WeightedSeq out = zero_seq(window, static_cast<int>(xi.size()), omega);
  out.at(s) = xi;
  return out;
}

double envelope_ratio(const WeightedSeq& s, double d, double gamma) {
  if (d <= 0.0) throw DomainError("envelope_ratio: d must be positive");
  double best = 0.0;
  for (long k = s.window.lo; k <= s.window.hi; ++k)
    best = std::max(best, s.at(k).norm() * weight_of(k, gamma) / d);
  return best;
}

static void check_compatible(const WeightedSeq& a, const WeightedSeq& b) {
  if (!(a.window == b.window))
    throw WindowMismatch("sequence windows differ");
  if (a.omega != b.omega)
    throw DomainError("sequence weights differ; re-tag omega explicitly");
}

WeightedSeq operator+(const WeightedSeq& a, const WeightedSeq& b) {
  check_compatible(a, b);
  WeightedSeq out = a;
  for (std::size_t i = 0; i < out.vectors.size(); ++i)
    out.vectors[i] += b.vectors[i];
  return out;
}

WeightedSeq operator-(const WeightedSeq& a, const WeightedSeq& b) {
  check_compatible(a, b);
  WeightedSeq out = a;
  for (std::size_t i = 0; i < out.vectors.size(); ++i)
    out.vectors[i] -= b.vectors[i];
  return out;
}

WeightedSeq operator*(double a, const WeightedSeq& s) {
  WeightedSeq out = s;
  for (auto& v : out.vectors) v *= a;
  return out;
}

}  // namespace dicho
