#include "doctest.h"

#include <random>

#include "dicho/errors.hpp"
#include "dicho/weighted.hpp"
#include "generators.hpp"

using namespace dicho;

TEST_CASE("weighted_norm basics") {
  // x_k = (|k|+1)^{-1} e1 with omega = 1: weights cancel exactly
  WeightedSeq s = zero_seq(IndexWindow(-3, 3), 2, 1.0);
  for (long k = -3; k <= 3; ++k)
    s.at(k) = Vector::Unit(2, 0) / weight_of(k, 1.0);
  CHECK(weighted_norm(s) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(weighted_norm(zero_seq(IndexWindow(-3, 3), 2, 1.0)) == 0.0);

  WeightedSeq imp = impulse(IndexWindow(0, 5), 2, Vector::Unit(2, 0), 1.0);
  CHECK(weighted_norm(imp) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("impulse") {
  WeightedSeq imp = impulse(IndexWindow(0, 5), 2, Vector::Unit(3, 0));
  int nonzero = 0;
  for (const auto& v : imp.vectors)
    if (v.norm() > 0.0) ++nonzero;
  CHECK(nonzero == 1);

  WeightedSeq z = impulse(IndexWindow(0, 5), 0, Vector::Zero(2));
  CHECK(weighted_norm(z) == 0.0);

  CHECK(weighted_norm(impulse(IndexWindow(-4, 4), 3, Vector::Unit(2, 1), 2.0)) ==
        doctest::Approx(16.0).epsilon(1e-14));

  CHECK_THROWS_AS(impulse(IndexWindow(0, 5), 7, Vector::Unit(2, 0)),
                  IndexOutOfWindow);
}

TEST_CASE("envelope_ratio") {
  const double d = 0.3, gamma = 1.5;
  WeightedSeq s = zero_seq(IndexWindow(-5, 5), 2, 0.0);
  for (long k = -5; k <= 5; ++k)
    s.at(k) = d / weight_of(k, gamma) * Vector::Unit(2, 0);
  CHECK(envelope_ratio(s, d, gamma) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(envelope_ratio(zero_seq(IndexWindow(-5, 5), 2, 0.0), d, gamma) == 0.0);

  WeightedSeq imp = impulse(IndexWindow(-5, 5), 0, 2.0 * d * Vector::Unit(2, 0));
  CHECK(envelope_ratio(imp, d, gamma) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(envelope_ratio(imp, 0.0, gamma), DomainError);
}

TEST_CASE("norm properties on random pairs") {
  std::mt19937_64 gen(3);
  const IndexWindow w(-8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const double omega = 2.0 * uniform01(gen);
    WeightedSeq a = dicho::testing::random_seq(w, 3, omega, 1.0 + uniform01(gen), gen);
    WeightedSeq b = dicho::testing::random_seq(w, 3, omega, uniform01(gen), gen);
    const double alpha = 2.0 * uniform01(gen) - 1.0;

    // absolute homogeneity and triangle inequality
    CHECK(weighted_norm(alpha * a) ==
          doctest::Approx(std::abs(alpha) * weighted_norm(a)).epsilon(1e-12));
    CHECK(weighted_norm(a + b) <=
          weighted_norm(a) + weighted_norm(b) + 1e-12);

    // omega = 0 reduces to the plain sup norm
    WeightedSeq flat = a;
    flat.omega = 0.0;
    double sup = 0.0;
    for (const auto& v : flat.vectors) sup = std::max(sup, v.norm());
    CHECK(weighted_norm(flat) == sup);

    // monotone in omega
    WeightedSeq heavier = a;
    heavier.omega = a.omega + 0.7;
    CHECK(weighted_norm(heavier) >= weighted_norm(a) - 1e-15);
  }
}
