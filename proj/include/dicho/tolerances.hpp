#pragma once

namespace dicho {

/// Global numeric tolerances. Defaults follow the library-wide convention
/// (1e-10 invertibility, 1e-8 identity checks); callers may override per
/// operation where an overload accepts a Tolerances value.
struct Tolerances {
  double invertibility = 1e-10;  // ||A * Ainv - I|| acceptance for stored inverses
  double identity = 1e-8;        // relative tolerance for algebraic identities
  double overflow_norm = 1e12;   // transition norms beyond this flag reports
};

}  // namespace dicho
