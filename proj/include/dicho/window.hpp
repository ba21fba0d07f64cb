#pragma once

#include <cstddef>
#include <string>

#include "dicho/errors.hpp"

namespace dicho {

/// Inclusive integer interval [lo, hi]. All sequence and cocycle data in
/// the library lives on such finite windows; indices are absolute (the
/// weight |k|+1 is always taken around 0, not around lo).
struct IndexWindow {
  long lo = 0;
  long hi = 0;

  IndexWindow() = default;
  IndexWindow(long lo_, long hi_) : lo(lo_), hi(hi_) {
    if (lo > hi)
      throw DomainError("IndexWindow: lo > hi (" + std::to_string(lo) +
                        " > " + std::to_string(hi) + ")");
  }

  long length() const { return hi - lo + 1; }
  bool contains(long k) const { return k >= lo && k <= hi; }

  /// Zero-based storage offset of absolute index k.
  std::size_t offset(long k) const {
    if (!contains(k))
      throw IndexOutOfWindow("index " + std::to_string(k) +
                             " outside window [" + std::to_string(lo) + "," +
                             std::to_string(hi) + "]");
    return static_cast<std::size_t>(k - lo);
  }

  bool operator==(const IndexWindow& o) const = default;
};

}  // namespace dicho
