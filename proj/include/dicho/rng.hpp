#pragma once

#include <cstdint>
#include <random>

namespace dicho {

/// Deterministic uniform draw in [0,1) from the generator's raw bits;
/// avoids std::uniform_real_distribution so streams are identical across
/// standard library implementations.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace dicho
