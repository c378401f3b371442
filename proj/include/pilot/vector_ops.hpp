#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pilot/errors.hpp"

namespace pilot {

/// All optimizer arithmetic runs on flat 64-bit float vectors.
using DenseVector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw SignalCorruption(std::string(what) + ": non-finite value at index " +
                             std::to_string(i));
    }
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractViolation("dot: length mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Overflow-safe L2 norm: rescales by the largest magnitude before squaring,
/// so inputs near DBL_MAX do not blow up to inf in the accumulator.
inline double stable_l2_norm(std::span<const double> a) {
  double peak = 0.0;
  for (double x : a) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : a) {
    const double s = x / peak;
    acc += s * s;
  }
  return peak * std::sqrt(acc);
}

}  // namespace pilot
