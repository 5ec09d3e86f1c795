#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "pwprox/common.hpp"

namespace pwprox {

inline double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// sign(y) * max(|y| - t, 0)
inline double soft_threshold(double y, double t) {
  const double mag = std::abs(y) - t;
  return mag > 0.0 ? std::copysign(mag, y) : 0.0;
}

/// A candidate minimiser of a scalar proximal objective.
struct ScalarCandidate {
  double v = 0.0;
  double objective = kInf;
};

/// Objectives closer than this (relative, floored at 1) count as ties.
inline constexpr double kTieTolerance = 1e-12;

/// Strict preference between two candidates: lower objective, and among
/// ties (within kTieTolerance) the smaller |v|, then the smaller v.
inline bool preferred(const ScalarCandidate& a, const ScalarCandidate& b) {
  const double tol = kTieTolerance * std::max({1.0, std::abs(a.objective), std::abs(b.objective)});
  if (a.objective < b.objective - tol) return true;
  if (b.objective < a.objective - tol) return false;
  if (std::abs(a.v) != std::abs(b.v)) return std::abs(a.v) < std::abs(b.v);
  return a.v < b.v;
}

/// Minimise a convex scalar function on [lo, hi] (bounds may be infinite).
/// Infinite sides are bracketed by doubling outward from `start`; the bracket
/// is then shrunk by golden-section search. Throws NumericError when no
/// bracket is found or the function is not finite.
double minimize_convex_1d(const std::function<double(double)>& phi, double lo, double hi, double start);

}  // namespace pwprox
