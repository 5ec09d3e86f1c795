#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "pwprox/common.hpp"
#include "pwprox/scalar.hpp"

namespace pwprox {

/// Brute-force proximal map used as ground truth.
///
/// Scans (v - x)^2 / (2s) + f(v) on a uniform grid of spacing `resolution`
/// over [x - halfwidth, x + halfwidth], keeps the best few grid-local minima
/// and refines each by a golden-section pass over its neighbouring grid cells
/// down to `refine_tol`. The caller must choose halfwidth large enough to
/// bracket the true minimiser.
template <class F>
double prox_oracle(const F& f, double s, double x, double halfwidth, double resolution, double refine_tol = 1e-10) {
  if (!(s > 0.0)) throw ModelError("prox_oracle: s must be positive");
  if (!(resolution > 0.0)) throw ModelError("prox_oracle: resolution must be positive");
  if (!(halfwidth >= 0.0)) throw ModelError("prox_oracle: halfwidth must be nonnegative");

  const auto objective = [&](double v) {
    const double y = (v - x) * (v - x) / (2.0 * s) + f(v);
    if (!std::isfinite(y)) throw NumericError("prox_oracle: non-finite objective at v = " + std::to_string(v));
    return y;
  };

  const double lo = x - halfwidth;
  const long n = static_cast<long>(std::floor(2.0 * halfwidth / resolution)) + 1;
  const auto grid = [&](long i) { return i == n - 1 && n > 1 ? x + halfwidth : lo + static_cast<double>(i) * resolution; };

  constexpr std::size_t kKeep = 8;
  std::array<ScalarCandidate, kKeep> minima{};
  std::array<long, kKeep> where{};
  std::size_t kept = 0;
  const auto remember = [&](long i, double obj) {
    ScalarCandidate c{grid(i), obj};
    if (kept < kKeep) {
      minima[kept] = c;
      where[kept] = i;
      ++kept;
      return;
    }
    std::size_t worst = 0;
    for (std::size_t j = 1; j < kKeep; ++j) {
      if (preferred(minima[worst], minima[j])) worst = j;
    }
    if (preferred(c, minima[worst])) {
      minima[worst] = c;
      where[worst] = i;
    }
  };

  double prev = objective(grid(0));
  if (n == 1) return grid(0);
  double cur = objective(grid(1));
  if (prev <= cur) remember(0, prev);
  for (long i = 1; i + 1 < n; ++i) {
    const double next = objective(grid(i + 1));
    if (cur <= prev && cur <= next) remember(i, cur);
    prev = cur;
    cur = next;
  }
  if (cur <= prev) remember(n - 1, cur);

  ScalarCandidate best = minima[0];
  for (std::size_t j = 0; j < kept; ++j) {
    if (preferred(minima[j], best)) best = minima[j];
  }
  for (std::size_t j = 0; j < kept; ++j) {
    double a = grid(std::max(0L, where[j] - 1));
    double b = grid(std::min(n - 1, where[j] + 1));
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 200 && b - a > refine_tol; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = objective(x2);
      }
    }
    for (double v : {x1, x2, 0.5 * (a + b)}) {
      ScalarCandidate c{v, objective(v)};
      if (preferred(c, best)) best = c;
    }
  }
  return best.v;
}

}  // namespace pwprox
